import os

import numpy as np

VALUE_TABLES = os.path.join(os.path.dirname(__file__), "value_tables")

#: long Monte-Carlo runs are only executed if this environment variable is set
LONG_TESTS = bool(os.environ.get("PUFENTROPY_LONG_TESTS"))


def load_table(name):
    """
    Load a tab-separated value table as string array (one row per line).
    """
    return np.loadtxt(os.path.join(VALUE_TABLES, name), ndmin=2, dtype=str, delimiter='\t', comments=None)


def ints(text):
    return [int(v) for v in text.split()]
