# Sphinx configuration for the pufentropy documentation.
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import os
import sys
sys.path.insert(0, os.path.abspath('../'))

# -- Project information -----------------------------------------------------

project = 'pufentropy'
copyright = '2024, pufentropy developers'
author = 'pufentropy developers'

# -- General configuration ---------------------------------------------------

extensions = [
    'myst_parser',
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.autosummary',
    'sphinx.ext.intersphinx',
    'sphinx_autodoc_typehints',
]

# cross-references into the numerical stack
intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable', None),
    'scipy': ('https://docs.scipy.org/doc/scipy', None),
}

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

# the package re-exports every module, so the short names resolve
add_module_names = False
autodoc_member_order = 'bysource'
autosummary_generate = True

# doctests in the topic pages run against the installed package
doctest_global_setup = 'import pufentropy as pe'

# -- Options for HTML output -------------------------------------------------

html_theme = "sphinx_rtd_theme"
