from unittest import TestCase

import inspect
import os
import re

import pufentropy

TEMPLATES = os.path.join(os.path.dirname(__file__), os.pardir, "docs", "_templates")


def read_template(name):
    with open(os.path.join(TEMPLATES, name)) as f:
        return f.read()


class TestApiTemplates(TestCase):

    def test_special_members(self):
        text = read_template("custom-class-template.rst")
        self.assertNotIn(":inherited-members:", text)
        names = re.search(r":special-members: (.*)", text).group(1).split(", ")
        classes = [obj for _, obj in inspect.getmembers(pufentropy, inspect.isclass)
                   if obj.__module__.startswith("pufentropy.")]
        # every listed operator is defined by some class of the package itself
        for name in names:
            self.assertTrue(any(name in vars(cls) for cls in classes), name)

    def test_module_sections(self):
        text = read_template("custom-module-template.rst")
        for rubric in ["Constants and Tables", "Functions", "Types", "Errors"]:
            self.assertIn(f".. rubric:: {rubric}", text)
        # errors get the class template so that their hierarchy is shown
        errors = text[text.index("block exceptions"):]
        self.assertIn(":template: custom-class-template.rst", errors)
