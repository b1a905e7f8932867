"""Tests for the package manifest."""

import ast
import os
import unittest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def dev_extra():
    with open(os.path.join(ROOT, "setup.py"), encoding="utf-8") as f:
        tree = ast.parse(f.read())
    for node in ast.walk(tree):
        if isinstance(node, ast.keyword) and node.arg == "extras_require":
            return ast.literal_eval(node.value)["dev"]
    raise AssertionError("setup.py declares no extras_require")


class TestDevExtra(unittest.TestCase):
    """The dev extra installs the same tools as requirements-dev.txt."""

    def test_matches_requirements_dev(self):
        with open(os.path.join(ROOT, "requirements-dev.txt"), encoding="utf-8") as f:
            pinned = [line.strip() for line in f if line.strip() and not line.startswith("-r")]
        self.assertEqual(sorted(dev_extra()), sorted(pinned))

    def test_formatters_and_type_checker_present(self):
        names = {req.split(">=")[0] for req in dev_extra()}
        self.assertTrue({"black", "isort", "mypy", "flake8"} <= names)


if __name__ == "__main__":
    unittest.main()
