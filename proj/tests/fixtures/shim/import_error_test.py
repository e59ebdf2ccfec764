import unittest

from os import no_such_name


class Unreachable(unittest.TestCase):
    def test_never_runs(self):
        self.assertTrue(no_such_name)


if __name__ == "__main__":
    unittest.main()
