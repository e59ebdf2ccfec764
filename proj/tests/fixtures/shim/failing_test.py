import sys
import unittest


class Failing(unittest.TestCase):
    def test_assertion(self):
        sys.stderr.write("stderr from a failing test\n")
        self.assertEqual("expected", "actual")


if __name__ == "__main__":
    unittest.main()
