"""Runs the unittest cases of one file and prints a single JSON record.

usage: runner_shim.py TEST_FILE
"""
import importlib.util
import json
import os
import sys
import tempfile
import time
import traceback
import unittest

LIMIT = 8 * 1024


class _Result(unittest.TestResult):
    def __init__(self):
        super().__init__()
        self.first_error = None

    def addError(self, test, err):
        super().addError(test, err)
        if self.first_error is None:
            self.first_error = err[0].__name__


def _load(path):
    sys.path.insert(0, os.path.dirname(os.path.abspath(path)))
    name = os.path.splitext(os.path.basename(path))[0]
    spec = importlib.util.spec_from_file_location(name, path)
    module = importlib.util.module_from_spec(spec)
    sys.modules[name] = module
    spec.loader.exec_module(module)
    return module


def _read(f):
    f.seek(0)
    return f.read().decode("utf-8", errors="replace")


def run_test_file(path):
    start = time.monotonic()
    status, kind = "error", None
    out_f = tempfile.TemporaryFile()
    err_f = tempfile.TemporaryFile()
    saved_out, saved_err = os.dup(1), os.dup(2)
    sys.stdout.flush()
    sys.stderr.flush()
    os.dup2(out_f.fileno(), 1)
    os.dup2(err_f.fileno(), 2)
    try:
        try:
            module = _load(path)
        except BaseException as exc:
            traceback.print_exc()
            kind = type(exc).__name__
        else:
            suite = unittest.defaultTestLoader.loadTestsFromModule(module)
            result = _Result()
            suite.run(result)
            for test, text in result.errors + result.failures:
                sys.stderr.write("%s\n%s\n" % (test, text))
            if result.errors:
                kind = result.first_error or "Error"
            elif result.failures:
                status = "failed"
            elif result.testsRun == 0:
                kind = "NoTestsFound"
            else:
                status = "passed"
    finally:
        sys.stdout.flush()
        sys.stderr.flush()
        os.dup2(saved_out, 1)
        os.dup2(saved_err, 2)
        os.close(saved_out)
        os.close(saved_err)

    stdout, stderr = _read(out_f), _read(err_f)
    record = {
        "status": status,
        "error_kind": kind,
        "duration_ms": int((time.monotonic() - start) * 1000),
        "stdout": stdout[:LIMIT],
        "stderr": stderr[-LIMIT:],
    }
    sys.stdout.write(json.dumps(record) + "\n")
    sys.stdout.flush()


def main(argv):
    if len(argv) != 2:
        sys.stderr.write(__doc__)
        return 2
    run_test_file(argv[1])
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
