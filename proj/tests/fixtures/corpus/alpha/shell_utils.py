"""Helpers around the system shell."""
import subprocess as sp


def run_cmd(cmd):
    return sp.run(cmd, shell=True, capture_output=True)


def list_dir(path):
    result = sp.run(["ls", "-l", path], capture_output=True, text=True)
    return result.stdout
