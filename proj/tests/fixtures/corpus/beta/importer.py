import os.path
from subprocess import *


def start_service(command, workdir=None):
    if workdir and not os.path.isdir(workdir):
        raise ValueError(workdir)
    return Popen(command, shell=True, cwd=workdir)
