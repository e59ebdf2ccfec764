import subprocess


def check_version(tool):
    out = subprocess.check_output(f"{tool} --version", shell=True)
    subprocess.call("true")
    return out.decode().strip()
