from typing import List
from subprocess import run as launch


def launch_tool(args: List[str]):
    return launch(args,
        capture_output=True,
        check=True,
        )
