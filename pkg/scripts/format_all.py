"""Run format-check over every shipped signature and fixture."""

import sys
from importlib import resources

from sosbench.cli import main


def shipped():
    root = resources.files("sosbench") / "signatures"
    names = sorted(p.name for p in root.iterdir() if p.name.endswith(".sig"))
    names += sorted("fixtures/" + p.name for p in (root / "fixtures").iterdir() if p.name.endswith(".sig"))
    return names


if __name__ == "__main__":
    for name in shipped():
        print(f"== {name}")
        code = main(["format-check", name])
        print(f"exit {code}\n")
    sys.exit(0)
