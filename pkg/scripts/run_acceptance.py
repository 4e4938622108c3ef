"""Evaluate the acceptance criteria and print one PASS/FAIL line each.

Usage: python3 scripts/run_acceptance.py [N ...] [--json PATH]
"""

import argparse
import json
from pathlib import Path

from fgnlse import acceptance as ac


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("criteria", nargs="*", type=int, default=list(ac.CRITERIA))
    ap.add_argument("--json", type=Path)
    args = ap.parse_args()
    results = ac.run_all(tuple(args.criteria))
    for cr in results:
        print(cr.line())
    if args.json:
        args.json.write_text(json.dumps([cr.to_dict() for cr in results], indent=2))
    return 0 if all(cr.passed for cr in results) else 2


if __name__ == "__main__":
    raise SystemExit(main())
