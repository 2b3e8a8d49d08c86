"""Run the acceptance criteria and print one line per criterion.

    python3 scripts/run_acceptance.py [criterion numbers...]
"""
import sys
import tempfile

from lerw3d.acceptance import all_checks


def main(argv):
    wanted = {int(a) for a in argv} or set(range(1, 14))
    failed = 0
    with tempfile.TemporaryDirectory() as tmp:
        for number, check in enumerate(all_checks(tmp), 1):
            if number not in wanted:
                continue
            result = check()
            print(result.line(), flush=True)
            failed += not result.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
