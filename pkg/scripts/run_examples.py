#!/usr/bin/env python3
"""Re-derive all built-in examples and print their assertion tables."""

import argparse
import sys

from switchctrl.verify import BUNDLES, verify_example


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("names", nargs="*", default=sorted(BUNDLES),
                        help="examples to run (default: all)")
    args = parser.parse_args()

    all_ok = True
    for name in args.names:
        print(f"== {name} ==")
        for a in verify_example(name, seed=args.seed):
            print("  " + a.line())
            all_ok = all_ok and a.ok
    return 0 if all_ok else 2


if __name__ == "__main__":
    sys.exit(main())
