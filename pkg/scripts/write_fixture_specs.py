#!/usr/bin/env python3
"""Regenerate the canonical spec files for the built-in systems into specs/."""

import argparse
from pathlib import Path

from switchctrl import fixtures
from switchctrl.model import serialize_spec


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="specs")
    args = parser.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in fixtures.FIXTURE_NAMES:
        path = out / f"{name.replace('-', '_')}.json"
        path.write_bytes(serialize_spec(fixtures.example_system(name)))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
