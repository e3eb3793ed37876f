#!/usr/bin/env python3
"""Download the USPS dataset (LibSVM format, train + test) into ./data.

Usage: python scripts/fetch_usps.py [--dest DIR]

Needs outbound HTTPS; run it on a networked machine and copy the two
files next to the repository (or point SPECAGG_DATA at them).
"""

import argparse
import sys
import urllib.request
from pathlib import Path

BASE = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/multiclass"
FILES = ["usps.bz2", "usps.t.bz2"]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dest", default="data", help="target directory (default: data)")
    args = parser.parse_args()

    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    for name in FILES:
        target = dest / name
        if target.exists():
            print(f"{target} already present, skipping")
            continue
        url = f"{BASE}/{name}"
        print(f"downloading {url} ...")
        with urllib.request.urlopen(url) as resp:
            target.write_bytes(resp.read())
        print(f"wrote {target} ({target.stat().st_size} bytes)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
