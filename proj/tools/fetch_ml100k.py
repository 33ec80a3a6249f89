#!/usr/bin/env python3
"""Fetch MovieLens-100K ratings into data/ml-100k/u.data.

Tries the GroupLens archive first. When that host is unreachable, falls back
to the copy of ml-100k.inter bundled in the `recbole` wheel, which carries the
same 100,000 rows plus a one-line header.
"""
import argparse
import io
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GROUPLENS_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
WHEEL_MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def from_grouplens():
    with urllib.request.urlopen(GROUPLENS_URL, timeout=20) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    return archive.read("ml-100k/u.data").decode()


def from_wheel():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
             "-d", tmp, "recbole==1.2.1"],
            check=True)
        wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        text = zipfile.ZipFile(wheel).read(WHEEL_MEMBER).decode()
    lines = text.splitlines()
    if lines and lines[0].startswith("user_id"):
        lines = lines[1:]
    return "\n".join(lines) + "\n"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--dest", default=str(
        pathlib.Path(__file__).resolve().parent.parent / "data" / "ml-100k"))
    args = parser.parse_args()
    dest = pathlib.Path(args.dest)
    target = dest / "u.data"
    if target.exists():
        print(f"{target} already present")
        return 0
    try:
        text = from_grouplens()
    except Exception as err:  # noqa: BLE001
        print(f"grouplens unavailable ({err}); using recbole wheel copy")
        text = from_wheel()
    rows = [l for l in text.splitlines() if l.strip()]
    if len(rows) != 100000:
        print(f"unexpected row count {len(rows)}", file=sys.stderr)
        return 1
    dest.mkdir(parents=True, exist_ok=True)
    target.write_text("\n".join(rows) + "\n")
    print(f"wrote {len(rows)} ratings to {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
