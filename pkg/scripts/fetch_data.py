"""Fetch the Adult and COMPAS raw files into ./data (or --dest).

The files are taken from the ``responsibly`` 0.1.2 wheel on PyPI, which ships
byte-exact copies of the UCI Adult train/test files and the ProPublica
two-year COMPAS export. The wheel is downloaded with ``pip download`` (so any
configured index or proxy applies) unless ``--wheel`` points at a local copy.
Every extracted file is checked against a pinned SHA-256.

    python scripts/fetch_data.py [--dest data] [--wheel path/to/responsibly-0.1.2-py3-none-any.whl]
"""

import argparse
import hashlib
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

WHEEL = "responsibly==0.1.2"
FILES = {
    "responsibly/dataset/adult/adult.data": (
        "adult.data",
        "5b00264637dbfec36bdeaab5676b0b309ff9eb788d63554ca0a249491c86603d",
    ),
    "responsibly/dataset/adult/adult.test": (
        "adult.test",
        "a2a9044bc167a35b2361efbabec64e89d69ce82d9790d2980119aac5fd7e9c05",
    ),
    "responsibly/dataset/compas/compas-scores-two-years.csv": (
        "compas-scores-two-years.csv",
        "c451db85908b2f7fef1d83203bedf6b71ecda0d5af468d82ae62178f91d0cc7d",
    ),
}


def download_wheel(workdir: Path) -> Path:
    cmd = [sys.executable, "-m", "pip", "download", WHEEL, "--no-deps", "--only-binary", ":all:", "-d", str(workdir)]
    subprocess.run(cmd, check=True)
    wheels = sorted(workdir.glob("responsibly-*.whl"))
    if not wheels:
        raise SystemExit("pip download produced no wheel")
    return wheels[0]


def extract(wheel: Path, dest: Path) -> None:
    dest.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(wheel) as zf:
        for member, (name, digest) in FILES.items():
            blob = zf.read(member)
            got = hashlib.sha256(blob).hexdigest()
            if got != digest:
                raise SystemExit(f"{member}: sha256 {got} does not match the pinned {digest}")
            (dest / name).write_bytes(blob)
            print(f"wrote {dest / name} ({len(blob):,} bytes)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dest", default="data", help="output directory (default: ./data)")
    parser.add_argument("--wheel", help="use an already downloaded wheel instead of pip")
    args = parser.parse_args(argv)
    dest = Path(args.dest)
    if args.wheel:
        extract(Path(args.wheel), dest)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            extract(download_wheel(Path(tmp)), dest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
