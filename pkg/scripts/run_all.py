"""Run every experiment config in scripts/configs and optionally check reproducibility.

    python3 scripts/run_all.py [--out results] [--seed 0] [--check]

With ``--check`` each experiment runs twice and the output files are compared
byte for byte.
"""

import argparse
import filecmp
import sys
import tempfile
import time
from pathlib import Path

from bergman_kit.cli import main

CONFIGS = Path(__file__).parent / "configs"


def run_once(out: Path, seed: int) -> dict:
    timings = {}
    for cfg in sorted(CONFIGS.glob("*.json")):
        start = time.perf_counter()
        code = main([cfg.stem, "--config", str(cfg), "--out", str(out), "--seed", str(seed)])
        timings[cfg.stem] = (code, time.perf_counter() - start)
    return timings


def main_cli() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--check", action="store_true")
    args = parser.parse_args()
    timings = run_once(args.out, args.seed)
    for name, (code, secs) in timings.items():
        print(f"{name:16s} exit={code} {secs:7.1f}s")
    failed = [n for n, (c, _) in timings.items() if c != 0]
    if args.check:
        with tempfile.TemporaryDirectory() as tmp:
            run_once(Path(tmp), args.seed)
            for f in sorted(args.out.glob("*.*")):
                same = filecmp.cmp(f, Path(tmp) / f.name, shallow=False)
                print(f"{f.name:24s} {'identical' if same else 'DIFFERS'}")
                if not same:
                    failed.append(f.name)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main_cli())
