"""Run every scenario in configs/ and write CSV + JSON reports to outputs/."""

import argparse
import sys
import time
from pathlib import Path

from toeplitz_lab.errors import ToeplitzLabError
from toeplitz_lab.harness.config import ScenarioConfig
from toeplitz_lab.harness.report import emit_report
from toeplitz_lab.harness.runner import run_scenario

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("names", nargs="*", help="config stems (default: all)")
    p.add_argument("--configs", type=Path, default=ROOT / "configs")
    p.add_argument("--out", type=Path, default=ROOT / "outputs")
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)

    paths = [args.configs / f"{n}.json" for n in args.names] or sorted(args.configs.glob("*.json"))
    for path in paths:
        t0 = time.perf_counter()
        cfg = ScenarioConfig.load(path)
        try:
            rep = run_scenario(cfg, args.workers)
        except ToeplitzLabError as exc:
            print(f"{path.stem:20s} skipped: {exc}")
            continue
        emit_report(rep, args.out / f"{path.stem}.csv", "csv")
        emit_report(rep, args.out / f"{path.stem}.json", "json")
        d = rep.delta
        trend = f"{d.trend:.3f}" if d is not None else "-"
        print(f"{path.stem:20s} rows={len(rep.rows):2d} trend={trend:>7s} "
              f"errors={len(rep.errors)} {time.perf_counter() - t0:6.1f}s")
        for e in rep.errors:
            print(f"    {e}", file=sys.stderr)


if __name__ == "__main__":
    main()
