"""Compare hoC and hoD with and without the removal condition.

Prints, per n, the gap |hoC - hoD|, |hoC|, |tr F_{n,m-1}| and the removal
quantity for the removal config and its control.
"""

import argparse
from pathlib import Path

from toeplitz_lab.harness.config import ScenarioConfig
from toeplitz_lab.harness.report import render_table
from toeplitz_lab.harness.runner import run_scenario

ROOT = Path(__file__).resolve().parents[1]


def study(path):
    rep = run_scenario(ScenarioConfig.load(path))
    tf = {r["n"]: r for r in rep.checks["traceF"]}
    rows = []
    for r in rep.rows:
        gap, hoC = abs(r["hoC"] - r["hoD"]), abs(r["hoC"])
        rows.append([r["n"], f"{gap:.3e}", f"{hoC:.3e}", f"{gap / hoC:.3f}",
                     f"{tf[r['n']]['trace_F']:.3e}", f"{tf[r['n']]['removal']:.4f}"])
    return render_table(["n", "gap", "abs_hoC", "gap/hoC", "abs_trF", "removal"], rows)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("configs", nargs="*", type=Path,
                   default=[ROOT / "configs" / "removal.json", ROOT / "configs" / "removal_control.json"])
    args = p.parse_args(argv)
    for path in args.configs:
        print(f"# {path.stem}")
        print(study(path))


if __name__ == "__main__":
    main()
