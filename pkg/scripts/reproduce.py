"""Run the multi-seed protocol, the q sweep and the ratio sweep on one edge list.

    python scripts/reproduce.py data/soc-sign-bitcoinalpha.csv --out runs/alpha
    SDGRAPH_THREADS=4 python scripts/reproduce.py data/soc-sign-bitcoinotc.csv --out runs/otc --skip-sweeps

Each stage is a plain ``sdgcn`` CLI call, so the outputs are the usual
checkpoint, history, report and sweep CSV files.
"""
import argparse
import sys
from pathlib import Path

from sdgcn.cli import main as sdgcn

Q_GRID = ["0", "0.1pi", "0.2pi", "0.3pi", "0.4pi", "0.5pi"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("dataset")
    ap.add_argument("--out", default="runs/reproduce")
    ap.add_argument("--seeds", default="0,10,20,30,40,50,60,70,80,90")
    ap.add_argument("--skip-sweeps", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    common = ["--dataset", args.dataset, "--seeds", args.seeds]

    stages = [["verify", *common, "--sample-nodes", "1000", "--out", str(out / "verify")],
              ["train", *common, "--out", str(out / "train")]]
    if not args.skip_sweeps:
        q_flags = [f for q in Q_GRID for f in ("--q", q)]
        stages.append(["sweep-q", *common, *q_flags, "--out", str(out / "sweep_q")])
        stages.append(["sweep-ratio", *common, "--out", str(out / "sweep_ratio")])
    for argv in stages:
        print("$ sdgcn " + " ".join(argv), flush=True)
        code = sdgcn(argv)
        if code:
            sys.exit(code)


if __name__ == "__main__":
    main()
