"""Write a synthetic who-trusts-whom edge list shaped like the Bitcoin trust networks.

Node activity follows a heavy-tailed distribution and each node carries a
latent reputation; a rating u -> v is negative with a probability that grows
as v's reputation falls. The output uses the SNAP ``source,target,rating,time``
CSV layout so it can stand in for the real files in smoke runs.

    python scripts/make_synthetic_trust.py out.csv --nodes 3783 --edges 24186
"""
import argparse

import numpy as np


def generate(nodes: int, edges: int, neg_fraction: float, seed: int):
    rng = np.random.default_rng(seed)
    activity = rng.pareto(1.5, nodes) + 1.0
    activity /= activity.sum()
    reputation = rng.standard_normal(nodes)
    seen = set()
    rows = []
    # shift chosen so that roughly neg_fraction of ratings come out negative
    shift = np.quantile(reputation, neg_fraction)
    while len(rows) < edges:
        u, v = rng.choice(nodes, size=2, p=activity)
        if u == v or (u, v) in seen:
            continue
        seen.add((u, v))
        p_neg = 1.0 / (1.0 + np.exp(4.0 * (reputation[v] - shift)))
        sign = -1 if rng.random() < p_neg else 1
        rating = sign * int(rng.integers(1, 11))
        rows.append((u, v, rating, len(rows)))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--nodes", type=int, default=3783)
    ap.add_argument("--edges", type=int, default=24186)
    ap.add_argument("--neg-fraction", type=float, default=0.063)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rows = generate(args.nodes, args.edges, args.neg_fraction, args.seed)
    with open(args.out, "w") as fh:
        for u, v, r, t in rows:
            fh.write(f"{u},{v},{r},{t}\n")


if __name__ == "__main__":
    main()
