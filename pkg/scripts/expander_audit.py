#!/usr/bin/env python3
"""Audit random mixed-unitary expanders across sizes.

For each (n, d, seed): measured spectral gap, worst sampled Cheeger quantity
against the guaranteed bound, isoperimetric rank-growth statistics, and the
rank-vs-diameter check.  Emits one JSON object per instance (plot-ready).

Usage: python scripts/expander_audit.py --sizes 8 16 32 --d 4 --seed 7 \
           --trials 200 > audit.jsonl
"""

import argparse
import json
import sys

import numpy as np

from qcoarse.expander import (
    cheeger_lower_bound,
    cheeger_quantity,
    random_expander,
    random_projection,
    spectral_gap,
    verify_isoperimetric,
    verify_rank_diameter,
)
from qcoarse.qmetric import graph_metric


def audit(n, d, seed, trials):
    spec = random_expander(n, d, seed)
    kraus = spec.kraus()
    metric = graph_metric(kraus)
    rep = spectral_gap(kraus)
    bound = cheeger_lower_bound(rep)
    worst = np.inf
    for t in range(trials):
        rng = np.random.default_rng([seed, 1, t])
        worst = min(worst, cheeger_quantity(kraus, random_projection(n, rng)))
    iso = verify_isoperimetric(spec, delta=1.5, trials=trials, seed=seed,
                               metric=metric)
    rd_failures = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, 2, t])
        if not verify_rank_diameter(metric, random_projection(n, rng)).bound_ok:
            rd_failures += 1
    return {
        "n": n,
        "d": d,
        "seed": seed,
        "epsilon": rep.epsilon,
        "cheeger_bound": bound,
        "cheeger_min_sampled": worst,
        "cheeger_margin": worst - bound,
        "isoperimetric_violations": iso.violations,
        "isoperimetric_min_ratio": iso.min_ratio,
        "orthogonality_pairs": iso.orthogonality_pairs,
        "orthogonality_failures": iso.orthogonality_failures,
        "rank_diameter_failures": rd_failures,
        "power_dims": [metric.power(k).dim for k in range(metric.m_stab + 1)],
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--trials", type=int, default=200)
    args = ap.parse_args(argv)
    for n in args.sizes:
        row = audit(n, args.d, args.seed, args.trials)
        print(json.dumps(row, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
