#!/usr/bin/env python3
"""Write the canonical JSON fixtures used in the README walkthrough.

Usage: python scripts/gen_fixtures.py [outdir]
"""

import json
import pathlib
import sys

import numpy as np

from qcoarse import jsonio
from qcoarse.asdim import CoverFamily, greedy_cover
from qcoarse.moduli import MapTable
from qcoarse.qmetric import FiniteMetricSpace, KrausSet


def depolarizing(n):
    ops = []
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1 / np.sqrt(n)
            ops.append(e)
    return KrausSet(ops)


def main(argv=None):
    outdir = pathlib.Path((argv or sys.argv[1:] or ["fixtures"])[0])
    outdir.mkdir(parents=True, exist_ok=True)

    def write(name, obj):
        (outdir / name).write_text(json.dumps(obj, indent=2, sort_keys=True))
        print(outdir / name)

    write("depolarizing3.json", jsonio.kraus_to_json(depolarizing(3)))

    x = np.array([[0, 1], [1, 0]], dtype=complex)
    pauli = KrausSet([np.eye(2, dtype=complex) / np.sqrt(2), x / np.sqrt(2)])
    write("pauli_x_channel.json", jsonio.kraus_to_json(pauli))

    idx = np.arange(10)
    path10 = FiniteMetricSpace([str(i) for i in range(10)],
                               np.abs(idx[:, None] - idx[None, :]).astype(float))
    write("path10.json", jsonio.space_to_json(path10))
    write("subset_ends.json", [0, 9])
    write("subset_origin.json", [0])
    write("subset_far.json", [9])

    from qcoarse.matcore import Projection
    write("proj_e0.json", jsonio.projection_to_json(Projection.onto_subset(2, [0])))
    write("proj_i2.json", jsonio.projection_to_json(Projection.identity(2)))

    cover = greedy_cover(path10, r=2.0)
    write("path10_cover.json", jsonio.cover_to_json(cover.family))

    singletons = CoverFamily("classical", [[(i,) for i in range(4)]],
                             r=0.4, R=0.0, metadata="singletons fixture")
    write("singletons4.json", jsonio.cover_to_json(singletons))
    idx4 = np.arange(4)
    path4 = FiniteMetricSpace([str(i) for i in range(4)],
                              np.abs(idx4[:, None] - idx4[None, :]).astype(float))
    write("path4.json", jsonio.space_to_json(path4))

    y = np.arange(5)
    doubled = FiniteMetricSpace([str(i) for i in range(5)],
                                2.0 * np.abs(y[:, None] - y[None, :]))
    mapping = MapTable(
        FiniteMetricSpace([str(i) for i in range(5)],
                          np.abs(y[:, None] - y[None, :]).astype(float)),
        doubled, (0, 1, 2, 3, 4))
    write("doubling_map.json", jsonio.map_to_json(mapping))
    return 0


if __name__ == "__main__":
    sys.exit(main())
