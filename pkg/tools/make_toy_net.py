"""Regenerate the toy network shipped in src/scalloc/data (toy_*.csv).

Usage: python tools/make_toy_net.py [seed]
"""

import sys
from pathlib import Path

import numpy as np

from scalloc.netsim import LayerSpec, NetworkSpec, WeightSet, float_outputs, save_matrix_csv

DATA = Path(__file__).resolve().parents[1] / "src" / "scalloc" / "data"


def main(seed=2024, n_samples=40, min_margin=0.3):
    rng = np.random.default_rng(seed)
    net = NetworkSpec(
        (
            LayerSpec("h1", "inner_product", 8, 8),
            LayerSpec("p1", "average_pool", 4, 2),
            LayerSpec("out", "inner_product", 2, 4),
        ),
        8,
    )
    weights = WeightSet({"h1": rng.uniform(-1, 1, (8, 8)), "out": rng.uniform(-1, 1, (2, 4))})
    rows = []
    while len(rows) < n_samples:
        x = rng.uniform(-1, 1, 8)
        y = float_outputs(net, weights, x)
        if abs(y[0] - y[1]) >= min_margin:
            rows.append([float(np.argmax(y)), *x])
    save_matrix_csv(weights["h1"], DATA / "toy_h1.csv")
    save_matrix_csv(weights["out"], DATA / "toy_out.csv")
    save_matrix_csv(np.array(rows), DATA / "toy_samples.csv")
    labels = [int(r[0]) for r in rows]
    print(f"wrote {len(rows)} samples, class balance {labels.count(0)}/{labels.count(1)}")


if __name__ == "__main__":
    main(*(int(a) for a in sys.argv[1:2]))
