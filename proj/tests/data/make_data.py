"""Regenerates the small CSV fixtures used by the CLI smoke tests."""
import numpy as np

rng = np.random.default_rng(11)


def frame(n, with_g, collapse=False):
    x = rng.standard_normal((n, 3))
    region = rng.choice(["north", "south", "west"], size=n)
    r = 1.0 / (1.0 + np.exp(-(0.6 * x[:, 0] - 0.4 * x[:, 1] + 0.3 * x[:, 2])))
    k = (1 - 0.09) / 0.09
    p = np.clip(0.5 + 0.05 * x[:, 0], 0, 1) if collapse else rng.beta(r * k, (1 - r) * k)
    g = (rng.uniform(size=n) < p).astype(int)
    y = x @ np.array([1.0, 0.5, -0.5]) + g + rng.standard_normal(n)
    cols = ["x1", "x2", "x3", "region", "p", "y"] + (["g"] if with_g else [])
    lines = [",".join(cols)]
    for i in range(n):
        row = [f"{x[i, 0]:.6f}", f"{x[i, 1]:.6f}", f"{x[i, 2]:.6f}", region[i], f"{p[i]:.6f}", f"{y[i]:.6f}"]
        if with_g:
            row.append(str(g[i]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


with open("unlabelled.csv", "w") as f:
    f.write(frame(1500, False))
with open("labelled.csv", "w") as f:
    f.write(frame(300, True))
with open("collapse.csv", "w") as f:
    f.write(frame(600, False, collapse=True))
