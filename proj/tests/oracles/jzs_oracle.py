"""Frozen reference Bayes factors for the default t-test.

Independent of the C++ code path: scipy's noncentral t density and a plain
10^6-point trapezoid in phi, where delta = r tan(phi) makes the Cauchy prior
uniform on phi. Writes tests/data/jzs_oracle.json.
"""
import json
import pathlib

import numpy as np
from scipy import stats

POINTS = 1_000_000
SCALES = [np.sqrt(0.5), 1.0, np.sqrt(2.0)]
SIDES = ["two-sided", "greater", "less"]


def bf10(t, n, side, r):
    df = n - 1
    lo, hi = {"two-sided": (-np.pi / 2, np.pi / 2),
              "greater": (0.0, np.pi / 2),
              "less": (-np.pi / 2, 0.0)}[side]
    phi = np.linspace(lo, hi, POINTS)
    inner = phi[1:-1]  # tan blows up at +-pi/2 where the integrand vanishes
    delta = r * np.tan(inner)
    with np.errstate(all="ignore"):
        lik = stats.nct.pdf(t, df, delta * np.sqrt(n))
    lik = np.nan_to_num(lik, nan=0.0, posinf=0.0)
    f = np.concatenate(([0.0], lik, [0.0]))
    marginal = np.trapezoid(f, phi) / (hi - lo)
    return marginal / stats.t.pdf(t, df)


def main():
    rng = np.random.default_rng(20261018)
    cases = []
    for k in range(50):
        n = int(rng.integers(5, 61))
        mu = float(rng.normal(0.0, 0.6))
        sd = float(rng.uniform(0.3, 3.0))
        x = rng.normal(mu, sd, size=n)
        null = float(rng.choice([0.0, 0.0, 0.5]))
        side = SIDES[k % 3]
        r = float(SCALES[(k // 3) % 3])
        t = (x.mean() - null) / (x.std(ddof=1) / np.sqrt(n))
        cases.append({"samples": [float(v) for v in x], "null": null, "side": side,
                      "scale": r, "t": float(t), "bf": float(bf10(t, n, side, r))})
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "jzs_oracle.json"
    out.write_text(json.dumps({"points": POINTS, "cases": cases}, indent=1) + "\n")


if __name__ == "__main__":
    main()
