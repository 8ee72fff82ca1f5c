"""Freeze t-test, CI, and Pearson oracle values into tests/fixtures/.

Uses scipy.stats (present in the dev environment, deliberately NOT a package
dependency) so the package's own statistics code is checked against an
independent implementation. Run once: python3 tools/make_stats_oracle.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy import stats

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def ttest_case(values):
    arr = np.asarray(values, dtype=float)
    n = arr.size
    t, p = stats.ttest_1samp(arr, 1.0)
    half = stats.t.ppf(0.975, n - 1) * arr.std(ddof=1) / np.sqrt(n)
    return {
        "values": list(map(float, arr)),
        "mean": float(arr.mean()),
        "t": float(t),
        "p": float(p),
        "ci95_half_width": float(half),
    }


def pearson_case(x, y):
    r, p = stats.pearsonr(np.asarray(x, float), np.asarray(y, float))
    return {"x": list(map(float, x)), "y": list(map(float, y)),
            "r": float(r), "p": float(p)}


def main() -> None:
    rng = np.random.default_rng(777)
    sample10 = np.round(rng.normal(1.05, 0.2, 10), 6)
    sample6 = np.round(rng.normal(0.92, 0.1, 6), 6)
    x10 = np.round(rng.normal(0.0, 1.0, 10), 6)
    y10 = np.round(0.6 * x10 + rng.normal(0.0, 0.8, 10), 6)
    x12 = np.round(rng.uniform(0, 5, 12), 6)
    y12 = np.round(-1.4 * x12 + rng.normal(0, 2.0, 12), 6)

    oracle = {
        "ttest": [
            ttest_case([1.1, 1.2, 1.3]),
            ttest_case([0.9, 1.0, 1.1]),
            ttest_case(sample10),
            ttest_case(sample6),
            ttest_case([0.5, 0.5, 0.5, 0.9]),
        ],
        "pearson": [
            pearson_case([1, 2, 3, 4, 5], [3, 5, 7, 9, 11]),      # y = 2x+1
            pearson_case([1, 2, 3, 4, 5], [-1, -2, -3, -4, -5]),  # y = -x
            pearson_case(x10, y10),
            pearson_case(x12, y12),
        ],
        "t_ppf_975": {str(df): float(stats.t.ppf(0.975, df)) for df in
                      (1, 2, 3, 5, 9, 29, 299)},
    }
    out = FIXTURE_DIR / "stats_oracle.json"
    out.write_text(json.dumps(oracle, indent=2, sort_keys=True))
    print(f"wrote {out}")
    for c in oracle["ttest"]:
        print(f"  t={c['t']:.6f} p={c['p']:.6f} ci={c['ci95_half_width']:.6f}")
    for c in oracle["pearson"]:
        print(f"  r={c['r']:.6f} p={c['p']:.6g}")


if __name__ == "__main__":
    main()
