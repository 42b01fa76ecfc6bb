"""Write a tiny deterministic logistic-regression CSV (label, features)
for the distributed simulator example config.

Usage: python3 scripts/gen_logistic_csv.py [PATH]
"""

import sys

import numpy as np

from fwlab.rng import RngStream


def main():
    path = sys.argv[1] if len(sys.argv) > 1 else "scripts/configs/logistic_tiny.csv"
    rng = RngStream(2)
    n, d = 40, 6
    A = rng.normal(size=(n, d))
    y = np.sign(rng.normal(size=n))
    y[y == 0] = 1
    with open(path, "w") as fh:
        for i in range(n):
            feats = ",".join(f"{v:.8f}" for v in A[i])
            fh.write(f"{int(y[i])},{feats}\n")
    print(f"wrote {path} ({n} rows, {d} features)")


if __name__ == "__main__":
    main()
