"""Solve an exported LP file with SciPy's MILP interface (HiGHS).

Understands the subset of the LP format written by `dtopsc export-mip`.
Usage: python3 scripts/solve_lp.py model.lp
"""

import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp


def parse_terms(tokens):
    terms, sign, coef = [], 1.0, None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            coef = float(tok)
        except ValueError:
            terms.append((sign * (1.0 if coef is None else coef), tok))
            sign, coef = 1.0, None
    return terms


def read_lp(path):
    section, objective, rows, binaries = None, [], [], []
    for raw in open(path):
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        if line in ("Maximize", "Subject To", "Bounds", "Binaries", "End"):
            section = line
            continue
        if section == "Maximize":
            objective = parse_terms(line.split(":", 1)[1].split())
        elif section == "Subject To":
            body = line.split(":", 1)[1].split()
            sense, rhs = body[-2], float(body[-1])
            rows.append((parse_terms(body[:-2]), sense, rhs))
        elif section == "Binaries":
            binaries.append(line)
    return objective, rows, binaries


def main(path):
    objective, rows, binaries = read_lp(path)
    names = sorted({v for _, v in objective} | {v for t, _, _ in rows for _, v in t} | set(binaries))
    index = {v: k for k, v in enumerate(names)}
    c = np.zeros(len(names))
    for coef, v in objective:
        c[index[v]] -= coef
    a = np.zeros((len(rows), len(names)))
    lo = np.full(len(rows), -np.inf)
    hi = np.full(len(rows), np.inf)
    for r, (terms, sense, rhs) in enumerate(rows):
        for coef, v in terms:
            a[r, index[v]] += coef
        if sense in ("<=", "="):
            hi[r] = rhs
        if sense in (">=", "="):
            lo[r] = rhs
    integrality = np.array([1 if v in set(binaries) else 0 for v in names])
    upper = np.array([1.0 if v in set(binaries) else np.inf for v in names])
    res = milp(c, constraints=LinearConstraint(a, lo, hi), integrality=integrality, bounds=Bounds(0, upper))
    if not res.success:
        sys.exit(f"solver status: {res.message}")
    print(f"objective {-res.fun:.6f}")
    for v, x in zip(names, res.x):
        if v.startswith("y_") and x > 0.5:
            print(v)


if __name__ == "__main__":
    main(sys.argv[1])
