#!/usr/bin/env python3
"""Solve a model-exchange JSON file and write a solution JSON file.

Usage: milp_runner.py MODEL_JSON SOLUTION_JSON

The model document carries a sparse objective, variable boxes (null bound =
unbounded on that side), plain two-sided rows (switched bounds are already
folded in by the writer), the target relative gap, and optionally the warm
binaries of a previous incumbent.  This runner is backed by scipy's milp
(HiGHS underneath), which takes no starting incumbent, so warm information
is accepted and ignored.
"""

import json
import sys

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp


def bound(value, sign):
    return sign * np.inf if value is None else float(value)


def main():
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    with open(sys.argv[1]) as fh:
        model = json.load(fh)

    n = len(model["vars"])
    c = np.zeros(n)
    for j, coef in model["objective"]:
        c[j] += coef
    sign = -1.0 if model["sense"] == "maximize" else 1.0

    lo = np.array([bound(v["lo"], -1) for v in model["vars"]])
    hi = np.array([bound(v["hi"], +1) for v in model["vars"]])
    integrality = np.array([1 if v["binary"] else 0 for v in model["vars"]])

    rows = model["rows"]
    data, ri, ci = [], [], []
    for k, row in enumerate(rows):
        for j, coef in row["coeffs"]:
            ri.append(k)
            ci.append(j)
            data.append(coef)
    a = sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), n))
    row_lo = np.array([bound(r["lo"], -1) for r in rows])
    row_hi = np.array([bound(r["hi"], +1) for r in rows])

    res = milp(
        sign * c,
        constraints=LinearConstraint(a, row_lo, row_hi),
        integrality=integrality,
        bounds=Bounds(lo, hi),
        options={"mip_rel_gap": float(model.get("gap", 0.0))},
    )

    # scipy status codes: 0 converged, 1 iteration/time limit, 2 infeasible,
    # 3 unbounded, 4 numerical trouble
    gap = float(res.mip_gap) if getattr(res, "mip_gap", None) is not None else 0.0
    if res.status == 0:
        status = "gap-optimal" if gap > 1e-9 else "optimal"
    elif res.status == 2:
        status = "infeasible"
    else:
        status = "aborted"

    out = {
        "status": status,
        "message": str(res.message),
        "objective": float(sign * res.fun) if res.fun is not None else 0.0,
        "x": [float(v) for v in res.x] if res.x is not None else [],
        "mip_gap": gap,
    }
    with open(sys.argv[2], "w") as fh:
        json.dump(out, fh)
    return 0


if __name__ == "__main__":
    sys.exit(main())
