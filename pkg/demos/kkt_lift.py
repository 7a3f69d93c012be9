"""Lift an (R) optimum to the KKT-augmented problem and compare objectives.

The lifted point is built from the primal optimum and its LP multipliers;
its objective equals the relaxation value, so adding the KKT conditions
does not tighten the bound.
"""

import numpy as np

from qprelax import example_family
from qprelax.builders import build_R, build_Rplus
from qprelax.certify import (check_feasible_Rplus, lift_rlt, lifted_objective,
                             rlt_cert_from_solution)
from qprelax.conic import solve

for alpha in (-3.0, 0.0, 1.5):
    inst = example_family("EX1", alpha)
    prog, vmap = build_R(inst)
    res = solve(prog)
    x, X, cert = rlt_cert_from_solution(prog, vmap, res)
    pt = lift_rlt(inst, x, X, cert)
    report = check_feasible_Rplus(inst, pt)
    rplus = solve(build_Rplus(inst)[0])
    print(f"alpha={alpha:5.2f}  R={float(res.value):9.5f}  "
          f"R+={float(rplus.value):9.5f}  lifted={lifted_objective(inst, pt):9.5f}"
          f"  lift violation={report.overall:.1e}")
    print("   y =", np.round(pt.y, 6))
