"""Certificates for a square and a disk: centred, displaced, and tangent versus crossing.

The disk of radius 1.2 crosses the square [-1, 1]^2 transversally, so the
objective is smooth near the optimum and the optimizer lands on a point that
certifies. Shifting the disk by 0.3 breaks the centering condition by a wide
margin. The inscribed disk (radius 1) touches the square at four points; its
identity position is optimal, but a small axis stretch already leaves a
visible isotropy residual because the objective has a cusp there.
"""
import numpy as np

from maxintpos import (Ball, OptimizeConfig, Position, cube, indicator, isotropy_certificate, maximize)

f = indicator(cube(1.0, 2))


def show(label, g):
    c = isotropy_certificate(f, g, budget=1_000_000, seed=7)
    print(f"{label:<34} iso {c.iso_residual:.2e} +- {c.iso_stderr:.1e}   "
          f"center {c.center_residual:.2e} +- {c.center_stderr:.1e}   pass {c.passed}")


g = indicator(Ball(1.2))
cfg = OptimizeConfig(budget_per_eval=200_000, grad_budget=1_000_000, restarts=1, seed=0)
res = maximize(f, g, "unit", cfg, Position(np.diag([1.3, 1 / 1.3]), [0.15, -0.1], "unit"))
print(f"optimizer: converged {res.converged}, value {res.value.value:.4f}, "
      f"{len(res.steps)} line-search steps, {len(res.secant_steps)} secant steps")
g_opt = g.pullback(res.position)
show("radius 1.2 at the optimum", g_opt)
show("radius 1.2 shifted by 0.3", g_opt.pullback(Position(np.eye(2), [0.3, 0.0], "unit")))

b = indicator(Ball(1.0))
show("radius 1 at the identity", b)
for eps in (1e-4, 1e-3, 1e-2):
    S = np.diag([1 + eps, 1 / (1 + eps)])
    show(f"radius 1 stretched by {eps:g}", b.pullback(Position(S, None, "unit")))
