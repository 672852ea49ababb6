"""Gaussian measure of the square intersected with ellipses of determinant r, and the limit r -> 1.

m(r) = max mu(K cap T B) over det T = r grows with r but never faster than
linearly: m(r) <= m(s) <= (s/r) m(r). As r decreases to 1 the boundary measure
on the part of the square inside the optimal ellipse concentrates at the four
points where the square touches the unit circle, and its second moment tends to I/2.
"""
from maxintpos import Ball, OptimizeConfig, cube, john_limit_measure, scan_radius, standard_gaussian

K = cube(1.0, 2)
cfg = OptimizeConfig(budget_per_eval=200_000, restarts=1, seed=0)
pts = scan_radius(standard_gaussian(2, normalized=True), K, Ball(1.0), [1.0, 1.1, 1.2, 1.3, 1.4, 1.5], cfg)
print("   r      m(r)     stderr   flagged")
for p in pts:
    print(f"{p.r:5.2f}  {p.value.value:.5f}  {p.value.stderr:.1e}   {p.flagged}")

print("\n   r    iso residual   support distance")
for s in john_limit_measure(standard_gaussian(2), K, [1.3, 1.2, 1.1, 1.05, 1.02], budget=400_000, cfg=cfg):
    print(f"{s.r:5.2f}  {s.iso_residual:.4f} +- {s.iso_stderr:.4f}   {s.support_distance:.4f}")
