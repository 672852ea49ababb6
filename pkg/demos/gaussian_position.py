"""Move an anisotropic Gaussian into maximal intersection position with the standard one.

Starting from T = diag(1.3, 1/1.3) and a small shift, gradient ascent should reach
an orthogonal relative position where the integral equals pi, and the moment
matrix M becomes (pi/2) I.
"""
import numpy as np

from maxintpos import OptimizeConfig, Position, gaussian, isotropy_certificate, maximize, standard_gaussian

f = standard_gaussian(2)
g = gaussian([[4.0, 0.0], [0.0, 0.25]])
start = Position(np.diag([1.3, 1 / 1.3]), [0.15, -0.1], "unit")
res = maximize(f, g, "unit", OptimizeConfig(budget_per_eval=200_000, restarts=1, seed=0), start)

print("iteration  value        |grad|")
for it, val, gn in res.trajectory:
    print(f"{it:>9}  {val:.8f}  {gn:.2e}")
T = res.position.T
print("converged:", res.converged)
print("g pulled back has inverse covariance T^-T diag(4, 1/4) T^-1 =")
print(np.round(np.linalg.inv(T).T @ np.diag([4.0, 0.25]) @ np.linalg.inv(T), 4))

cert = isotropy_certificate(f, g.pullback(res.position), budget=400_000)
print("M =", np.round(cert.M, 5).tolist(), " (pi/2 =", round(np.pi / 2, 5), ")")
print(f"iso residual {cert.iso_residual:.2e}, center residual {cert.center_residual:.2e}, pass {cert.passed}")
