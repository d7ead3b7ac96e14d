"""Energy change under (alpha, beta) -> (alpha, -beta).

The Weitzenbock cross term only cancels the curvature cross term when the
curvature equation carries the weight 16 pi kappa.  With that weight the
defect is exact zero for flat connections and a discretization error
otherwise; with unit weight it stays O(1).
"""
import numpy as np

from monopole import kahler
from monopole import lattice as lat

rng = np.random.default_rng(0)
P, Q = rng.normal(size=(4, 4)), rng.uniform(0, 6, size=(4, 4))


def connection(x):
    return np.array([sum(0.3 * P[m, n] * np.sin(2 * np.pi * x[n] + Q[m, n]) for n in range(4)) for m in range(4)])


print(f"{'N':>3s} {'balanced':>10s} {'unit weight':>12s} {'flat A':>9s}")
for n in (8, 16, 24):
    grid = lat.TorusGrid(n)
    x = grid.coordinates()
    alpha = np.exp(2j * np.pi * x[0]) * (1 + 0.5 * np.cos(2 * np.pi * x[2]))
    beta = np.cos(2 * np.pi * (x[1] + x[3])) + 0.3j
    A = lat.sample_one_form(grid, connection)
    flat = lat.d(grid, rng.normal(size=grid.shape)) + 0.37
    bal = kahler.sign_flip_energy_check(grid, A, alpha, beta).defect
    unit = kahler.sign_flip_energy_check(grid, A, alpha, beta, weight=1.0).defect
    zero = kahler.sign_flip_energy_check(grid, flat, alpha, beta).defect
    print(f"{n:3d} {bal:10.3e} {unit:12.3e} {zero:9.1e}")
