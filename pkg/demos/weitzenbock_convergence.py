"""Weitzenbock and Dirac-vs-dbar residuals under grid refinement, and the kappa fit."""
import numpy as np

from monopole import kahler
from monopole import lattice as lat

sizes = [8, 12, 16, 24]
for stencil in lat.STENCILS:
    w = lat.weitzenbock_study(sizes, stencil)
    d = kahler.dirac_dbar_study(sizes, stencil)
    print(f"{stencil:9s} weitzenbock {np.array(w).round(6)}  order {lat.fitted_order(sizes, w):.2f}")
    print(f"{'':9s} dirac-dbar  {np.array(d).round(6)}  order {lat.fitted_order(sizes, d):.2f}")

grid = lat.TorusGrid(16)
for variant in range(3):
    cfg = lat.ConstantCurvatureConfiguration.random(variant)
    A, phi = cfg.sample(grid)
    print(f"kappa fit, field {variant}: {lat.calibrate_kappa(grid, A, phi, 'symmetric', cfg.window(grid)):.5f}")
