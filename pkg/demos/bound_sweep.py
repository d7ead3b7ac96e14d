"""Solve with growing perturbations and compare sup|Phi|^2 with the bound line C |delta|_inf.

Each run takes 10-60 s at N = 6.  Pass magnitudes on the command line to
override the default sweep, e.g. ``python bound_sweep.py 0.2 0.4``.
"""
import sys

from monopole import solver

scales = [float(s) for s in sys.argv[1:]] or [0.1, 0.15, 0.2, 0.3, 0.4]
print(f"{'scale':>6s} {'status':>14s} {'iters':>6s} {'energy':>9s} {'sup|Phi|^2':>11s} {'bound':>8s} {'ratio':>6s}")
for scale in scales:
    cfg = solver.SolverConfig(
        n=6, energy_tol=1e-7, max_iterations=5000, init_harmonic=0.0, init_spinor="aligned",
        precondition=1.0, delta={"kind": "wave", "coeffs": [1.0, -0.5, 0.3], "wave": 0.5, "scale": scale},
    )
    rep = solver.solve(cfg)
    line = f"{scale:6.2f} {rep.status:>14s} {rep.iterations:6d} {rep.energy:9.2e} {rep.sup_phi_sq:11.4f}"
    if rep.converged:
        v = solver.bound_check(cfg.grid(), rep.A, rep.phi, cfg.perturbation(), cfg.stencil, threshold=1e-7)
        line += f" {v.bound:8.4f} {v.ratio:6.3f}"
    print(line, flush=True)
