"""Spinor algebra, Spin_c obstructions and lattice monopole equations on the flat 4-torus."""
from . import cohomology, kahler, lattice, solver, spinor_algebra

__all__ = ["cohomology", "kahler", "lattice", "solver", "spinor_algebra"]
