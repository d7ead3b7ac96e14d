"""
The flat complex torus: complex structure, Kahler form, the splitting of W+
and the identities that drive the holomorphicity argument.

Conventions.  ``J e0 = e1, J e2 = e3`` on the tangent frame, so
``z1 = x0 + i x1`` and ``z2 = x2 + i x3`` are holomorphic coordinates and
``omega = g(J., .) = e01 + e23``.  Put ``Omega = dz1 ^ dz2``.  A real
self-dual form splits as ``t conj(Omega) + conj(t) Omega + w omega``; the
complex scalar ``t`` is the component along ``Lambda^(2,0)T`` once 2-vectors
and 2-forms are identified by the metric (``conj(Omega)`` is dual to
``d/dz1 ^ d/dz2``).  W+ splits as ``triv (+) det``, with ``triv`` the first
basis vector.
"""
from dataclasses import dataclass

import numpy as np

from . import lattice as lat
from . import solver
from .defaults import DEFAULTS

# frame 2-form components, pairs (01, 02, 03, 12, 13, 23)
OMEGA_RE = np.array([0.0, 1.0, 0.0, 0.0, -1.0, 0.0])  # Re dz1 ^ dz2 = e02 - e13
OMEGA_IM = np.array([0.0, 0.0, 1.0, 1.0, 0.0, 0.0])  # Im dz1 ^ dz2 = e03 + e12


@dataclass(frozen=True)
class ComplexStructure:
    J: np.ndarray
    omega: np.ndarray

    @classmethod
    def standard(cls):
        J = np.zeros((4, 4))
        J[1, 0] = J[3, 2] = 1.0
        J[0, 1] = J[2, 3] = -1.0
        # omega_jk = g(J e_j, e_k)
        omega = np.array([J[:, j] @ np.eye(4)[:, k] for j, k in lat.PAIRS])
        return cls(J, omega)

    def square_defect(self) -> float:
        return float(np.abs(self.J @ self.J + np.eye(4)).max())


STANDARD = ComplexStructure.standard()


def decompose_two_form(F, cs: ComplexStructure = STANDARD):
    """``(t, w, rest)`` with ``F = 2 Re(t) Re(Omega) + 2 Im(t) Im(Omega) + w omega + rest``.

    ``F`` holds frame components on its first axis (a single 6-vector or a
    sitewise 2-form).  ``rest`` is anti-self-dual, i.e. the part of
    ``Lambda^(1,1)`` orthogonal to ``omega``.
    """
    F = np.asarray(F, dtype=float)
    a = np.tensordot(OMEGA_RE, F, axes=1) / 2
    b = np.tensordot(OMEGA_IM, F, axes=1) / 2
    w = np.tensordot(cs.omega, F, axes=1) / (cs.omega @ cs.omega)
    t = 0.5 * (a + 1j * b)
    part = np.multiply.outer(OMEGA_RE, 2 * t.real) + np.multiply.outer(OMEGA_IM, 2 * t.imag)
    rest = F - part - np.multiply.outer(cs.omega, w)
    return t, w, rest


def recompose(t, w, rest, cs: ComplexStructure = STANDARD):
    t = np.asarray(t)
    return (
        np.multiply.outer(OMEGA_RE, 2 * t.real)
        + np.multiply.outer(OMEGA_IM, 2 * t.imag)
        + np.multiply.outer(cs.omega, np.asarray(w))
        + rest
    )


def frozen_constants():
    c1 = complex(*DEFAULTS["sigma_twozero_c1"])
    return c1, DEFAULTS["sigma_omega_c2"], DEFAULTS["dirac_dbar_c3"]


def sigma_components(alpha, beta):
    """``(t, w)`` of ``sigma((alpha, beta), (alpha, beta))`` carried to Lambda^+.

    With the frozen constants ``t = c1 conj(alpha) beta`` and
    ``w = c2 (|beta|^2 - |alpha|^2) / 2``.  Accepts scalars or arrays.
    """
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, dtype=complex), np.asarray(beta, dtype=complex))
    phi = np.stack([alpha, beta], axis=-1)
    form = solver.skew_to_form(solver.sigma_field(phi))
    t, w, _ = decompose_two_form(form)
    return t, w


def calibrate_sigma_constants():
    """``(c1, c2)`` read off from ``(alpha, beta) = (1, 1)`` and ``(0, sqrt 2)``."""
    t, _ = sigma_components(1.0, 1.0)
    _, w = sigma_components(0.0, np.sqrt(2.0))
    return complex(t), float(w)


# ---------------------------------------------------------------------------
# Dirac versus dbar


def dbar_spectral(grid: lat.TorusGrid, A, m) -> np.ndarray:
    """Covariant ``dbar_A m`` as components ``(2, ...)`` on ``dzbar1, dzbar2``.

    Derivatives of ``m`` are spectral; the connection is taken at sites as
    the mean of the two links meeting there along each axis.
    """
    A = grid.check(A, "1")
    k = 2 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)
    mh = np.fft.fftn(m)
    dm = []
    for mu in range(4):
        shape = [1, 1, 1, 1]
        shape[mu] = grid.n
        dm.append(np.fft.ifftn(1j * k.reshape(shape) * mh))
    A_site = np.array([0.5 * (A[mu] + lat.bwd(A[mu], mu)) for mu in range(4)])
    nab = [dm[mu] + lat.TWO_PI_I * A_site[mu] * m for mu in range(4)]
    return 0.5 * np.array([nab[0] + 1j * nab[1], nab[2] + 1j * nab[3]])


def dirac_dbar_residual(grid: lat.TorusGrid, A, m, stencil="symmetric", c3=None):
    """``|D_A (m, 0) - c3 iota(dbar_A m)|`` with ``iota(v1, v2) = (v1, -v2)``.

    ``iota`` identifies ``Lambda^(0,1)`` with W- in the fixed bases.
    """
    if c3 is None:
        c3 = DEFAULTS["dirac_dbar_c3"]
    m = np.asarray(grid.check(m, "0"), dtype=complex)
    phi = np.stack([m, np.zeros_like(m)], axis=-1)
    Dphi = lat.dirac_plus(grid, A, phi, stencil)
    db = dbar_spectral(grid, A, m)
    ref = np.stack([db[0], -db[1]], axis=-1)
    return lat.norm(grid, Dphi - c3 * ref)


def dirac_dbar_study(sizes, stencil="symmetric", variant=0, length=1.0) -> list:
    """:func:`dirac_dbar_residual` of one smooth periodic ``(A, m)`` on each grid size."""
    cfg = lat.SmoothConfiguration(variant, length)
    out = []
    for n in sizes:
        grid = lat.TorusGrid(n, length)
        A, phi = cfg.sample(grid)
        out.append(dirac_dbar_residual(grid, A, phi[..., 0], stencil))
    return out


# ---------------------------------------------------------------------------
# sign flip


def balance_weight(kappa=None) -> float:
    """Weight ``lam`` on the curvature equation that matches the Weitzenbock coupling.

    The cross term of ``|D(alpha, beta)|^2`` is ``-kappa Re <2 pi i q(F) alpha, beta>``
    up to the discretization error, and pointwise that equals ``16 pi kappa``
    times the cross term of ``<F^+, sigma>``.  Only with this weight do the two
    cancel in ``|D Phi|^2 + lam |F^+ - sigma - delta|^2``.
    """
    if kappa is None:
        kappa = DEFAULTS["kappa"]
    return 16 * np.pi * kappa


def balanced_energy(grid, A, phi, delta=None, stencil="symmetric", weight=None) -> float:
    """``|r1|^2 + lam |r2|^2`` with ``lam = balance_weight()``; same zeros as the solver energy."""
    lam = balance_weight() if weight is None else weight
    r1, r2 = solver.sw_residual(grid, A, phi, delta, stencil)
    return lat.norm(grid, r1) ** 2 + lam * lat.norm(grid, r2) ** 2


@dataclass
class SignFlipVerdict:
    energy_plus: float
    energy_minus: float
    defect: float
    dirac_cross: float
    curvature_cross: float
    delta_has_twozero: bool
    passed: bool


def sign_flip_energy_check(grid, A, alpha, beta, delta=None, stencil="symmetric", tol=1e-12, weight=None):
    """Compare :func:`balanced_energy` at ``(alpha, beta)`` and ``(alpha, -beta)``.

    The difference is ``4 (dirac_cross - curvature_cross)`` with
    ``dirac_cross = Re <D(alpha, 0), D(0, beta)>`` and ``curvature_cross`` the
    weighted pairing of ``F^+ - delta`` with the ``conj(alpha) beta`` part of
    sigma.  The continuum Weitzenbock formula makes them equal; on the
    lattice they agree exactly when the plaquettes are flat and up to the
    discretization error otherwise: the Dirac cross term couples
    neighbouring sites while the curvature cross term is sitewise, so for
    non-flat ``A`` no weight makes them equal.  ``weight = 1`` gives the solver energy,
    which is not invariant even in the continuum.
    """
    lam = balance_weight() if weight is None else weight
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    dform = solver._delta_form(grid, delta)
    t_delta, _, _ = decompose_two_form(dform)
    z = np.zeros_like(alpha)
    e_plus = balanced_energy(grid, A, np.stack([alpha, beta], -1), dform, stencil, lam)
    e_minus = balanced_energy(grid, A, np.stack([alpha, -beta], -1), dform, stencil, lam)
    Da = lat.dirac_plus(grid, A, np.stack([alpha, z], -1), stencil)
    Db = lat.dirac_plus(grid, A, np.stack([z, beta], -1), stencil)
    dirac_cross = lat.inner(grid, Da, Db).real
    # the part of sigma odd in beta is the (alpha, beta) polarization
    s_odd = solver.skew_to_form(
        solver.sigma_field(np.stack([alpha, z], -1), np.stack([z, beta], -1))
        + solver.sigma_field(np.stack([z, beta], -1), np.stack([alpha, z], -1))
    )
    curvature_cross = lam * lat.inner(grid, lat.d_plus(grid, A) - dform, s_odd).real
    defect = abs(e_plus - e_minus)
    scale = max(1.0, abs(e_plus))
    return SignFlipVerdict(
        e_plus,
        e_minus,
        defect,
        dirac_cross,
        curvature_cross,
        bool(np.abs(t_delta).max() > 1e-12),
        bool(defect <= tol * scale),
    )
