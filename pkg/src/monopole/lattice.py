"""
Flat periodic 4-torus discretization of a U(1) connection coupled to spinors.

Array layouts (``N`` sites per axis, axis ``mu`` of the site grid is array
axis ``mu`` of a field, lexicographic C order with axis 0 slowest):

==============  ==========================  =========================
field           shape                       dtype
==============  ==========================  =========================
0-form          ``(N, N, N, N)``            float
1-form          ``(4, N, N, N, N)``         float
2-form          ``(6, N, N, N, N)``         float, pairs ``PAIRS``
spinor (W+/W-)  ``(N, N, N, N, 2)``         complex
==============  ==========================  =========================

The connection is non-compact: ``A`` is real, ``F = dA`` with forward
differences, and spinors are transported with link phases
``exp(2 pi i h A_mu(x))``.  ``A_mu(x)`` lives on the link from ``x`` to
``x + mu``; :func:`sample_one_form` evaluates closed-form connections at
link midpoints.  Inner products carry the volume weight ``h**4``.

Snapshot files (:func:`save_snapshot`) are ``.npz`` archives.  Member
``meta`` holds a UTF-8 JSON document with keys ``N``, ``L``, ``stencil``,
``kappa``, ``fields`` (name -> {"kind", "complex", "shape"}) and
``site_order = "lexicographic"``.  Each field is stored under its name as a
little-endian ``<f8`` array; complex fields get a trailing axis of length 2
holding (real, imag).
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import spinor_algebra as sa
from .defaults import DEFAULTS
from .spinor_algebra import DomainError

PAIRS = sa.PAIRS
STENCILS = ("forward", "symmetric")
TWO_PI_I = 2j * np.pi

# Clifford images of the tangent frame, Hom(W+, W-)
GAMMA = np.array(sa.FRAME)
GAMMA_H = GAMMA.conj().transpose(0, 2, 1)

# Hodge star on 2-form components, taken from the algebraic star in the frame basis
HODGE = sa.star_in_frame().real
PROJ_SD = (np.eye(6) + HODGE) / 2
PROJ_ASD = (np.eye(6) - HODGE) / 2

# q(e_j ^ e_k): action of a unit 2-form on W+ through Lambda^+ and End0(W+)
CURVATURE_ACTION = np.array(
    [
        sa.iso_end0(sa.frame_bivector_to_u(PROJ_SD[:, p]), "+").data
        for p in range(6)
    ]
)

SD_BASIS = sa.self_dual_frame_basis()  # (3, 6)


class ConvergenceError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TorusGrid:
    n: int
    length: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise DomainError("TorusGrid needs N >= 3 sites per axis")
        if not self.length > 0:
            raise DomainError("TorusGrid needs L > 0")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * 4

    @property
    def cell_volume(self) -> float:
        return self.spacing**4

    @property
    def sites(self) -> int:
        return self.n**4

    def coordinates(self, offset=(0.0, 0.0, 0.0, 0.0)) -> np.ndarray:
        """Positions ``(4, N, N, N, N)`` of the sites shifted by ``offset`` (in units of h)."""
        idx = np.indices(self.shape, dtype=float)
        off = np.asarray(offset, dtype=float).reshape(4, 1, 1, 1, 1)
        return (idx + off) * self.spacing

    def zero_form(self):
        return np.zeros(self.shape)

    def one_form(self):
        return np.zeros((4,) + self.shape)

    def two_form(self):
        return np.zeros((6,) + self.shape)

    def spinor(self):
        return np.zeros(self.shape + (2,), dtype=complex)

    def check(self, arr, kind):
        want = {
            "0": self.shape,
            "1": (4,) + self.shape,
            "2": (6,) + self.shape,
            "spinor": self.shape + (2,),
            "spinors": (4,) + self.shape + (2,),
        }[kind]
        if np.shape(arr) != want:
            raise DomainError(f"expected {kind}-field of shape {want}, got {np.shape(arr)}")
        return np.asarray(arr)


def fwd(f, mu, steps=1):
    """``f(x + steps * mu)`` on the periodic grid (site axes start at 0)."""
    return np.roll(f, -steps, axis=mu)


def bwd(f, mu):
    return np.roll(f, 1, axis=mu)


def inner(grid: TorusGrid, a, b) -> complex:
    """``h^4 sum a * conj(b)``: linear in the first argument."""
    return grid.cell_volume * complex(np.vdot(b, a))


def norm(grid: TorusGrid, a) -> float:
    return float(np.sqrt(grid.cell_volume * np.vdot(a, a).real))


# ---------------------------------------------------------------------------
# exterior calculus


def d(grid: TorusGrid, form) -> np.ndarray:
    """Forward-difference exterior derivative on 0- and 1-forms."""
    form = np.asarray(form)
    h = grid.spacing
    if form.shape == grid.shape:
        return np.array([(fwd(form, mu) - form) / h for mu in range(4)])
    grid.check(form, "1")
    out = np.empty((6,) + grid.shape)
    for p, (mu, nu) in enumerate(PAIRS):
        out[p] = (fwd(form[nu], mu) - form[nu]) / h - (fwd(form[mu], nu) - form[mu]) / h
    return out


def d_adjoint(grid: TorusGrid, form) -> np.ndarray:
    """Exact adjoint of :func:`d` for the weighted inner product."""
    form = np.asarray(form)
    h = grid.spacing
    if form.shape == (4,) + grid.shape:
        return -sum((form[mu] - bwd(form[mu], mu)) / h for mu in range(4))
    grid.check(form, "2")
    out = np.zeros((4,) + grid.shape)
    for p, (mu, nu) in enumerate(PAIRS):
        out[nu] -= (form[p] - bwd(form[p], mu)) / h
        out[mu] += (form[p] - bwd(form[p], nu)) / h
    return out


def hodge_star(form) -> np.ndarray:
    return np.tensordot(HODGE, np.asarray(form), axes=1)


def project_self_dual(form, sign="+") -> np.ndarray:
    proj = PROJ_SD if sign == "+" else PROJ_ASD
    return np.tensordot(proj, np.asarray(form), axes=1)


def d_plus(grid: TorusGrid, a) -> np.ndarray:
    return project_self_dual(d(grid, a))


def curvature(grid: TorusGrid, A) -> np.ndarray:
    return d(grid, grid.check(A, "1"))


def site_curvature(grid: TorusGrid, F) -> np.ndarray:
    """Average of the four plaquettes meeting at each site in each plane."""
    F = grid.check(F, "2")
    out = np.empty_like(F)
    for p, (mu, nu) in enumerate(PAIRS):
        f = F[p]
        out[p] = 0.25 * (f + bwd(f, mu) + bwd(f, nu) + bwd(bwd(f, mu), nu))
    return out


def self_dual_coeffs(form) -> np.ndarray:
    """Coordinates ``(3, ...)`` of a 2-form's self-dual part on ``SD_BASIS``."""
    return np.tensordot(SD_BASIS, np.asarray(form), axes=1)


# ---------------------------------------------------------------------------
# covariant derivatives and Dirac operators


def link_phases(grid: TorusGrid, A) -> np.ndarray:
    return np.exp(TWO_PI_I * grid.spacing * grid.check(A, "1"))


def _transport_fwd(U, phi, mu):
    # U_mu(x) phi(x + mu)
    return U[mu][..., None] * fwd(phi, mu)


def _transport_bwd(U, phi, mu):
    # conj(U_mu(x - mu)) phi(x - mu)
    return bwd(U[mu].conj()[..., None] * phi, mu)


def covariant_derivative(grid: TorusGrid, A, phi, stencil="forward") -> np.ndarray:
    """Direction-indexed derivative ``(4, N, N, N, N, 2)``."""
    phi = grid.check(phi, "spinor")
    U = link_phases(grid, A)
    h = grid.spacing
    if stencil == "forward":
        return np.array([(_transport_fwd(U, phi, mu) - phi) / h for mu in range(4)])
    if stencil == "symmetric":
        return np.array(
            [(_transport_fwd(U, phi, mu) - _transport_bwd(U, phi, mu)) / (2 * h) for mu in range(4)]
        )
    raise ConfigError(f"unknown stencil {stencil!r}")


def covariant_derivative_adjoint(grid: TorusGrid, A, v, stencil="forward") -> np.ndarray:
    v = grid.check(v, "spinors")
    U = link_phases(grid, A)
    h = grid.spacing
    out = np.zeros(grid.shape + (2,), dtype=complex)
    if stencil == "forward":
        for mu in range(4):
            out += (_transport_bwd(U, v[mu], mu) - v[mu]) / h
        return out
    if stencil == "symmetric":
        for mu in range(4):
            out -= (_transport_fwd(U, v[mu], mu) - _transport_bwd(U, v[mu], mu)) / (2 * h)
        return out
    raise ConfigError(f"unknown stencil {stencil!r}")


def clifford(gammas, v) -> np.ndarray:
    """``sum_mu gammas[mu] @ v[mu]`` sitewise."""
    return np.einsum("mab,m...b->...a", gammas, v)


def dirac_plus(grid: TorusGrid, A, phi, stencil="forward") -> np.ndarray:
    """``D_A: W+ -> W-``, the Clifford contraction of the covariant derivative."""
    return clifford(GAMMA, covariant_derivative(grid, A, phi, stencil))


def dirac_plus_adjoint(grid: TorusGrid, A, psi, stencil="forward") -> np.ndarray:
    psi = grid.check(psi, "spinor")
    v = np.einsum("mab,...b->m...a", GAMMA_H, psi)
    return covariant_derivative_adjoint(grid, A, v, stencil)


def dirac_minus(grid: TorusGrid, A, psi, stencil="forward") -> np.ndarray:
    """``D_{A,-}: W- -> W+``, defined as minus the adjoint of :func:`dirac_plus`."""
    return -dirac_plus_adjoint(grid, A, psi, stencil)


def laplacian(grid: TorusGrid, A, phi, stencil="forward") -> np.ndarray:
    """Covariant Laplacian ``nabla^* nabla`` built from the stencil's derivative."""
    return covariant_derivative_adjoint(
        grid, A, covariant_derivative(grid, A, phi, stencil), stencil
    )


def extremum_value(grid: TorusGrid, A, phi) -> float:
    """Smallest ``Re <(nabla^* nabla phi)(x), phi(x)>`` over the sites maximizing ``|phi|^2``.

    Forward stencil.  Each direction contributes
    ``2 |phi(x)|^2 - Re <U phi(x + mu) + U^* phi(x - mu), phi(x)>``, which is
    non-negative at a maximum by Cauchy-Schwarz, so the value is ``>= 0``
    up to rounding.
    """
    phi = grid.check(phi, "spinor")
    lap = laplacian(grid, A, phi, "forward")
    mag = (np.abs(phi) ** 2).sum(axis=-1)
    top = mag >= mag.max() * (1 - 1e-12)
    vals = np.einsum("...a,...a->...", lap.conj(), phi).real
    return float(vals[top].min())


def curvature_action(F) -> np.ndarray:
    """Sitewise 2x2 matrices ``q(F)`` acting on W+."""
    return np.einsum("p...,pab->...ab", np.asarray(F), CURVATURE_ACTION)


def apply_sitewise(mats, phi) -> np.ndarray:
    return np.einsum("...ab,...b->...a", mats, phi)


def weitzenbock_residual(grid: TorusGrid, A, phi, stencil="symmetric", kappa=None, weight=None):
    """``r = D*D phi - nabla*nabla phi + kappa 2 pi i q(F) phi`` and its norm.

    ``F`` is the site-centred lattice curvature of ``A``.  On smooth data the
    norm vanishes at the order of the stencil.  ``weight`` is an optional
    non-negative site function inserted in the norm, used to measure the
    residual of a locally defined field away from the periodic seam.
    """
    if kappa is None:
        kappa = DEFAULTS["kappa"]
    r0 = _weitzenbock_difference(grid, A, phi, stencil)
    qphi = _curvature_term(grid, A, phi)
    r = r0 + kappa * qphi
    return r, _weighted_norm(grid, r, weight)


def _weighted_norm(grid, r, weight):
    if weight is None:
        return norm(grid, r)
    w = np.asarray(weight, dtype=float)[..., None]
    return float(np.sqrt(grid.cell_volume * np.sum(w * np.abs(r) ** 2)))


def _weitzenbock_difference(grid, A, phi, stencil):
    dd = dirac_plus_adjoint(grid, A, dirac_plus(grid, A, phi, stencil), stencil)
    return dd - laplacian(grid, A, phi, stencil)


def _curvature_term(grid, A, phi):
    F = site_curvature(grid, curvature(grid, A))
    return TWO_PI_I * apply_sitewise(curvature_action(F), phi)


def calibrate_kappa(grid: TorusGrid, A, phi, stencil="symmetric", weight=None) -> float:
    """Least-squares ``kappa`` minimizing the (weighted) Weitzenbock residual norm."""
    r0 = _weitzenbock_difference(grid, A, phi, stencil)
    q = _curvature_term(grid, A, phi)
    w = 1.0 if weight is None else np.asarray(weight, dtype=float)[..., None]
    return float(-np.vdot(q, w * r0).real / np.vdot(q, w * q).real)


# ---------------------------------------------------------------------------
# gauge transformations


@dataclass(frozen=True)
class GaugeTransform:
    """``g = exp(2 pi i (chi + chi_wind))`` with ``chi_wind(x) = sum_mu k_mu x_mu / L``."""

    chi: np.ndarray
    winding: tuple = (0, 0, 0, 0)

    def __post_init__(self):
        k = tuple(int(v) for v in self.winding)
        if len(k) != 4 or any(a != b for a, b in zip(k, self.winding)):
            raise DomainError("winding must be four integers")
        object.__setattr__(self, "winding", k)
        object.__setattr__(self, "chi", np.asarray(self.chi, dtype=float))

    @classmethod
    def identity(cls, grid: TorusGrid) -> "GaugeTransform":
        return cls(grid.zero_form(), (0, 0, 0, 0))

    def phase(self, grid: TorusGrid) -> np.ndarray:
        grid.check(self.chi, "0")
        idx = np.indices(grid.shape)
        # integer winding phase reduced exactly before the float conversion
        wind = sum(k * idx[mu] for mu, k in enumerate(self.winding)) % grid.n
        return np.exp(TWO_PI_I * (self.chi + wind / grid.n))

    def connection_shift(self, grid: TorusGrid) -> np.ndarray:
        """The 1-form ``(1 / 2 pi i) g^-1 dg`` on links."""
        out = d(grid, self.chi)
        for mu, k in enumerate(self.winding):
            out[mu] += k / grid.length
        return out

    def compose(self, other: "GaugeTransform") -> "GaugeTransform":
        """Pointwise product ``self * other``."""
        return GaugeTransform(
            self.chi + other.chi, tuple(a + b for a, b in zip(self.winding, other.winding))
        )


def gauge_act(grid: TorusGrid, g: GaugeTransform, A, phi=None):
    """``g.(A, phi) = (A - (1/2 pi i) g^-1 dg, g phi)``."""
    A = grid.check(A, "1")
    A2 = A - g.connection_shift(grid)
    if phi is None:
        return A2, None
    phi = grid.check(phi, "spinor")
    return A2, g.phase(grid)[..., None] * phi


def gauge_phase_field(grid, g, field_):
    return g.phase(grid)[..., None] * field_


def holonomy(grid: TorusGrid, A, mu, base=(0, 0, 0, 0)) -> float:
    """``h * sum A_mu`` along the closed line through ``base`` in direction ``mu``."""
    A = grid.check(A, "1")
    sl = list(base)
    sl[mu] = slice(None)
    return float(grid.spacing * A[mu][tuple(sl)].sum())


def harmonic_coefficients(grid: TorusGrid, A) -> np.ndarray:
    """Axis means of ``A`` times ``L``; integer shifts are gauge."""
    A = grid.check(A, "1")
    return A.reshape(4, -1).mean(axis=1) * grid.length


def scalar_laplacian_symbol(grid: TorusGrid) -> np.ndarray:
    k = np.fft.fftfreq(grid.n) * grid.n
    s = (4 * np.sin(np.pi * k / grid.n) ** 2) / grid.spacing**2
    return s[:, None, None, None] + s[None, :, None, None] + s[None, None, :, None] + s[None, None, None, :]


def solve_poisson(grid: TorusGrid, rhs, method="fft", tol=1e-13, maxiter=2000) -> np.ndarray:
    """Zero-mean solution of ``d^* d chi = rhs - mean(rhs)``."""
    rhs = grid.check(rhs, "0")
    rhs = rhs - rhs.mean()
    if method == "fft":
        lam = scalar_laplacian_symbol(grid)
        lam[0, 0, 0, 0] = 1.0
        chi_hat = np.fft.fftn(rhs) / lam
        chi_hat[0, 0, 0, 0] = 0.0
        return np.fft.ifftn(chi_hat).real
    if method == "cg":
        from scipy.sparse.linalg import LinearOperator, cg

        n = grid.sites

        def mv(x):
            x = x.reshape(grid.shape)
            return d_adjoint(grid, d(grid, x)).ravel()

        op = LinearOperator((n, n), matvec=mv, dtype=float)
        x, info = cg(op, rhs.ravel(), rtol=tol, atol=0.0, maxiter=maxiter)
        res = np.linalg.norm(mv(x) - rhs.ravel())
        if info != 0:
            raise ConvergenceError(f"Poisson CG did not converge: residual {res:.3e}")
        x = x.reshape(grid.shape)
        return x - x.mean()
    raise ConfigError(f"unknown Poisson method {method!r}")


def coulomb_gauge(grid: TorusGrid, A, method="fft"):
    """Gauge transform ``g`` and ``A' = g.A`` with ``d^* A' = 0`` and coefficients in ``[0, 1)``."""
    A = grid.check(A, "1")
    chi = solve_poisson(grid, d_adjoint(grid, A), method=method)
    A1 = A - d(grid, chi)
    theta = harmonic_coefficients(grid, A1)
    k = np.floor(theta).astype(int)
    # guard against theta - k rounding up to exactly 1
    k = np.where(theta - k >= 1.0, k + 1, k)
    g = GaugeTransform(chi, tuple(int(v) for v in k))
    A2, _ = gauge_act(grid, g, A)
    return g, A2


# ---------------------------------------------------------------------------
# closed-form field sampling


def sample_one_form(grid: TorusGrid, fn) -> np.ndarray:
    """Evaluate ``fn(x) -> (4, ...)`` with component ``mu`` taken at link midpoints."""
    out = np.empty((4,) + grid.shape)
    for mu in range(4):
        off = [0.0] * 4
        off[mu] = 0.5
        out[mu] = fn(grid.coordinates(off))[mu]
    return out


def sample_site_field(grid: TorusGrid, fn) -> np.ndarray:
    return np.asarray(fn(grid.coordinates()))


@dataclass(frozen=True)
class SmoothConfiguration:
    """Low-frequency trigonometric connection and spinor on a torus of side ``length``.

    Parameters are drawn once from ``variant`` and do not depend on ``N``, so
    the same continuum fields can be sampled on a sequence of grids.
    """

    variant: int = 0
    length: float = 1.0
    amplitude: float = 0.05
    modes: int = 3
    _params: dict = field(default=None, repr=False, compare=False)

    def params(self):
        rng = np.random.default_rng(1000 + self.variant)
        # A varies along two axes and Phi along the other two, all with the
        # lowest wave number, so that products of the fields never double a
        # wave number along one axis (that would spoil the h^2 regime at N = 8)
        perm = rng.permutation(4)
        axA, axP = perm[:2], perm[2:]
        kA = axA[np.arange(self.modes) % 2]
        comp = np.array([rng.choice([m for m in range(4) if m != k]) for k in kA])
        aA = rng.uniform(0.5, 1.0, size=self.modes) * rng.choice([-1, 1], size=self.modes)
        pA = rng.uniform(0, 2 * np.pi, size=self.modes)
        kP = axP[np.arange(self.modes) % 2]
        aP = 0.3 * (rng.normal(size=(self.modes, 2)) + 1j * rng.normal(size=(self.modes, 2)))
        c0 = rng.normal(size=2) + 1j * rng.normal(size=2)
        return kA, comp, aA, pA, kP, aP, c0

    def connection(self, x):
        kA, comp, aA, pA, _, _, _ = self.params()
        w = 2 * np.pi / self.length
        out = np.zeros((4,) + x.shape[1:])
        for m in range(self.modes):
            out[comp[m]] += self.amplitude * aA[m] * np.sin(w * x[kA[m]] + pA[m])
        return out

    def spinor(self, x):
        *_, kP, aP, c0 = self.params()
        w = 2 * np.pi / self.length
        out = np.zeros(x.shape[1:] + (2,), dtype=complex) + c0
        for m in range(self.modes):
            out += np.exp(1j * w * x[kP[m]])[..., None] * aP[m]
        return out

    def sample(self, grid: TorusGrid):
        if not np.isclose(grid.length, self.length):
            raise DomainError("grid length differs from the configuration's torus")
        return sample_one_form(grid, self.connection), sample_site_field(grid, self.spinor)


@dataclass(frozen=True)
class ConstantCurvatureConfiguration:
    """Connection with constant curvature ``F`` and an affine spinor.

    A constant nonzero ``F`` has no periodic potential in the trivial sector,
    so ``A`` is the symmetric-gauge potential ``A_n = F_mn (x_m - c_m) / 2``
    about the centre ``c`` of :meth:`window`.  Wrapped onto the torus it jumps
    across the seam ``x_mu = 0``; the identities are local, so residuals are
    measured with the window weight, which vanishes on every site whose
    stencils (reach two) cross the seam for ``N >= 8``.
    """

    F: tuple
    phi0: tuple
    phi_grad: tuple = ((0, 0),) * 4
    length: float = 1.0

    # window support as fractions of the side length
    LOWER = 1 / 8
    UPPER = 3 / 4

    @classmethod
    def random(cls, variant, length=1.0, scale=0.5):
        rng = np.random.default_rng(2000 + variant)
        F = tuple(scale * rng.normal(size=6))
        phi0 = tuple(rng.normal(size=2) + 1j * rng.normal(size=2))
        grad = 0.3 * (rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2)))
        return cls(F, phi0, tuple(map(tuple, grad)), length)

    @property
    def centre(self):
        return 0.5 * (self.LOWER + self.UPPER) * self.length

    def field_matrix(self):
        Fm = np.zeros((4, 4))
        for k, (i, j) in enumerate(PAIRS):
            Fm[i, j], Fm[j, i] = self.F[k], -self.F[k]
        return Fm

    def connection(self, x):
        return 0.5 * np.einsum("mn,m...->n...", self.field_matrix(), x - self.centre)

    def spinor(self, x):
        grad = np.asarray(self.phi_grad, dtype=complex)
        out = np.zeros(x.shape[1:] + (2,), dtype=complex) + np.asarray(self.phi0)
        return out + np.einsum("m...,ma->...a", x - self.centre, grad)

    def sample(self, grid: TorusGrid):
        if not np.isclose(grid.length, self.length):
            raise DomainError("grid length differs from the configuration's torus")
        return sample_one_form(grid, self.connection), sample_site_field(grid, self.spinor)

    def window(self, grid: TorusGrid):
        """Product of ``sin^2`` bumps supported on ``[LOWER, UPPER] * L`` in every axis."""
        if grid.n < 8:
            raise DomainError("the seam-free window needs N >= 8")
        t = (grid.coordinates() / self.length - self.LOWER) / (self.UPPER - self.LOWER)
        return np.prod(np.sin(np.pi * np.clip(t, 0.0, 1.0)) ** 2, axis=0)


def weitzenbock_study(sizes, stencil="symmetric", variant=0, kappa=None, length=1.0) -> list:
    """Windowed Weitzenbock residual norms of one constant-curvature field on each grid size."""
    cfg = ConstantCurvatureConfiguration.random(variant, length)
    out = []
    for n in sizes:
        grid = TorusGrid(n, length)
        A, phi = cfg.sample(grid)
        out.append(weitzenbock_residual(grid, A, phi, stencil, kappa, cfg.window(grid))[1])
    return out


def fitted_order(sizes, residuals) -> float:
    """Least-squares slope of ``log residual`` against ``log h``."""
    if len(sizes) < 2 or len(set(sizes)) != len(sizes):
        raise ConfigError("sizes: need at least two distinct values")
    slope = np.polyfit(-np.log(np.asarray(sizes, dtype=float)), np.log(np.asarray(residuals)), 1)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# snapshots


def save_snapshot(path, grid: TorusGrid, stencil="forward", kappa=None, **fields):
    meta = {
        "N": grid.n,
        "L": grid.length,
        "stencil": stencil,
        "kappa": DEFAULTS["kappa"] if kappa is None else kappa,
        "site_order": "lexicographic",
        "fields": {},
    }
    arrays = {}
    for name, arr in fields.items():
        arr = np.asarray(arr)
        is_c = np.iscomplexobj(arr)
        meta["fields"][name] = {"complex": bool(is_c), "shape": list(arr.shape)}
        data = np.stack([arr.real, arr.imag], axis=-1) if is_c else arr
        arrays[name] = np.ascontiguousarray(data, dtype="<f8")
    arrays["meta"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    with open(Path(path), "wb") as fh:
        np.savez(fh, **arrays)


def load_snapshot(path):
    """Return ``(grid, meta, fields)``."""
    with np.load(Path(path)) as z:
        meta = json.loads(bytes(z["meta"]).decode())
        fields = {}
        for name, info in meta["fields"].items():
            arr = z[name]
            if info["complex"]:
                arr = arr[..., 0] + 1j * arr[..., 1]
            fields[name] = arr.reshape(info["shape"])
    return TorusGrid(meta["N"], meta["L"]), meta, fields
