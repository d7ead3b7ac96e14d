"""
Lattice monopole equations, their energy, gradient descent and the deformation complex.

The residual of a pair ``(A, Phi)`` with perturbation ``delta`` is

    r1 = D_A Phi                           (a W- field)
    r2 = F_A^+ - sigma(Phi, Phi) - delta   (a self-dual 2-form)

with ``sigma`` carried to Lambda^+ sitewise.  ``F_A`` is the plaquette
curvature ``dA`` attached to the corner site of each plaquette.  The energy
is ``|r1|^2 + |r2|^2`` in the ``h^4``-weighted norms of :mod:`lattice`.

Gradients are Riesz representatives for the real inner product
``Re <u, v>`` with the same weights, so ``d/dt E(x + t v) = pairing(grad, v)``.
"""
import csv
import json
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import lattice as lat
from . import spinor_algebra as sa
from .defaults import DEFAULTS
from .lattice import ConfigError, TorusGrid
from .spinor_algebra import DomainError

TRACE_COLUMNS = ("iteration", "energy", "dirac_residual", "curv_residual", "sup_phi_sq", "step_size")


class DivergenceError(RuntimeError):
    """Non-finite fields during descent; ``last_good`` holds the previous iterate."""

    def __init__(self, message, last_good=None, iteration=None):
        super().__init__(message)
        self.last_good = last_good
        self.iteration = iteration


class PreconditionError(ValueError):
    pass


class CapacityError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# sigma on site fields


def sigma_field(phi, psi=None) -> np.ndarray:
    """Sitewise ``sigma(phi, psi)`` as ``(N, N, N, N, 2, 2)`` matrices."""
    if psi is None:
        psi = phi
    out = np.einsum("...a,...b->...ab", phi, psi.conj())
    tr = 0.5 * np.einsum("...a,...a->...", psi.conj(), phi)
    out[..., 0, 0] -= tr
    out[..., 1, 1] -= tr
    return 1j * out


def skew_to_form(s) -> np.ndarray:
    """Sitewise traceless skew-Hermitian matrices to self-dual 2-forms ``(6, ...)``."""
    coeffs = sa.skew_to_self_dual_coeffs(s)  # (..., 3)
    return np.moveaxis(coeffs @ lat.SD_BASIS, -1, 0)


def sigma_form(phi, psi=None) -> np.ndarray:
    """``sigma(phi, psi)`` carried to Lambda^+, skew part only."""
    s = sigma_field(phi, psi)
    if psi is not None:
        s = 0.5 * (s - np.swapaxes(s, -1, -2).conj())
    return skew_to_form(s)


def _form_to_skew_dual(r2) -> np.ndarray:
    """``K`` with ``<r2, skew_to_form(M)> = Re tr(K^H M)`` sitewise, for any 2x2 ``M``."""
    c = np.moveaxis(np.tensordot(lat.SD_BASIS, r2, axes=1), 0, -1)  # (..., 3)
    w = c @ sa._SD_PINV  # (..., 8): real parts then imaginary parts
    return (w[..., :4] + 1j * w[..., 4:]).reshape(w.shape[:-1] + (2, 2))


# ---------------------------------------------------------------------------
# perturbations


@dataclass(frozen=True)
class Perturbation:
    """Self-dual 2-form ``delta`` on the grid."""

    form: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.form, dtype=float)
        if f.ndim != 5 or f.shape[0] != 6:
            raise DomainError("perturbation must be a 2-form of shape (6, N, N, N, N)")
        scale = max(1.0, float(np.abs(f).max(initial=0.0)))
        if np.abs(lat.project_self_dual(f, "-")).max(initial=0.0) > 1e-12 * scale:
            raise DomainError("perturbation is not self-dual")
        object.__setattr__(self, "form", f)

    @classmethod
    def zero(cls, grid: TorusGrid):
        return cls(grid.two_form())

    @classmethod
    def from_spec(cls, grid: TorusGrid, spec):
        """Build from a config entry.

        ``{"kind": "zero"}``, ``{"kind": "constant", "coeffs": [c1, c2, c3]}`` or
        ``{"kind": "wave", "coeffs": [...], "wave": a}``.  Coefficients refer to
        the orthonormal self-dual basis; ``"wave"`` adds the zero-mean part
        ``a sum_i sin(2 pi x_i / L + i) e_i`` for ``i = 1, 2, 3``.  An optional
        ``"scale"`` multiplies everything.
        """
        spec = dict(spec or {"kind": "zero"})
        known = {"kind", "coeffs", "wave", "scale"}
        for key in spec:
            if key not in known:
                raise ConfigError(f"unknown perturbation key {key!r}")
        kind = spec.get("kind", "zero")
        scale = float(spec.get("scale", 1.0))
        if kind == "zero":
            return cls.zero(grid)
        if kind not in ("constant", "wave"):
            raise ConfigError(f"unknown perturbation kind {kind!r}")
        c = np.asarray(spec.get("coeffs", [0.0, 0.0, 0.0]), dtype=float)
        if c.shape != (3,):
            raise ConfigError("perturbation 'coeffs' needs three numbers")
        coef = np.broadcast_to(c.reshape(3, 1, 1, 1, 1), (3,) + grid.shape).copy()
        if kind == "wave":
            a = float(spec.get("wave", 0.0))
            x = grid.coordinates() * (2 * np.pi / grid.length)
            for i in range(3):
                coef[i] += a * np.sin(x[i] + i + 1)
        return cls(scale * np.tensordot(lat.SD_BASIS.T, coef, axes=1))

    def sup_norm(self) -> float:
        """``max_x |delta(x)|`` with the Euclidean norm on 2-form components."""
        return float(np.sqrt((self.form**2).sum(axis=0)).max())


def _delta_form(grid, delta):
    if delta is None:
        return grid.two_form()
    if isinstance(delta, Perturbation):
        return grid.check(delta.form, "2")
    return grid.check(Perturbation(delta).form, "2")


# ---------------------------------------------------------------------------
# residual, energy, gradient


def sw_residual(grid: TorusGrid, A, phi, delta=None, stencil="forward"):
    """``(r1, r2)`` as described in the module docstring."""
    A = grid.check(A, "1")
    phi = grid.check(phi, "spinor")
    r1 = lat.dirac_plus(grid, A, phi, stencil)
    r2 = lat.d_plus(grid, A) - sigma_form(phi) - _delta_form(grid, delta)
    return r1, r2


def energy(grid: TorusGrid, A, phi, delta=None, stencil="forward") -> float:
    r1, r2 = sw_residual(grid, A, phi, delta, stencil)
    return lat.norm(grid, r1) ** 2 + lat.norm(grid, r2) ** 2


def _connection_derivative_adjoint(grid, A, phi, r1, stencil):
    """Riesz representative in ``a`` of ``Re <r1, (dD/dA)[a] phi>``."""
    U = lat.link_phases(grid, A)
    g = np.einsum("mab,...a->m...b", lat.GAMMA.conj(), r1)  # gamma_mu^H r1, per direction
    out = np.empty((4,) + grid.shape)
    for mu in range(4):
        fwd_term = lat._transport_fwd(U, phi, mu)  # U phi(x + mu)
        if stencil == "forward":
            out[mu] = (2j * np.pi * np.einsum("...a,...a->...", g[mu].conj(), fwd_term)).real
        elif stencil == "symmetric":
            t1 = np.einsum("...a,...a->...", g[mu].conj(), fwd_term)
            # the backward term of site x + mu differentiates the same link
            t2 = np.einsum("...a,...a->...", lat.fwd(g[mu], mu).conj(), U[mu].conj()[..., None] * phi)
            out[mu] = (1j * np.pi * (t1 + t2)).real
        else:
            raise ConfigError(f"unknown stencil {stencil!r}")
    return out


def energy_gradient(grid: TorusGrid, A, phi, delta=None, stencil="forward"):
    """``(grad_A, grad_Phi)`` of :func:`energy`; see the module docstring for the pairing."""
    r1, r2 = sw_residual(grid, A, phi, delta, stencil)
    gA = 2 * lat.d_adjoint(grid, r2) + 2 * _connection_derivative_adjoint(grid, A, phi, r1, stencil)
    K = _form_to_skew_dual(r2)
    KH = np.swapaxes(K, -1, -2).conj()
    trK = np.trace(K, axis1=-2, axis2=-1)
    G = (
        -1j * lat.apply_sitewise(K, phi)
        + 1j * lat.apply_sitewise(KH, phi)
        - trK.imag[..., None] * phi
    )
    gP = 2 * lat.dirac_plus_adjoint(grid, A, r1, stencil) - 2 * G
    return gA, gP


def pairing(grid: TorusGrid, u, v) -> float:
    """``Re <u, v>`` on pairs ``(one-form, spinor)``."""
    return lat.inner(grid, u[0], v[0]).real + lat.inner(grid, u[1], v[1]).real


# ---------------------------------------------------------------------------
# solver configuration and report


@dataclass
class SolverConfig:
    """Gradient-descent settings; JSON keys are exactly the field names."""

    n: int = 6
    length: float = 1.0
    stencil: str = "symmetric"
    step_rule: str = "backtracking"
    step_size: float = 1e-3
    armijo: float = 1e-4
    shrink: float = 0.5
    grow: float = 1.5
    precondition: float = None
    max_iterations: int = 20000
    energy_tol: float = 1e-10
    grad_tol: float = 1e-14
    seed: int = 0
    init_scale: float = 0.1
    init_harmonic: float = 0.25
    init_spinor: str = "random"
    delta: dict = field(default_factory=lambda: {"kind": "zero"})
    rank_cutoff: float = DEFAULTS["rank_cutoff"]
    dense_limit: int = DEFAULTS["dense_limit"]

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.stencil not in lat.STENCILS:
            raise ConfigError(f"stencil: unknown value {self.stencil!r}")
        if self.init_spinor not in ("random", "aligned"):
            raise ConfigError(f"init_spinor: unknown value {self.init_spinor!r}")
        if self.step_rule not in ("fixed", "backtracking"):
            raise ConfigError(f"step_rule: unknown value {self.step_rule!r}")
        for key in ("step_size", "energy_tol", "grad_tol", "length", "rank_cutoff"):
            v = getattr(self, key)
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"{key}: must be a positive number, got {v!r}")
        if not 0 < self.armijo < 1:
            raise ConfigError(f"armijo: must lie in (0, 1), got {self.armijo!r}")
        if not 0 < self.shrink < 1:
            raise ConfigError(f"shrink: must lie in (0, 1), got {self.shrink!r}")
        if not self.grow >= 1:
            raise ConfigError(f"grow: must be >= 1, got {self.grow!r}")
        for key in ("n", "max_iterations", "seed", "dense_limit"):
            v = getattr(self, key)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{key}: must be an integer, got {v!r}")
        if self.n < 3:
            raise ConfigError(f"n: needs at least 3 sites per axis, got {self.n}")
        if self.max_iterations < 0:
            raise ConfigError(f"max_iterations: must be >= 0, got {self.max_iterations}")
        if self.precondition is not None and not (
            isinstance(self.precondition, (int, float)) and self.precondition > 0
        ):
            raise ConfigError(f"precondition: must be null or a positive number, got {self.precondition!r}")
        if not isinstance(self.delta, dict):
            raise ConfigError("delta: must be a mapping")

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in fields(cls)}
        for key in data:
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}")
        return cls(**data)

    @classmethod
    def from_file(cls, path):
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data)

    def to_dict(self):
        return asdict(self)

    def grid(self) -> TorusGrid:
        return TorusGrid(self.n, self.length)

    def perturbation(self) -> Perturbation:
        return Perturbation.from_spec(self.grid(), self.delta)

    def initial_fields(self):
        """Seeded start: harmonic offset ``init_harmonic / L`` plus Gaussian noise.

        The offset keeps the flat symmetric-stencil Dirac operator free of
        zero modes (for any ``N`` when it is 1/4), so the spinor decays at a
        linear rate.  With ``init_spinor = "aligned"`` the spinor noise is added
        to the constant spinor whose ``sigma`` cancels the mean of ``delta``,
        which skips the slow escape from the unstable state ``Phi = 0``.
        """
        grid = self.grid()
        rng = np.random.default_rng(self.seed)
        A = self.init_harmonic / self.length + self.init_scale * rng.normal(size=(4,) + grid.shape)
        phi = self.init_scale * (rng.normal(size=grid.shape + (2,)) + 1j * rng.normal(size=grid.shape + (2,)))
        if self.init_spinor == "aligned":
            mean = self.perturbation().form.mean(axis=(1, 2, 3, 4))
            phi = phi + spinor_with_sigma(-_form_to_skew(mean))
        return A, phi


def _form_to_skew(form) -> np.ndarray:
    """Traceless skew-Hermitian image ``q(form)`` of a self-dual 2-form at one point."""
    return np.einsum("p,pab->ab", np.asarray(form, dtype=float), lat.CURVATURE_ACTION)


def spinor_with_sigma(S) -> np.ndarray:
    """A spinor ``Phi`` with ``sigma(Phi, Phi) = S`` for traceless skew-Hermitian ``S``.

    ``-iS`` has eigenvalues ``+-lam``; ``Phi = sqrt(2 lam) v`` for the
    ``+lam`` eigenvector ``v``.
    """
    w, v = np.linalg.eigh(-1j * np.asarray(S, dtype=complex))
    return np.sqrt(2 * max(w[-1], 0.0)) * v[:, -1]


@dataclass
class BoundVerdict:
    sup_phi_sq: float
    delta_sup: float
    bound: float
    margin: float
    ratio: float
    passed: bool

    def to_dict(self):
        out = asdict(self)
        # JSON has no infinity; the ratio is undefined on a zero bound line
        if not np.isfinite(out["ratio"]):
            out["ratio"] = None
        return out


@dataclass
class SolverReport:
    A: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    converged: bool
    status: str
    iterations: int
    energy: float
    dirac_residual: float
    curv_residual: float
    sup_phi_sq: float
    trace: list = field(repr=False)
    wall_time: float
    bound: BoundVerdict = None
    snapshot: str = None

    @property
    def energy_trace(self) -> np.ndarray:
        return np.array([row[1] for row in self.trace])

    def to_dict(self):
        out = {
            k: getattr(self, k)
            for k in (
                "converged", "status", "iterations", "energy", "dirac_residual",
                "curv_residual", "sup_phi_sq", "wall_time", "snapshot",
            )
        }
        out["bound"] = None if self.bound is None else self.bound.to_dict()
        return out

    def write_trace(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for row in self.trace:
                w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def symbol_preconditioner(grid: TorusGrid, mass, stencil="forward", rho=0.0):
    """Inverse of ``1 + H0 / mass`` in Fourier space, ``H0`` a constant-coefficient Hessian model.

    ``H0`` is ``2 (d^+)^* d^+ + 2 (2 pi)^2 rho`` on the connection (the second
    term is the mass the connection picks up from ``|Phi|^2 = rho`` through the
    Dirac term) and ``2 D^* D`` at ``A = 0`` on the spinor, so every momentum
    is rescaled by its own stiffness.  Descent along
    the preconditioned gradient is steepest descent for the metric
    ``<u, (1 + H0 / mass) v>``; critical points are unchanged.  Using the exact
    symbols (rather than a scalar Laplacian) matters on the lattice: both
    ``d^+`` and the symmetric Dirac operator are soft at large momenta.
    """
    h = grid.spacing
    k = 2 * np.pi * np.fft.fftfreq(grid.n)
    kk = np.stack(np.meshgrid(k, k, k, k, indexing="ij"), axis=-1)  # (..., 4)
    fwd_sym = (np.exp(1j * kk) - 1) / h
    # 1-forms -> self-dual coefficients: rows SD_BASIS, pair (m, n) -> s_m a_n - s_n a_m
    M = np.zeros(grid.shape + (3, 4), dtype=complex)
    for p, (m, n) in enumerate(lat.PAIRS):
        for i in range(3):
            M[..., i, n] += lat.SD_BASIS[i, p] * fwd_sym[..., m]
            M[..., i, m] -= lat.SD_BASIS[i, p] * fwd_sym[..., n]
    HA = np.eye(4) * (1 + 8 * np.pi**2 * rho / mass) + 2 * np.einsum("...ia,...ib->...ab", M.conj(), M) / mass
    if stencil == "symmetric":
        c = 1j * np.sin(kk) / h
    else:
        c = fwd_sym
    S = np.einsum("...m,mab->...ab", c, lat.GAMMA)
    HP = np.eye(2) + 2 * np.einsum("...ia,...ib->...ab", S.conj(), S) / mass
    inv_A, inv_P = np.linalg.inv(HA), np.linalg.inv(HP)
    axes = (0, 1, 2, 3)

    def apply(gA, gP):
        fA = np.fft.fftn(np.moveaxis(gA, 0, -1), axes=axes)
        pA = np.fft.ifftn(np.einsum("...ab,...b->...a", inv_A, fA), axes=axes).real
        fP = np.fft.fftn(gP, axes=axes)
        pP = np.fft.ifftn(np.einsum("...ab,...b->...a", inv_P, fP), axes=axes)
        return np.moveaxis(pA, -1, 0), pP

    return apply


def _sup_phi_sq(phi) -> float:
    return float((np.abs(phi) ** 2).sum(axis=-1).max())


def _trace_row(grid, it, A, phi, delta, stencil, step):
    r1, r2 = sw_residual(grid, A, phi, delta, stencil)
    n1, n2 = lat.norm(grid, r1), lat.norm(grid, r2)
    return (it, n1**2 + n2**2, n1, n2, _sup_phi_sq(phi), step)


def _finite(*arrays):
    return all(np.isfinite(a).all() for a in arrays)


def solve(config: SolverConfig, A0=None, phi0=None, delta=None, callback=None) -> SolverReport:
    """Gradient descent on :func:`energy` with Armijo backtracking.

    Stops with ``converged=True`` once the energy is at most ``energy_tol``.
    Running out of iterations, or a gradient below ``grad_tol``, ends the
    run as non-converged.  ``callback(iteration, A, phi)`` is called after
    every accepted step.
    """
    t0 = time.perf_counter()
    grid = config.grid()
    if A0 is None or phi0 is None:
        A_init, phi_init = config.initial_fields()
        A0 = A_init if A0 is None else A0
        phi0 = phi_init if phi0 is None else phi0
    A = np.array(grid.check(A0, "1"), dtype=float)
    phi = np.array(grid.check(phi0, "spinor"), dtype=complex)
    dform = config.perturbation().form if delta is None else _delta_form(grid, delta)
    st = config.stencil
    if not _finite(A, phi):
        raise DivergenceError("initial fields are not finite", None, 0)

    precond, rho_used = None, None
    E = energy(grid, A, phi, dform, st)
    step = float(config.step_size)
    trace = [_trace_row(grid, 0, A, phi, dform, st, 0.0)]
    status = "max_iterations"
    it = 0
    while True:
        if E <= config.energy_tol:
            status = "converged"
            break
        if it >= config.max_iterations:
            break
        gA, gP = energy_gradient(grid, A, phi, dform, st)
        if not _finite(gA, gP):
            raise DivergenceError("non-finite gradient", (A, phi), it)
        if np.sqrt(pairing(grid, (gA, gP), (gA, gP))) <= config.grad_tol:
            status = "stalled"
            break
        if config.precondition is not None:
            rho = float(np.mean(np.abs(phi) ** 2))
            # rebuild the model when the spinor density moved by more than 20 %
            if rho_used is None or abs(rho - rho_used) > 0.2 * max(rho_used, 1e-3):
                precond = symbol_preconditioner(grid, config.precondition, st, rho)
                rho_used = rho
            dA, dP = precond(gA, gP)
        else:
            dA, dP = gA, gP
        # directional slope along the search direction
        g2 = pairing(grid, (gA, gP), (dA, dP))
        if config.step_rule == "fixed":
            A_new, phi_new = A - step * dA, phi - step * dP
            if not _finite(A_new, phi_new):
                raise DivergenceError("non-finite fields after a fixed step", (A, phi), it + 1)
            E_new = energy(grid, A_new, phi_new, dform, st)
            if not np.isfinite(E_new):
                raise DivergenceError("non-finite energy after a fixed step", (A, phi), it + 1)
        else:
            while True:
                A_new, phi_new = A - step * dA, phi - step * dP
                with np.errstate(over="ignore", invalid="ignore"):
                    E_new = energy(grid, A_new, phi_new, dform, st)
                if np.isfinite(E_new) and E_new <= E - config.armijo * step * g2:
                    break
                step *= config.shrink
                if step < 1e-300:
                    raise DivergenceError("line search failed to find a descent step", (A, phi), it + 1)
            assert E_new <= E, "backtracking produced an energy increase"
        it += 1
        A, phi, E = A_new, phi_new, E_new
        trace.append(_trace_row(grid, it, A, phi, dform, st, step))
        if callback is not None:
            callback(it, A, phi)
        if config.step_rule == "backtracking":
            step *= config.grow

    r1, r2 = sw_residual(grid, A, phi, dform, st)
    return SolverReport(
        A=A,
        phi=phi,
        converged=status == "converged",
        status=status,
        iterations=it,
        energy=float(E),
        dirac_residual=lat.norm(grid, r1),
        curv_residual=lat.norm(grid, r2),
        sup_phi_sq=_sup_phi_sq(phi),
        trace=trace,
        wall_time=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# a-priori bound


def bound_check(grid: TorusGrid, A, phi, delta=None, stencil="forward", C=None, threshold=1e-6, atol=1e-6):
    """Check ``sup |Phi|^2 <= max(0, C |delta|_inf) + atol`` on an approximate solution.

    ``C`` defaults to the frozen constant: with the normalizations used here
    ``q`` has operator norm ``2 sqrt 2`` on unit self-dual forms, and the
    maximum principle gives ``|Phi|^2 <= 2 |q(delta)|_op``.  ``threshold``
    bounds the residual energy accepted as "a solution"; ``atol`` absorbs the
    leftover spinor of an approximate solution when the bound is 0.  The
    reported ratio ignores ``atol``.
    """
    if C is None:
        C = DEFAULTS["bound_C"]
    dform = _delta_form(grid, delta)
    E = energy(grid, A, phi, dform, stencil)
    if E > threshold:
        raise PreconditionError(f"residual energy {E:.3e} exceeds the solution threshold {threshold:.1e}")
    sup = _sup_phi_sq(phi)
    dsup = float(np.sqrt((dform**2).sum(axis=0)).max())
    bound = max(0.0, C * dsup)
    ratio = sup / bound if bound > 0 else (0.0 if sup == 0 else np.inf)
    return BoundVerdict(sup, dsup, bound, bound - sup, float(ratio), bool(sup <= bound + atol))


# ---------------------------------------------------------------------------
# deformation complex


def _spinor_to_real(phi):
    return np.concatenate([phi.real.ravel(), phi.imag.ravel()])


def _real_to_spinor(grid, v):
    m = grid.sites * 2
    return (v[:m] + 1j * v[m:]).reshape(grid.shape + (2,))


def connection_derivative(grid: TorusGrid, A, phi, a, stencil="forward"):
    """``(dD_A/dA)[a] phi``, the lattice form of ``2 pi i a . Phi``."""
    U = lat.link_phases(grid, A)
    out = np.zeros(grid.shape + (2,), dtype=complex)
    for mu in range(4):
        f = lat._transport_fwd(U, phi, mu) * a[mu][..., None]
        if stencil == "forward":
            term = 2j * np.pi * f
        else:
            b = lat._transport_bwd(U, phi, mu) * lat.bwd(a[mu], mu)[..., None]
            term = 1j * np.pi * (f + b)
        out += np.einsum("ab,...b->...a", lat.GAMMA[mu], term)
    return out


def apply_l0(grid, phi, h):
    """Infinitesimal gauge action ``h -> (-dh, 2 pi i h Phi)``."""
    return -lat.d(grid, h), lat.TWO_PI_I * h[..., None] * phi


def apply_l1(grid, A, phi, a, psi, stencil="forward"):
    """Linearization of ``(r2, r1)`` at ``(A, Phi)`` in direction ``(a, psi)``."""
    two = lat.d_plus(grid, a) - 2 * sigma_form(phi, psi)
    spin = lat.dirac_plus(grid, A, psi, stencil) + connection_derivative(grid, A, phi, a, stencil)
    return two, spin


@dataclass
class DeformationComplex:
    L0: np.ndarray
    L1: np.ndarray
    ranks: tuple
    dims: tuple  # real dimensions of the three terms
    h: tuple
    product_norm: float
    cutoff: float

    @property
    def euler(self) -> int:
        return self.h[0] - self.h[1] + self.h[2]

    @property
    def euler_expected(self) -> int:
        return self.dims[0] - self.dims[1] + self.dims[2]


def _rank(M, cutoff):
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int((s > cutoff * s[0]).sum())


def deformation_complex(grid: TorusGrid, A, phi, stencil="forward", rank_cutoff=None, dense_limit=None):
    """Dense real matrices of ``L0`` and ``L1`` and the dimensions ``(h0, h1, h2)``.

    Coordinates: Omega^0 sitewise; Omega^1 (+) W+ as the 1-form components
    followed by real and imaginary spinor parts; Omega^2+ as coefficients on
    ``SD_BASIS`` followed by the W- real and imaginary parts.  Singular values
    below ``rank_cutoff`` times the largest count as zero.
    """
    rank_cutoff = DEFAULTS["rank_cutoff"] if rank_cutoff is None else rank_cutoff
    dense_limit = DEFAULTS["dense_limit"] if dense_limit is None else dense_limit
    A = grid.check(A, "1")
    phi = grid.check(phi, "spinor")
    s = grid.sites
    n0, n1, n2 = s, 8 * s, 7 * s
    if n1 > dense_limit:
        raise CapacityError(f"Omega^1 + W+ has real dimension {n1} > dense limit {dense_limit}")

    L0 = np.empty((n1, n0))
    for j in range(n0):
        e = np.zeros(s)
        e[j] = 1.0
        a, ps = apply_l0(grid, phi, e.reshape(grid.shape))
        L0[:, j] = np.concatenate([a.ravel(), _spinor_to_real(ps)])

    L1 = np.empty((n2, n1))
    zero_a, zero_p = grid.one_form(), grid.spinor()
    for j in range(n1):
        e = np.zeros(n1)
        e[j] = 1.0
        if j < 4 * s:
            a, ps = e[: 4 * s].reshape((4,) + grid.shape), zero_p
        else:
            a, ps = zero_a, _real_to_spinor(grid, e[4 * s:])
        two, spin = apply_l1(grid, A, phi, a, ps, stencil)
        L1[:, j] = np.concatenate([lat.self_dual_coeffs(two).ravel(), _spinor_to_real(spin)])

    r0, r1 = _rank(L0, rank_cutoff), _rank(L1, rank_cutoff)
    h = (n0 - r0, n1 - r1 - r0, n2 - r1)
    prod = float(np.linalg.norm(L1 @ L0, 2))
    return DeformationComplex(L0, L1, (r0, r1), (n0, n1, n2), h, prod, rank_cutoff)
