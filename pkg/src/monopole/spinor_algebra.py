"""
Spinor linear algebra in dimensions 3, 4 and 6 over the complex numbers.

Basis conventions (every matrix in this package depends on them):

* ``W+`` and ``W-`` carry the standard bases ``(w1, w2)``; the volume
  isomorphism sends ``w-1 ^ w-2`` to ``VOLUME_PHI * w+1 ^ w+2`` with
  ``VOLUME_PHI = 1``.
* ``U = Hom(W+, W-)`` is represented by 2x2 matrices (rows index ``W-``,
  columns index ``W+``) with the ordered basis ``U_BASIS = (E00, E01, E10, E11)``
  of matrix units.
* ``Lambda^2 U`` uses the monomial basis ``u_i ^ u_j`` for the ordered pairs
  ``PAIRS = ((0,1), (0,2), (0,3), (1,2), (1,3), (2,3))``; a bivector is a
  complex array of shape ``(6,)``.
* The volume functional takes ``u1 ^ u2 ^ u3 ^ u4`` to ``PSI_SIGN = -1``.  This
  is the sign for which the map to ``End0(W+)`` annihilates the ``-1``
  eigenspace of the star operator.
* Hermitian forms are the standard ones, linear in the first argument:
  ``h(x, y) = y^H x``.
* The real form ``T`` (fixed set of the dagger) gets the ordered frame
  ``FRAME = (I, diag(i,-i), [[0,1],[-1,0]], [[0,-i],[-i,0]])``.  Its
  orientation ``e1 ^ e2 ^ e3 ^ e4`` is the one under which the algebraic
  star equals the Euclidean Hodge star.  Each frame element satisfies
  ``B(e) e = I``, so the pairing gives ``(e_j, e_k) = 2 delta_jk``.

End0 coordinates use ``END0_BASIS = (diag(1,-1), E01, E10)``.
"""
from dataclasses import dataclass
from itertools import combinations

import numpy as np


class DomainError(ValueError):
    """Raised when an input violates an operation's precondition."""


VOLUME_PHI = 1.0
PSI_SIGN = -1.0

PAIRS = tuple(combinations(range(4), 2))

U_BASIS = tuple(
    np.array(m, dtype=complex)
    for m in ([[1, 0], [0, 0]], [[0, 1], [0, 0]], [[0, 0], [1, 0]], [[0, 0], [0, 1]])
)

END0_BASIS = tuple(
    np.array(m, dtype=complex)
    for m in ([[1, 0], [0, -1]], [[0, 1], [0, 0]], [[0, 0], [1, 0]])
)

FRAME = tuple(
    np.array(m, dtype=complex)
    for m in (
        [[1, 0], [0, 1]],
        [[1j, 0], [0, -1j]],
        [[0, 1], [-1, 0]],
        [[0, -1j], [-1j, 0]],
    )
)

_FLOAT_TRACE_TOL = 1e-14


@dataclass(frozen=True)
class Spinor:
    """Two complex components of a vector in ``W+`` or ``W-``."""

    data: np.ndarray
    chirality: str = "+"

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex).reshape(2)
        object.__setattr__(self, "data", data)
        if self.chirality not in ("+", "-"):
            raise DomainError(f"unknown chirality {self.chirality!r}")

    def norm_sq(self) -> float:
        return float(np.vdot(self.data, self.data).real)


@dataclass(frozen=True)
class HomElement:
    """A 2x2 matrix in Hom(W+, W-) (``direction='+-'``) or Hom(W-, W+) (``'-+'``)."""

    data: np.ndarray
    direction: str = "+-"

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=complex).reshape(2, 2))
        if self.direction not in ("+-", "-+"):
            raise DomainError(f"unknown direction {self.direction!r}")


@dataclass(frozen=True)
class EndTraceless:
    data: np.ndarray
    chirality: str = "+"

    def __post_init__(self):
        data = np.asarray(self.data)
        exact = np.issubdtype(data.dtype, np.integer)
        data = data.astype(complex).reshape(2, 2)
        tr = abs(np.trace(data))
        tol = 0.0 if exact else _FLOAT_TRACE_TOL * max(1.0, np.abs(data).max())
        if tr > tol:
            raise DomainError(f"trace {tr:.3e} is not zero")
        if self.chirality not in ("+", "-"):
            raise DomainError(f"unknown chirality {self.chirality!r}")
        object.__setattr__(self, "data", data)


# ---------------------------------------------------------------------------
# dimension 3


def trace_form(f: EndTraceless, g: EndTraceless) -> complex:
    """The form ``{f, g} = Tr(f g)`` on traceless endomorphisms."""
    if f.chirality != g.chirality:
        raise DomainError("trace_form operands have different chirality")
    return complex(np.trace(f.data @ g.data))


def end0_coords(m) -> np.ndarray:
    """Coordinates of a traceless 2x2 matrix in ``END0_BASIS``."""
    m = np.asarray(m, dtype=complex)
    return np.array([m[0, 0], m[0, 1], m[1, 0]])


def end0_from_coords(c) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    return np.array([[c[0], c[1]], [c[2], -c[0]]])


GRAM_END0 = np.array([[np.trace(a @ b) for b in END0_BASIS] for a in END0_BASIS])


def _check_invertible(g, tol=1e-12):
    g = np.asarray(g, dtype=complex)
    if abs(np.linalg.det(g)) <= tol:
        raise DomainError("matrix is singular")
    return g


def rho3(g) -> np.ndarray:
    """Conjugation action ``f -> g f g^-1`` of GL(2) on End0, as a 3x3 matrix."""
    g = _check_invertible(g)
    ginv = np.linalg.inv(g)
    return np.column_stack([end0_coords(g @ e @ ginv) for e in END0_BASIS])


# ---------------------------------------------------------------------------
# dimension 4


def adjugate(m) -> np.ndarray:
    m = np.asarray(m)
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def b_map(f: HomElement) -> HomElement:
    """The isomorphism ``B: U -> U*``.

    With the fixed bases the defining identity
    ``phi(f(w+) ^ w-) = w+ ^ B(f)(w-)`` is solved by ``B(f) = phi * adj(f)``.
    """
    if f.direction != "+-":
        raise DomainError("b_map expects an element of Hom(W+, W-)")
    return HomElement(VOLUME_PHI * adjugate(f.data), "-+")


def wedge2d(a, b) -> complex:
    """Coefficient of ``a ^ b`` on the basis 2-vector of a 2-dimensional space."""
    return a[0] * b[1] - a[1] * b[0]


def b_identity_defect(f: HomElement) -> float:
    """Largest violation of the defining identity of B over basis pairs."""
    bf = b_map(f).data
    eye = np.eye(2)
    out = 0.0
    for wp in eye:
        for wm in eye:
            lhs = VOLUME_PHI * wedge2d(f.data @ wp, wm)
            rhs = wedge2d(wp, bf @ wm)
            out = max(out, abs(lhs - rhs))
    return out


def sym_pairing(f: HomElement, g: HomElement) -> complex:
    """``(f, g) = Tr_{W+}(B(f) g)``."""
    if f.direction != "+-" or g.direction != "+-":
        raise DomainError("sym_pairing is defined on Hom(W+, W-)")
    return complex(np.trace(b_map(f).data @ g.data))


def u_coords(m) -> np.ndarray:
    return np.asarray(m, dtype=complex).reshape(4)


GRAM_U = np.array(
    [[sym_pairing(HomElement(a), HomElement(b)) for b in U_BASIS] for a in U_BASIS]
)


def rho4(g, h, tol=1e-12) -> np.ndarray:
    """Action ``f -> h f g^-1`` of S(GL(W+) x GL(W-)) on U as a 4x4 matrix."""
    g = _check_invertible(g, tol)
    h = np.asarray(h, dtype=complex)
    if abs(np.linalg.det(g) - np.linalg.det(h)) > tol * max(1.0, abs(np.linalg.det(g))):
        raise DomainError("det(g) != det(h)")
    ginv = np.linalg.inv(g)
    return np.column_stack([u_coords(h @ e @ ginv) for e in U_BASIS])


# ---------------------------------------------------------------------------
# dimension 6


def _levi_civita(idx) -> int:
    idx = list(idx)
    if len(set(idx)) < len(idx):
        return 0
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign


GRAM_WEDGE = np.array(
    [[PSI_SIGN * _levi_civita(a + b) for b in PAIRS] for a in PAIRS], dtype=complex
)


def wedge_pairing(a, b) -> complex:
    """``<a, b> = psi(a ^ b)`` on Lambda^2 U."""
    return complex(np.asarray(a) @ GRAM_WEDGE @ np.asarray(b))


def wedge_power(m) -> np.ndarray:
    """Matrix of the induced map on Lambda^2 for a 4x4 matrix ``m``."""
    m = np.asarray(m)
    out = np.empty((6, 6), dtype=np.result_type(m, complex))
    for col, (i, j) in enumerate(PAIRS):
        for row, (k, l) in enumerate(PAIRS):
            out[row, col] = m[k, i] * m[l, j] - m[l, i] * m[k, j]
    return out


def rho6(g, tol=1e-10) -> np.ndarray:
    g = np.asarray(g, dtype=complex)
    if abs(np.linalg.det(g) - 1) >= tol:
        raise DomainError("rho6 needs det(g) = 1")
    return wedge_power(g)


# ---------------------------------------------------------------------------
# combination: star, projectors, End0 isomorphisms

# pairing on Lambda^2 U induced by (,) on U
GRAM_INDUCED = wedge_power(GRAM_U)
# (alpha, beta) = <alpha, *beta>
STAR = np.linalg.solve(GRAM_WEDGE, GRAM_INDUCED)
PROJ_PLUS = (np.eye(6) + STAR) / 2
PROJ_MINUS = (np.eye(6) - STAR) / 2


def psi_self_pairing() -> complex:
    """``(psi, psi)`` for the volume functional, using the dual of the induced pairing."""
    # psi is the functional vol -> PSI_SIGN; the induced form on Lambda^4 U is det(GRAM_U)
    return PSI_SIGN * PSI_SIGN / np.linalg.det(GRAM_U)


def star(a) -> np.ndarray:
    return STAR @ np.asarray(a, dtype=complex)


def project_lambda(a, sign: str) -> np.ndarray:
    if sign == "+":
        return PROJ_PLUS @ np.asarray(a, dtype=complex)
    if sign == "-":
        return PROJ_MINUS @ np.asarray(a, dtype=complex)
    raise DomainError(f"sign must be '+' or '-', got {sign!r}")


def _iso_table(sign):
    out = []
    for i, j in PAIRS:
        fi, fj = U_BASIS[i], U_BASIS[j]
        if sign == "+":
            out.append(adjugate(fi) @ fj - adjugate(fj) @ fi)
        else:
            out.append(fi @ adjugate(fj) - fj @ adjugate(fi))
    return VOLUME_PHI * np.array(out)


_ISO = {"+": _iso_table("+"), "-": _iso_table("-")}


def iso_end0(a, sign: str) -> EndTraceless:
    """Linear extension of ``f ^ g -> B(f)g - B(g)f`` (``+``) or ``fB(g) - gB(f)`` (``-``)."""
    if sign not in _ISO:
        raise DomainError(f"sign must be '+' or '-', got {sign!r}")
    m = np.tensordot(np.asarray(a, dtype=complex), _ISO[sign], axes=1)
    return EndTraceless(m, sign)


def iso_end0_matrix(sign: str) -> np.ndarray:
    """4x6 matrix sending bivector coordinates to the flattened image."""
    return _ISO[sign].reshape(6, 4).T


# ---------------------------------------------------------------------------
# compact forms


def dagger(f: HomElement) -> HomElement:
    """Anti-linear involution with ``h-(f'(w), w') = h+(w, B(f)(w'))``, i.e. ``B(f)^H``."""
    if f.direction != "+-":
        raise DomainError("dagger is defined on Hom(W+, W-)")
    return HomElement(b_map(f).data.conj().T, "+-")


def frame_to_u() -> np.ndarray:
    """4x4 matrix whose columns are the U-coordinates of ``FRAME``."""
    return np.column_stack([u_coords(e) for e in FRAME])


FRAME_TO_U = frame_to_u()
# bivector change of basis: frame pairs e_j ^ e_k -> monomial coordinates
FRAME_WEDGE_TO_U = wedge_power(FRAME_TO_U)
U_WEDGE_TO_FRAME = np.linalg.inv(FRAME_WEDGE_TO_U)

# Euclidean Hodge star on Lambda^2 R^4, pair order (12,13,14,23,24,34)
HODGE_EUCLIDEAN = np.zeros((6, 6))
for _col, (_i, _j) in enumerate(PAIRS):
    _k, _l = [m for m in range(4) if m not in (_i, _j)]
    HODGE_EUCLIDEAN[PAIRS.index((_k, _l)), _col] = _levi_civita((_i, _j, _k, _l))


def star_in_frame() -> np.ndarray:
    """The algebraic star written in the real frame basis of Lambda^2 T."""
    return U_WEDGE_TO_FRAME @ STAR @ FRAME_WEDGE_TO_U


def frame_bivector_to_u(b) -> np.ndarray:
    return FRAME_WEDGE_TO_U @ np.asarray(b, dtype=complex)


def u_bivector_to_frame(b) -> np.ndarray:
    return U_WEDGE_TO_FRAME @ np.asarray(b, dtype=complex)


def hermitian(x, y) -> complex:
    """Standard hermitian form, linear in the first argument."""
    return complex(np.vdot(y, x))


def sigma(phi: Spinor, psi: Spinor) -> np.ndarray:
    """``w -> i (h+(w, psi) phi - 1/2 h+(phi, psi) w)`` as a 2x2 matrix on W+."""
    if phi.chirality != "+" or psi.chirality != "+":
        raise DomainError("sigma takes two sections of W+")
    p, q = phi.data, psi.data
    return 1j * (np.outer(p, q.conj()) - 0.5 * np.vdot(q, p) * np.eye(2))


# Lambda^+_R in frame coordinates and its image in End0(W+)^ah
_SD_FRAME_BASIS = np.array(
    [[1, 0, 0, 0, 0, 1], [0, 1, 0, 0, -1, 0], [0, 0, 1, 1, 0, 0]], dtype=float
) / np.sqrt(2)
_SD_IMAGES = np.array(
    [iso_end0(frame_bivector_to_u(s), "+").data.reshape(4) for s in _SD_FRAME_BASIS]
).T  # 4 x 3 complex
_SD_REAL_SYSTEM = np.vstack([_SD_IMAGES.real, _SD_IMAGES.imag])  # 8 x 3
_SD_PINV = np.linalg.pinv(_SD_REAL_SYSTEM)


def self_dual_frame_basis() -> np.ndarray:
    """Orthonormal basis (rows) of Lambda^+_R in frame coordinates."""
    return _SD_FRAME_BASIS.copy()


def skew_to_self_dual_coeffs(s) -> np.ndarray:
    """Real coefficients on ``self_dual_frame_basis()`` of the preimage of skew ``s``.

    Works on stacks: ``s`` may have shape ``(..., 2, 2)``.
    """
    s = np.asarray(s, dtype=complex)
    flat = s.reshape(s.shape[:-2] + (4,))
    rhs = np.concatenate([flat.real, flat.imag], axis=-1)
    return rhs @ _SD_PINV.T


def lambda_plus_from_skew(s, tol=1e-12) -> np.ndarray:
    """Preimage in Lambda^+ (monomial coordinates) of a traceless skew-Hermitian matrix."""
    s = np.asarray(s, dtype=complex)
    scale = max(1.0, np.abs(s).max())
    if abs(np.trace(s)) > tol * scale or np.abs(s + s.conj().T).max() > tol * scale:
        raise DomainError("input is not traceless skew-Hermitian")
    coeffs = skew_to_self_dual_coeffs(s)
    return frame_bivector_to_u(coeffs @ _SD_FRAME_BASIS)


def clifford_defect(f: HomElement) -> float:
    """``max |B(f) f - (f,f)/2 I|``."""
    lhs = b_map(f).data @ f.data
    return float(np.abs(lhs - 0.5 * sym_pairing(f, f) * np.eye(2)).max())


# ---------------------------------------------------------------------------
# invariant report

# name -> tolerance on the reported defect
INVARIANT_TOLERANCES = {
    "star_squared": 1e-13,
    "dim_lambda_plus": 0,
    "dim_lambda_minus": 0,
    "rho3_gram": 1e-9,
    "rho3_det": 1e-9,
    "rho4_gram": 1e-9,
    "rho4_det": 1e-9,
    "rho6_gram": 1e-9,
    "rho6_det": 1e-9,
    "dagger_involution": 1e-13,
    "sigma_skew_hermitian": 1e-13,
    "sigma_traceless": 1e-13,
    "b_identity": 1e-12,
    "clifford": 1e-12,
    "iso_kills_minus": 1e-12,
    "iso_rank_plus": 0,
    "star_is_hodge": 1e-12,
}


def _complex_normal(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _unit_det(rng, n):
    """Random complex matrix rescaled to determinant 1."""
    g = _complex_normal(rng, (n, n))
    return g / np.linalg.det(g) ** (1.0 / n)


def _gram_defect(R, G):
    """Relative defect of ``R^T G R = G``."""
    scale = max(1.0, np.abs(R).max() ** 2 * np.abs(G).max())
    return float(np.abs(R.T @ G @ R - G).max() / scale)


def invariant_report(seed=0, samples=200, clifford_samples=1000) -> dict:
    """Largest defect of every algebraic invariant over random samples.

    Group elements are drawn with determinant 1.  Dimensions are reported
    as ``|rank - 3|``.
    """
    rng = np.random.default_rng(seed)
    out = dict.fromkeys(INVARIANT_TOLERANCES, 0.0)
    out["star_squared"] = float(np.abs(STAR @ STAR - np.eye(6)).max())
    out["dim_lambda_plus"] = abs(int(np.linalg.matrix_rank(PROJ_PLUS)) - 3)
    out["dim_lambda_minus"] = abs(int(np.linalg.matrix_rank(PROJ_MINUS)) - 3)
    for _ in range(samples):
        g = _unit_det(rng, 2)
        R = rho3(g)
        out["rho3_gram"] = max(out["rho3_gram"], _gram_defect(R, GRAM_END0))
        out["rho3_det"] = max(out["rho3_det"], abs(np.linalg.det(R) - 1))
        h = _unit_det(rng, 2)
        R = rho4(g, h)
        out["rho4_gram"] = max(out["rho4_gram"], _gram_defect(R, GRAM_U))
        out["rho4_det"] = max(out["rho4_det"], abs(np.linalg.det(R) - 1))
        R = rho6(_unit_det(rng, 4))
        out["rho6_gram"] = max(out["rho6_gram"], _gram_defect(R, GRAM_WEDGE))
        out["rho6_det"] = max(out["rho6_det"], abs(np.linalg.det(R) - 1))
        f = HomElement(_complex_normal(rng, (2, 2)))
        out["dagger_involution"] = max(
            out["dagger_involution"], float(np.abs(dagger(dagger(f)).data - f.data).max())
        )
        out["b_identity"] = max(out["b_identity"], b_identity_defect(f))
        p = Spinor(_complex_normal(rng, 2))
        s = sigma(p, p)
        out["sigma_skew_hermitian"] = max(out["sigma_skew_hermitian"], float(np.abs(s + s.conj().T).max()))
        out["sigma_traceless"] = max(out["sigma_traceless"], abs(np.trace(s)))
        a = _complex_normal(rng, 6)
        out["iso_kills_minus"] = max(
            out["iso_kills_minus"], float(np.abs(iso_end0(project_lambda(a, "-"), "+").data).max())
        )
    for _ in range(clifford_samples):
        out["clifford"] = max(out["clifford"], clifford_defect(HomElement(_complex_normal(rng, (2, 2)))))
    out["iso_rank_plus"] = abs(int(np.linalg.matrix_rank(iso_end0_matrix("+") @ PROJ_PLUS)) - 3)
    out["star_is_hodge"] = float(np.abs(star_in_frame() - HODGE_EUCLIDEAN).max())
    return out


def invariant_failures(report: dict) -> list:
    return [k for k, v in report.items() if v > INVARIANT_TOLERANCES[k]]
