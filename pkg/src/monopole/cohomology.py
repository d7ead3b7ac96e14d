"""
Integral and mod-2 cohomology of finite free chain complexes.

All integer arithmetic is done with Python ints (arbitrary precision), held in
numpy object arrays, so Smith normal form pivots cannot overflow.  Results
can be converted back to fixed-width arrays with :func:`to_int64`, which
raises ``OverflowError`` instead of wrapping.

Cochains are column vectors on the chosen cell basis.  The coboundary in
degree ``k`` is ``d_k = transpose(boundary_{k+1})``.
"""
import json
from dataclasses import dataclass, field
from itertools import product
from math import gcd
from pathlib import Path

import numpy as np

from .spinor_algebra import DomainError

RINGS = ("Z", "Z/2")


class ChainComplexError(ValueError):
    """Malformed chain complex input (parse or validation failure)."""


def as_int_matrix(m, shape=None) -> np.ndarray:
    """Copy ``m`` into an object array of Python ints."""
    arr = np.array(m, dtype=object)
    if shape is not None:
        if arr.size == 0:
            arr = np.zeros(shape, dtype=object)
        arr = arr.reshape(shape)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        if isinstance(v, (float, np.floating)) and not float(v).is_integer():
            raise ChainComplexError(f"non-integer entry {v!r} at {idx}")
        out[idx] = int(v)
    return out


def to_int64(m) -> np.ndarray:
    m = np.asarray(m, dtype=object)
    lim = np.iinfo(np.int64)
    for idx, v in np.ndenumerate(m):
        if not lim.min <= v <= lim.max:
            raise OverflowError(f"entry {idx} = {v} does not fit in int64")
    return m.astype(np.int64)


def _eye(n):
    out = np.zeros((n, n), dtype=object)
    for i in range(n):
        out[i, i] = 1
    return out


def _zeros(r, c):
    return np.zeros((r, c), dtype=object)


def _matmul(a, b):
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object)
    if a.shape[-1] == 0:
        shape = a.shape[:-1] + b.shape[1:]
        return np.zeros(shape, dtype=object)
    return a.dot(b)


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class SmithDecomposition:
    """``M = U @ D @ V`` with unimodular ``U``, ``V``.

    ``left`` and ``right`` are the inverses of ``U`` and ``V``, so that
    ``left @ M @ right = D``.
    """

    U: np.ndarray
    D: np.ndarray
    V: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def diagonal(self) -> list:
        n = min(self.D.shape)
        return [self.D[i, i] for i in range(n)]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)


def smith_normal_form(M) -> SmithDecomposition:
    """Smith normal form of an integer matrix.

    Deterministic: pivots are chosen as the first entry of least absolute
    value in row-major order.
    """
    A = as_int_matrix(M)
    if A.ndim != 2:
        raise DomainError("smith_normal_form expects a 2-D matrix")
    m, n = A.shape
    P, Pinv = _eye(m), _eye(m)  # P @ M_orig @ Q = A, always
    Q, Qinv = _eye(n), _eye(n)

    def swap_rows(i, j):
        if i != j:
            A[[i, j]] = A[[j, i]]
            P[[i, j]] = P[[j, i]]
            Pinv[:, [i, j]] = Pinv[:, [j, i]]

    def swap_cols(i, j):
        if i != j:
            A[:, [i, j]] = A[:, [j, i]]
            Q[:, [i, j]] = Q[:, [j, i]]
            Qinv[[i, j]] = Qinv[[j, i]]

    def add_row(dst, src, c):
        # row_dst += c * row_src
        if c:
            A[dst] = A[dst] + c * A[src]
            P[dst] = P[dst] + c * P[src]
            Pinv[:, src] = Pinv[:, src] - c * Pinv[:, dst]

    def add_col(dst, src, c):
        if c:
            A[:, dst] = A[:, dst] + c * A[:, src]
            Q[:, dst] = Q[:, dst] + c * Q[:, src]
            Qinv[src] = Qinv[src] - c * Qinv[dst]

    def negate_row(i):
        A[i] = -A[i]
        P[i] = -P[i]
        Pinv[:, i] = -Pinv[:, i]

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = A[i, j]
                if v != 0 and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            done = True
            p = A[t, t]
            for i in range(t + 1, m):
                if A[i, t] != 0:
                    add_row(i, t, -(A[i, t] // p))
                    if A[i, t] != 0:
                        done = False
            for j in range(t + 1, n):
                if A[t, j] != 0:
                    add_col(j, t, -(A[t, j] // p))
                    if A[t, j] != 0:
                        done = False
            if not done:
                # move the smallest remaining entry of row/column t to the pivot
                cands = [(abs(A[i, t]), i, "r") for i in range(t, m) if A[i, t] != 0]
                cands += [(abs(A[t, j]), j, "c") for j in range(t + 1, n) if A[t, j] != 0]
                _, k, kind = min(cands)
                if kind == "r":
                    swap_rows(t, k)
                else:
                    swap_cols(t, k)
                continue
            # divisibility: pivot must divide the remaining block
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if A[i, j] % p != 0:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(t, bad, 1)
        if A[t, t] < 0:
            negate_row(t)
        t += 1

    return SmithDecomposition(U=Pinv, D=A, V=Qinv, left=P, right=Q)


def invariant_factors(M) -> list:
    return [d for d in smith_normal_form(M).diagonal if d != 0]


# ---------------------------------------------------------------------------
# GF(2) linear algebra on uint8 arrays


def _rref2(M):
    M = (np.asarray(M, dtype=np.int64) % 2).astype(np.uint8)
    rows, cols = M.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hit = np.nonzero(M[r:, c])[0]
        if hit.size == 0:
            continue
        p = r + hit[0]
        if p != r:
            M[[r, p]] = M[[p, r]]
        for i in range(rows):
            if i != r and M[i, c]:
                M[i] ^= M[r]
        pivots.append(c)
        r += 1
    return M, pivots


def rank2(M) -> int:
    M = np.asarray(M)
    if M.size == 0:
        return 0
    return len(_rref2(M)[1])


def nullspace2(M) -> np.ndarray:
    """Basis (columns) of the kernel of ``M`` over GF(2)."""
    M = np.asarray(M)
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n, dtype=np.uint8)
    R, piv = _rref2(M)
    free = [c for c in range(n) if c not in piv]
    basis = []
    for f in free:
        v = np.zeros(n, dtype=np.uint8)
        v[f] = 1
        for row, pc in enumerate(piv):
            if R[row, f]:
                v[pc] = 1
        basis.append(v)
    if not basis:
        return np.zeros((n, 0), dtype=np.uint8)
    return np.array(basis, dtype=np.uint8).T


def solve2(A, b):
    """A solution ``x`` of ``A x = b`` over GF(2), or ``None``."""
    A = np.asarray(A, dtype=np.int64) % 2
    b = np.asarray(b, dtype=np.int64).reshape(-1) % 2
    if A.shape[1] == 0:
        return np.zeros(0, dtype=np.uint8) if not b.any() else None
    aug = np.concatenate([A, b[:, None]], axis=1)
    R, piv = _rref2(aug)
    n = A.shape[1]
    if n in piv:
        return None
    x = np.zeros(n, dtype=np.uint8)
    for row, pc in enumerate(piv):
        x[pc] = R[row, n]
    return x


# ---------------------------------------------------------------------------
# chain complexes


class ChainComplex:
    """Free chain complex ``C_d -> ... -> C_0`` with integer boundary matrices.

    ``boundaries[k]`` is the matrix of ``C_k -> C_{k-1}``, shape
    ``(ranks[k-1], ranks[k])``.  Missing degrees are zero maps.
    """

    def __init__(self, ranks, boundaries=None, name="", manifold=False, classes=None):
        self.ranks = [int(r) for r in ranks]
        if any(r < 0 for r in self.ranks):
            raise ChainComplexError("ranks must be nonnegative")
        self.name = name
        self.manifold = bool(manifold)
        self.boundaries = {}
        for k, mat in (boundaries or {}).items():
            k = int(k)
            if not 1 <= k < len(self.ranks):
                raise ChainComplexError(f"boundary degree {k} out of range")
            shape = (self.ranks[k - 1], self.ranks[k])
            try:
                self.boundaries[k] = as_int_matrix(mat, shape)
            except ValueError as exc:
                raise ChainComplexError(
                    f"boundary {k}: expected shape {shape}: {exc}"
                ) from None
        self.classes = dict(classes or {})
        self._validate()

    @property
    def dim(self) -> int:
        return len(self.ranks) - 1

    def rank(self, k) -> int:
        return self.ranks[k] if 0 <= k < len(self.ranks) else 0

    def boundary(self, k) -> np.ndarray:
        if k in self.boundaries:
            return self.boundaries[k]
        return _zeros(self.rank(k - 1), self.rank(k))

    def coboundary(self, k) -> np.ndarray:
        """``d_k: C^k -> C^{k+1}``."""
        return self.boundary(k + 1).T.copy()

    def _validate(self):
        for k in range(2, len(self.ranks)):
            prod_ = _matmul(self.boundary(k - 1), self.boundary(k))
            nz = [idx for idx, v in np.ndenumerate(prod_) if v != 0]
            if nz:
                raise ChainComplexError(
                    f"boundary_{k - 1} @ boundary_{k} != 0 at entry {nz[0]}"
                )

    @classmethod
    def from_dict(cls, doc) -> "ChainComplex":
        if not isinstance(doc, dict):
            raise ChainComplexError("top level must be an object")
        if "ranks" not in doc:
            raise ChainComplexError("missing key 'ranks'")
        unknown = set(doc) - {"name", "manifold", "ranks", "boundaries", "classes"}
        if unknown:
            raise ChainComplexError(f"unknown key {sorted(unknown)[0]!r}")
        cx = cls(
            doc["ranks"],
            doc.get("boundaries", {}),
            name=doc.get("name", ""),
            manifold=doc.get("manifold", False),
        )
        for cname, spec in doc.get("classes", {}).items():
            try:
                cx.classes[cname] = cohomology_class(
                    cx, int(spec["degree"]), spec["cochain"], spec.get("ring", "Z/2")
                )
            except (KeyError, DomainError) as exc:
                raise ChainComplexError(f"class {cname!r}: {exc}") from None
        return cx

    @classmethod
    def from_file(cls, path) -> "ChainComplex":
        text = Path(path).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ChainComplexError(
                f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "manifold": self.manifold,
            "ranks": list(self.ranks),
            "boundaries": {
                str(k): [[int(v) for v in row] for row in m]
                for k, m in sorted(self.boundaries.items())
            },
            "classes": {
                n: {"degree": c.degree, "ring": c.ring, "cochain": list(c.representative)}
                for n, c in self.classes.items()
            },
        }


# ---------------------------------------------------------------------------
# cohomology groups


@dataclass
class CohomologyGroup:
    """``H^k(C; ring)`` with coordinates on its cyclic decomposition.

    Coordinates list the torsion summands first (``Z/t`` for ``t`` in
    ``torsion``), then ``free_rank`` copies of ``Z``.  Over ``Z/2`` there is
    no torsion and ``free_rank`` is the dimension.
    """

    cx: ChainComplex
    degree: int
    ring: str
    free_rank: int
    torsion: list
    generators: list = field(repr=False)
    _coord_fn: object = field(repr=False)

    @property
    def orders(self) -> list:
        """Order of each coordinate (0 for infinite cyclic)."""
        if self.ring == "Z/2":
            return [2] * self.free_rank
        return list(self.torsion) + [0] * self.free_rank

    @property
    def ngens(self) -> int:
        return len(self.generators)

    def coordinates(self, cocycle) -> tuple:
        return self._coord_fn(cocycle)

    def is_trivial(self) -> bool:
        return self.ngens == 0

    def element(self, coords) -> "CohomologyClass":
        rep = np.zeros(self.cx.rank(self.degree), dtype=object)
        for c, g in zip(coords, self.generators):
            rep = rep + int(c) * g
        if self.ring == "Z/2":
            rep = rep % 2
        return cohomology_class(self.cx, self.degree, rep, self.ring)

    def describe(self) -> str:
        if self.ring == "Z/2":
            return "0" if self.free_rank == 0 else " + ".join(["Z/2"] * self.free_rank)
        parts = [f"Z/{t}" for t in self.torsion] + ["Z"] * self.free_rank
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class CohomologyClass:
    cx: ChainComplex = field(repr=False, compare=False)
    degree: int
    ring: str
    representative: tuple
    coords: tuple

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)


def _integral_group(cx, k) -> CohomologyGroup:
    n = cx.rank(k)
    snf = smith_normal_form(cx.coboundary(k))
    r = snf.rank
    K = snf.right[:, r:]  # kernel basis (columns)
    Vk = snf.V
    B = _matmul(Vk, cx.coboundary(k - 1))[r:, :]
    snf_b = smith_normal_form(B)
    rb = snf_b.rank
    diag = snf_b.diagonal
    m = n - r
    keep = [i for i in range(m) if i >= rb or diag[i] != 1]
    torsion = [diag[i] for i in keep if i < rb]
    free_rank = m - rb
    gens = [_matmul(K, snf_b.U[:, i]) for i in keep]

    def coords(cocycle):
        x = as_int_matrix(cocycle, (n,))
        if any(v != 0 for v in _matmul(cx.coboundary(k), x)):
            raise DomainError(f"cochain is not a cocycle in degree {k}")
        y = _matmul(Vk, x)[r:]
        z = _matmul(snf_b.left, y)
        out = []
        for i in keep:
            out.append(z[i] % diag[i] if i < rb else z[i])
        return tuple(int(v) for v in out)

    return CohomologyGroup(cx, k, "Z", free_rank, torsion, gens, coords)


def _mod2_group(cx, k) -> CohomologyGroup:
    n = cx.rank(k)
    dk = np.asarray(cx.coboundary(k) % 2, dtype=np.int64)
    K = nullspace2(dk) if n else np.zeros((0, 0), dtype=np.uint8)
    m = K.shape[1]
    prev = np.asarray(cx.coboundary(k - 1) % 2, dtype=np.int64)
    # image columns expressed in kernel coordinates
    cols = [solve2(K, prev[:, j]) for j in range(prev.shape[1])]
    B = np.array(cols, dtype=np.uint8).T if cols else np.zeros((m, 0), dtype=np.uint8)
    # extend a basis of im(B) to a basis of GF(2)^m by standard vectors
    basis = []
    if B.size:
        R, piv = _rref2(B.T)
        basis = [R[i] for i in range(len(piv))]
    rb = len(basis)
    ext = []
    cur = list(basis)
    for i in range(m):
        e = np.zeros(m, dtype=np.uint8)
        e[i] = 1
        trial = np.array(cur + [e])
        if rank2(trial) > len(cur):
            cur.append(e)
            ext.append(e)
    full = np.array(cur, dtype=np.uint8).T if cur else np.zeros((m, 0), dtype=np.uint8)
    gens = [np.array((K.astype(np.int64) @ e) % 2, dtype=object) for e in ext]

    def coords(cocycle):
        x = np.asarray(as_int_matrix(cocycle, (n,)), dtype=np.int64) % 2
        if n and ((dk @ x) % 2).any():
            raise DomainError(f"cochain is not a mod-2 cocycle in degree {k}")
        y = solve2(K, x)
        c = solve2(full, y) if m else np.zeros(0, dtype=np.uint8)
        return tuple(int(v) for v in c[rb:])

    return CohomologyGroup(cx, k, "Z/2", len(ext), [], gens, coords)


def cohomology_group(cx: ChainComplex, k: int, ring="Z") -> CohomologyGroup:
    if ring not in RINGS:
        raise DomainError(f"ring must be one of {RINGS}")
    if not 0 <= k <= cx.dim:
        raise DomainError(f"degree {k} out of range 0..{cx.dim}")
    return _integral_group(cx, k) if ring == "Z" else _mod2_group(cx, k)


def cohomology_groups(cx: ChainComplex, ring="Z") -> list:
    """``[(free_rank, torsion_factors), ...]`` for degrees ``0..dim``."""
    out = []
    for k in range(cx.dim + 1):
        g = cohomology_group(cx, k, ring)
        out.append((g.free_rank, list(g.torsion)))
    return out


def cohomology_class(cx, k, cochain, ring="Z") -> CohomologyClass:
    if not 0 <= k <= cx.dim:
        raise DomainError(f"degree {k} out of range 0..{cx.dim}")
    rep = as_int_matrix(cochain, (cx.rank(k),))
    if ring == "Z/2":
        rep = rep % 2
    grp = cohomology_group(cx, k, ring)
    return CohomologyClass(cx, k, ring, tuple(int(v) for v in rep), grp.coordinates(rep))


def reduce_mod2(c: CohomologyClass) -> CohomologyClass:
    if c.ring != "Z":
        raise DomainError("reduce_mod2 expects an integral class")
    if not 0 <= c.degree <= c.cx.dim:
        raise DomainError("degree out of range")
    return cohomology_class(c.cx, c.degree, [v % 2 for v in c.representative], "Z/2")


def bockstein(w: CohomologyClass, lift=None) -> CohomologyClass:
    """Connecting map ``H^k(Z/2) -> H^{k+1}(Z)``: lift, apply ``d``, halve.

    ``lift`` optionally supplies the integer cochain used as the lift; it
    must agree with the representative mod 2.
    """
    if w.ring != "Z/2":
        raise DomainError("bockstein expects a mod-2 class")
    cx, k = w.cx, w.degree
    if lift is None:
        lifted = as_int_matrix(w.representative, (cx.rank(k),))
    else:
        lifted = as_int_matrix(lift, (cx.rank(k),))
        if any((a - b) % 2 for a, b in zip(lifted, w.representative)):
            raise DomainError("lift does not reduce to the representative")
    if k + 1 > cx.dim:
        return _zero_top(cx, k + 1)
    dw = _matmul(cx.coboundary(k), lifted)
    assert all(v % 2 == 0 for v in dw), "coboundary of a mod-2 cocycle lift must be even"
    return cohomology_class(cx, k + 1, [v // 2 for v in dw], "Z")


def _zero_top(cx, k):
    # degree above the top cell: the group is zero
    return CohomologyClass(cx, k, "Z", (), ())


@dataclass(frozen=True)
class LiftDecision:
    """Outcome of the Spin_c lift test for a degree-2 mod-2 class.

    When ``lifts`` is true, ``witness`` is an integral class reducing to the
    input; the set of all lifts is ``witness + 2 H^2(Z)``, a torsor over
    the group with ``lift_group_free_rank`` copies of Z and cyclic factors
    ``lift_group_torsion``.  ``lift_classes_mod_2h2`` is the number of
    distinct lifts modulo ``2 H^2(Z)``.
    """

    lifts: bool
    witness: CohomologyClass = None
    obstruction: CohomologyClass = None
    lift_group_free_rank: int = 0
    lift_group_torsion: tuple = ()
    lift_classes_mod_2h2: int = 0


def spinc_lift(cx: ChainComplex, w2: CohomologyClass) -> LiftDecision:
    if w2.ring != "Z/2" or w2.degree != 2 or w2.cx is not cx:
        raise DomainError("w2 must be a degree-2 mod-2 class of this complex")
    obstruction = bockstein(w2)
    if not obstruction.is_zero():
        return LiftDecision(False, obstruction=obstruction)
    h2 = cohomology_group(cx, 2, "Z")
    h2_mod2 = cohomology_group(cx, 2, "Z/2")
    # reduce each generator; solve sum eps_i red(g_i) = w2 over GF(2)
    red = [reduce_mod2(h2.element([int(i == j) for j in range(h2.ngens)])) for i in range(h2.ngens)]
    A = np.array([r.coords for r in red], dtype=np.int64).T.reshape(h2_mod2.ngens, h2.ngens)
    eps = solve2(A, np.array(w2.coords, dtype=np.int64))
    assert eps is not None, "exactness violated: Bockstein vanished but no lift found"
    witness = h2.element([int(e) for e in eps])
    torsion = tuple(t // gcd(t, 2) for t in h2.torsion if t // gcd(t, 2) > 1)
    return LiftDecision(
        True,
        witness=witness,
        obstruction=obstruction,
        lift_group_free_rank=h2.free_rank,
        lift_group_torsion=torsion,
        lift_classes_mod_2h2=1,
    )


def group_elements(grp: CohomologyGroup, bound=2):
    """Enumerate coordinate tuples; free summands range over ``0..bound-1``."""
    ranges = [range(o) if o else range(bound) for o in grp.orders]
    return product(*ranges)


# ---------------------------------------------------------------------------
# catalog

CATALOG_DIR = Path(__file__).with_name("catalog")


def catalog_names() -> list:
    return sorted(p.stem for p in CATALOG_DIR.glob("*.json"))


def load_catalog(name) -> ChainComplex:
    return ChainComplex.from_file(CATALOG_DIR / f"{name}.json")
