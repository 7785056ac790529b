"""Exact linear algebra over tower fields.

Vectors and matrices hold TowerElement entries sharing one context (lifted
implicitly).  Subspaces carry a canonical reduced-echelon basis, which makes
equality decidable and gives deterministic tie-breaking downstream, plus a
lazily cached vector of Grassmann coordinates (lexicographic maximal minors).
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Iterable, List, Optional, Sequence

from .tower import (
    QQ,
    ContextMismatch,
    TowerContext,
    TowerElement,
    common_context,
    invert,
    parse_element,
    serialize_context,
    context_from_serialized,
)

__all__ = [
    "VectorA",
    "MatrixA",
    "Subspace",
    "kernel",
    "intersect",
    "grassmann",
    "constrained_kernel",
    "contains",
    "AmbientMismatch",
    "RankDeficient",
]

MAX_AMBIENT = 12


class AmbientMismatch(ValueError):
    pass


class RankDeficient(ValueError):
    pass


def _as_element(ctx: TowerContext, v) -> TowerElement:
    if isinstance(v, TowerElement):
        return v
    return ctx.from_rational(Fraction(v))


class VectorA:
    """Immutable exact vector over a tower context."""

    __slots__ = ("ctx", "entries")

    def __init__(self, entries: Sequence, ctx: Optional[TowerContext] = None):
        raw = [e for e in entries]
        elems = [e for e in raw if isinstance(e, TowerElement)]
        if ctx is None:
            ctx = common_context(elems) if elems else QQ
        else:
            ctx = common_context(elems + [ctx.one()])
        self.ctx = ctx
        self.entries = tuple(
            _as_element(ctx, e) + ctx.zero() for e in raw
        )  # adding zero unifies every entry into ctx

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other):
        if not isinstance(other, VectorA):
            return NotImplemented
        return len(self) == len(other) and all(
            a == b for a, b in zip(self.entries, other.entries)
        )

    def __hash__(self):
        return hash(tuple(self.entries))

    def __add__(self, other):
        if len(self) != len(other):
            raise AmbientMismatch("vector lengths differ")
        return VectorA([a + b for a, b in zip(self, other)])

    def __sub__(self, other):
        if len(self) != len(other):
            raise AmbientMismatch("vector lengths differ")
        return VectorA([a - b for a, b in zip(self, other)])

    def __neg__(self):
        return VectorA([-a for a in self])

    def scale(self, c) -> "VectorA":
        return VectorA([e * c for e in self], self.ctx)

    def dot(self, other: "VectorA") -> TowerElement:
        if len(self) != len(other):
            raise AmbientMismatch("vector lengths differ")
        acc = self.ctx.zero()
        for a, b in zip(self, other):
            acc = acc + a * b
        return acc

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self)

    def __str__(self):
        return "(" + ", ".join(str(e) for e in self) + ")"

    def __repr__(self):
        return f"VectorA{self}"

    def to_json(self):
        return [str(e) for e in self.entries]

    @classmethod
    def from_json(cls, ctx: TowerContext, data) -> "VectorA":
        return cls([parse_element(ctx, s) for s in data], ctx)


class MatrixA:
    """Immutable exact matrix (stored by rows)."""

    __slots__ = ("ctx", "rows", "nrows", "ncols")

    def __init__(self, rows: Sequence[Sequence], ctx: Optional[TowerContext] = None):
        vrows = [r if isinstance(r, VectorA) else VectorA(r, ctx) for r in rows]
        if not vrows:
            raise ValueError("matrix needs at least one row")
        ncols = len(vrows[0])
        if any(len(r) != ncols for r in vrows):
            raise ValueError("ragged rows")
        cctx = common_context([e for r in vrows for e in r])
        self.ctx = cctx
        self.rows = tuple(VectorA(r.entries, cctx) for r in vrows)
        self.nrows = len(vrows)
        self.ncols = ncols

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence], ctx=None) -> "MatrixA":
        cols = [c if isinstance(c, VectorA) else VectorA(c, ctx) for c in cols]
        n = len(cols[0])
        return cls([[c[i] for c in cols] for i in range(n)])

    @classmethod
    def identity(cls, n: int, ctx: Optional[TowerContext] = None) -> "MatrixA":
        ctx = ctx or QQ
        return cls(
            [[ctx.one() if i == j else ctx.zero() for j in range(n)] for i in range(n)]
        )

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def column(self, j: int) -> VectorA:
        return VectorA([r[j] for r in self.rows], self.ctx)

    def columns(self) -> List[VectorA]:
        return [self.column(j) for j in range(self.ncols)]

    def transpose(self) -> "MatrixA":
        return MatrixA([[self.rows[i][j] for i in range(self.nrows)] for j in range(self.ncols)])

    def matvec(self, x: VectorA) -> VectorA:
        if len(x) != self.ncols:
            raise AmbientMismatch("dimension mismatch in matvec")
        return VectorA([r.dot(x) for r in self.rows])

    def matmul(self, other: "MatrixA") -> "MatrixA":
        if self.ncols != other.nrows:
            raise AmbientMismatch("dimension mismatch in matmul")
        cols = [self.matvec(other.column(j)) for j in range(other.ncols)]
        return MatrixA.from_columns(cols)

    def __mul__(self, other):
        if isinstance(other, MatrixA):
            return self.matmul(other)
        if isinstance(other, VectorA):
            return self.matvec(other)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, MatrixA):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def is_symmetric(self) -> bool:
        return self.nrows == self.ncols and all(
            self.rows[i][j] == self.rows[j][i]
            for i in range(self.nrows)
            for j in range(i)
        )

    def det(self) -> TowerElement:
        if self.nrows != self.ncols:
            raise ValueError("determinant of a non-square matrix")
        rows = [list(r.entries) for r in self.rows]
        return _det_destructive(rows, self.ctx)

    def __str__(self):
        return "[" + "; ".join(str(r) for r in self.rows) + "]"

    __repr__ = __str__

    def to_json(self):
        return {
            "context": serialize_context(self.ctx),
            "rows": [r.to_json() for r in self.rows],
        }

    @classmethod
    def from_json(cls, data) -> "MatrixA":
        ctx = context_from_serialized(data["context"])
        return cls([VectorA.from_json(ctx, r) for r in data["rows"]])


def _det_destructive(rows, ctx) -> TowerElement:
    n = len(rows)
    det = ctx.one()
    for j in range(n):
        piv = next((i for i in range(j, n) if not rows[i][j].is_zero()), None)
        if piv is None:
            return ctx.zero()
        if piv != j:
            rows[j], rows[piv] = rows[piv], rows[j]
            det = -det
        p = rows[j][j]
        det = det * p
        pinv = invert(p)
        for i in range(j + 1, n):
            f = rows[i][j] * pinv
            if f.is_zero():
                continue
            for k in range(j, n):
                rows[i][k] = rows[i][k] - f * rows[j][k]
    return det


def _rref(rows: List[List[TowerElement]], ctx: TowerContext):
    """In-place reduced row echelon form; returns pivot column list."""
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if not rows[i][c].is_zero()), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pinv = invert(rows[r][c])
        rows[r] = [e * pinv for e in rows[r]]
        for i in range(nrows):
            if i == r or rows[i][c].is_zero():
                continue
            f = rows[i][c]
            rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return pivots


class Subspace:
    """A subspace of K^N with canonical reduced-echelon basis."""

    __slots__ = ("ambient", "dim", "basis", "pivots", "_grassmann")

    def __init__(self, ambient: int, basis: Sequence[VectorA], pivots: Sequence[int]):
        self.ambient = ambient
        self.basis = tuple(basis)
        self.pivots = tuple(pivots)
        self.dim = len(self.basis)
        self._grassmann = None

    @classmethod
    def from_spanning(cls, vectors: Iterable, ambient: Optional[int] = None) -> "Subspace":
        vecs = [v if isinstance(v, VectorA) else VectorA(v) for v in vectors]
        if not vecs:
            if ambient is None:
                raise ValueError("ambient dimension required for the zero subspace")
            return cls(ambient, [], [])
        n = len(vecs[0])
        if ambient is not None and ambient != n:
            raise AmbientMismatch("vector length does not match ambient dimension")
        if any(len(v) != n for v in vecs):
            raise AmbientMismatch("mixed vector lengths")
        ctx = common_context([e for v in vecs for e in v])
        rows = [list(VectorA(v.entries, ctx).entries) for v in vecs]
        pivots = _rref(rows, ctx)
        basis = [VectorA(rows[i], ctx) for i in range(len(pivots))]
        return cls(n, basis, pivots)

    @classmethod
    def zero(cls, ambient: int) -> "Subspace":
        return cls(ambient, [], [])

    @classmethod
    def full(cls, ambient: int, ctx: Optional[TowerContext] = None) -> "Subspace":
        return cls.from_spanning(MatrixA.identity(ambient, ctx).rows)

    @property
    def ctx(self) -> TowerContext:
        return common_context([e for v in self.basis for e in v]) if self.basis else QQ

    def basis_matrix(self) -> MatrixA:
        """Basis vectors as columns (N x L)."""
        if not self.basis:
            raise RankDeficient("zero subspace has an empty basis")
        return MatrixA.from_columns(self.basis)

    def __eq__(self, other):
        if not isinstance(other, Subspace):
            return NotImplemented
        return (
            self.ambient == other.ambient
            and self.pivots == other.pivots
            and list(self.basis) == list(other.basis)
        )

    def __hash__(self):
        return hash((self.ambient, self.pivots, self.basis))

    def __repr__(self):
        return f"Subspace(dim {self.dim} of K^{self.ambient})"

    def annihilator_matrix(self) -> Optional[MatrixA]:
        """Rows a with a.x = 0 for all x in the subspace (None if full)."""
        if self.dim == self.ambient:
            return None
        if self.dim == 0:
            return MatrixA.identity(self.ambient)
        B = MatrixA([v.entries for v in self.basis])  # dim x N
        ann = kernel(B)
        return MatrixA([v.entries for v in ann.basis])

    def grassmann_vector(self) -> VectorA:
        if self._grassmann is None:
            if self.dim == 0:
                self._grassmann = VectorA([QQ.one()])
            else:
                self._grassmann = grassmann(self.basis_matrix())
        return self._grassmann

    def join(self, other: "Subspace") -> "Subspace":
        if self.ambient != other.ambient:
            raise AmbientMismatch("ambient dimensions differ")
        return Subspace.from_spanning(
            list(self.basis) + list(other.basis), self.ambient
        )

    def to_json(self):
        ctx = self.ctx
        return {
            "ambient": self.ambient,
            "context": serialize_context(ctx),
            "basis": [v.to_json() for v in self.basis],
        }

    @classmethod
    def from_json(cls, data) -> "Subspace":
        ctx = context_from_serialized(data["context"])
        vecs = [VectorA.from_json(ctx, v) for v in data["basis"]]
        return cls.from_spanning(vecs, data["ambient"])


def kernel(A: MatrixA) -> Subspace:
    """Exact right null space {x : A x = 0}."""
    ctx = A.ctx
    rows = [list(r.entries) for r in A.rows]
    pivots = _rref(rows, ctx)
    pivset = set(pivots)
    n = A.ncols
    basis = []
    for free in range(n):
        if free in pivset:
            continue
        v = [ctx.zero()] * n
        v[free] = ctx.one()
        for r, c in enumerate(pivots):
            v[c] = -rows[r][free]
        basis.append(VectorA(v, ctx))
    return Subspace.from_spanning(basis, ambient=n)


def intersect(U: Subspace, V: Subspace) -> Subspace:
    if U.ambient != V.ambient:
        raise AmbientMismatch("ambient dimensions differ")
    au = U.annihilator_matrix()
    av = V.annihilator_matrix()
    if au is None:
        return V
    if av is None:
        return U
    stacked = MatrixA(list(au.rows) + list(av.rows))
    return kernel(stacked)


def grassmann(X: MatrixA) -> VectorA:
    """All maximal minors of the N x L basis matrix, lexicographic row
    subsets.  Raises RankDeficient when the columns are dependent."""
    n, l = X.nrows, X.ncols
    if l > n:
        raise RankDeficient("more columns than ambient dimension")
    ctx = X.ctx
    out = []
    any_nonzero = False
    for subset in combinations(range(n), l):
        rows = [[X.rows[i][j] for j in range(l)] for i in subset]
        d = _det_destructive(rows, ctx)
        if not d.is_zero():
            any_nonzero = True
        out.append(d)
    if not any_nonzero:
        raise RankDeficient("columns are linearly dependent")
    return VectorA(out, ctx)


def constrained_kernel(Z: Subspace, M: MatrixA) -> Subspace:
    """{y in Z : y^t M = 0}."""
    if Z.ambient != M.nrows:
        raise AmbientMismatch("ambient dimension does not match matrix rows")
    return intersect(Z, kernel(M.transpose()))


def contains(U: Subspace, x: VectorA) -> bool:
    if len(x) != U.ambient:
        raise AmbientMismatch("vector length does not match ambient dimension")
    if x.is_zero():
        return True
    if U.dim == 0:
        return False
    return Subspace.from_spanning(list(U.basis) + [x], U.ambient).dim == U.dim
