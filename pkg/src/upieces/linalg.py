"""Dense exact matrices and subspaces over a small finite field.

Representation
--------------
A length-n vector over F_q (q <= 16) is packed into a single integer,
4 bits per entry: entry j of vector v is ``(v >> 4*j) & 15``.  A matrix
is a tuple of packed rows.  Row addition is a single XOR in
characteristic 2 and a handful of byte-table lookups otherwise, which
is what makes the exhaustive group sweeps in this package feasible.

Matrices act on column vectors: ``(M @ x)_i = sum_j M[i][j] x[j]``.
Subspace bases are stored as packed row vectors in reduced row-echelon
form with no zero rows, so two equal subspaces are bit-identical and
hashable.  The packed path is cross-checked against a naive
FieldElement implementation in the test suite.
"""

from __future__ import annotations

from .errors import DimensionMismatch
from .ff import FieldElement, FieldSpec, field

# ---------------------------------------------------------------------------
# packed row primitives
# ---------------------------------------------------------------------------

_NIBBLE = 15


def pack_vec(entries):
    """Pack an iterable of integer encodings into a row integer."""
    out = 0
    shift = 0
    for e in entries:
        out |= (e & 15) << shift
        shift += 4
    return out


def unpack_vec(packed, n):
    """Unpack a row integer into a tuple of n integer encodings."""
    return tuple((packed >> (4 * j)) & 15 for j in range(n))


def vec_entry(packed, j):
    return (packed >> (4 * j)) & 15


def _leading_index(packed):
    """Index of the lowest nonzero nibble (packed != 0)."""
    return ((packed & -packed).bit_length() - 1) >> 2


class RowOps:
    """Per-field packed-row arithmetic (byte-table driven, width agnostic)."""

    __slots__ = ("field", "add", "scale", "scale_tables", "dot", "neg_scalar",
                 "inv_scalar", "add_scalar", "mul_scalar")

    def __init__(self, f: FieldSpec):
        self.field = f
        q = f.q
        mul_t = f.mul_table
        add_t = f.add_table
        self.neg_scalar = f.neg_table
        self.inv_scalar = f.inv_table
        self.add_scalar = add_t
        self.mul_scalar = mul_t

        # scale_tables[s] maps a byte (two packed entries) to the scaled byte
        tables = []
        for s in range(q):
            row = mul_t[s]
            tab = [0] * 256
            for b in range(256):
                lo = b & 15
                hi = b >> 4
                if lo < q and hi < q:
                    tab[b] = row[lo] | (row[hi] << 4)
            tables.append(tab)
        self.scale_tables = tables

        if f.p == 2:
            def add(a, b):
                return a ^ b
        else:
            ab = [0] * 65536
            for b1 in range(256):
                lo1 = b1 & 15
                hi1 = b1 >> 4
                if lo1 >= q or hi1 >= q:
                    continue
                base = b1 << 8
                arow_lo = add_t[lo1]
                arow_hi = add_t[hi1]
                for b2 in range(256):
                    lo2 = b2 & 15
                    hi2 = b2 >> 4
                    if lo2 < q and hi2 < q:
                        ab[base | b2] = arow_lo[lo2] | (arow_hi[hi2] << 4)

            def add(a, b):
                out = 0
                shift = 0
                while a or b:
                    out |= ab[((a & 255) << 8) | (b & 255)] << shift
                    a >>= 8
                    b >>= 8
                    shift += 8
                return out

        self.add = add

        scale_tables = self.scale_tables

        def scale(r, s):
            if s == 1 or r == 0:
                return r
            if s == 0:
                return 0
            tab = scale_tables[s]
            out = 0
            shift = 0
            while r:
                out |= tab[r & 255] << shift
                r >>= 8
                shift += 8
            return out

        self.scale = scale

        def dot(a, b):
            acc = 0
            while a and b:
                x = a & 15
                if x:
                    y = b & 15
                    if y:
                        acc = add_t[acc][mul_t[x][y]]
                a >>= 4
                b >>= 4
            return acc

        self.dot = dot


_OPS_CACHE = {}


def row_ops(f: FieldSpec) -> RowOps:
    ops = _OPS_CACHE.get(f.q)
    if ops is None:
        ops = RowOps(f)
        _OPS_CACHE[f.q] = ops
    return ops


def rref_rows(rows, ncols, ops):
    """Reduced row-echelon form of packed rows: (rows_without_zeros, pivots)."""
    work = [r for r in rows if r]
    if not work:
        return (), ()
    m = len(work)
    pivots = []
    r = 0
    if ops.field.q == 2:
        for col in range(ncols):
            bit = 1 << (4 * col)
            piv = -1
            for i in range(r, m):
                if work[i] & bit:
                    piv = i
                    break
            if piv < 0:
                continue
            work[r], work[piv] = work[piv], work[r]
            prow = work[r]
            for i in range(m):
                if i != r and work[i] & bit:
                    work[i] ^= prow
            pivots.append(col)
            r += 1
            if r == m:
                break
        return tuple(work[:r]), tuple(pivots)
    add = ops.add
    scale = ops.scale
    neg = ops.neg_scalar
    inv = ops.inv_scalar
    for col in range(ncols):
        sh = 4 * col
        piv = -1
        for i in range(r, m):
            if (work[i] >> sh) & 15:
                piv = i
                break
        if piv < 0:
            continue
        work[r], work[piv] = work[piv], work[r]
        prow = work[r]
        pv = (prow >> sh) & 15
        if pv != 1:
            prow = scale(prow, inv[pv])
            work[r] = prow
        for i in range(m):
            if i == r:
                continue
            c = (work[i] >> sh) & 15
            if c:
                work[i] = add(work[i], scale(prow, neg[c]))
        pivots.append(col)
        r += 1
        if r == m:
            break
    return tuple(work[:r]), tuple(pivots)


def rank_rows(rows, ncols, ops):
    return len(rref_rows(rows, ncols, ops)[0])


def kernel_rows(rows, ncols, ops):
    """RREF basis of {x : M x = 0} for M given by packed rows."""
    red, pivots = rref_rows(rows, ncols, ops)
    pivset = set(pivots)
    neg = ops.neg_scalar
    basis = []
    for f_col in range(ncols):
        if f_col in pivset:
            continue
        v = 1 << (4 * f_col)
        for i, p_col in enumerate(pivots):
            c = (red[i] >> (4 * f_col)) & 15
            if c:
                v |= neg[c] << (4 * p_col)
        basis.append(v)
    return rref_rows(basis, ncols, ops)[0]


def transpose_rows(rows, nrows, ncols):
    out = []
    for j in range(ncols):
        sh = 4 * j
        v = 0
        for i in range(nrows):
            v |= ((rows[i] >> sh) & 15) << (4 * i)
        out.append(v)
    return tuple(out)


def mat_mul_rows(a_rows, b_rows, ops):
    """Packed product: row i of result = sum_j a[i][j] * (row j of b)."""
    if ops.field.q == 2:
        # nibbles are 0/1: pure XOR accumulation, no per-entry calls
        out = []
        for ar in a_rows:
            acc = 0
            j = 0
            while ar:
                if ar & 1:
                    acc ^= b_rows[j]
                ar >>= 4
                j += 1
            out.append(acc)
        return tuple(out)
    add = ops.add
    scale = ops.scale
    out = []
    for ar in a_rows:
        acc = 0
        j = 0
        while ar:
            c = ar & 15
            if c:
                acc = add(acc, scale(b_rows[j], c))
            ar >>= 4
            j += 1
        out.append(acc)
    return tuple(out)


def mat_vec_rows(rows, v, ops):
    """M x for packed rows of M and packed column vector x."""
    dot = ops.dot
    return pack_vec(dot(r, v) for r in rows)


def reduce_row(v, basis, ops):
    """Reduce a packed vector against RREF basis rows; zero iff member."""
    add = ops.add
    scale = ops.scale
    neg = ops.neg_scalar
    for b in basis:
        if v == 0:
            return 0
        lead = _leading_index(b)
        c = (v >> (4 * lead)) & 15
        if c:
            v = add(v, scale(b, neg[c]))
    return v


def solve_rows(rows, ncols, b, ops):
    """One solution x of M x = b, or None if inconsistent (packed)."""
    aug = []
    for i, r in enumerate(rows):
        aug.append(r | (vec_entry(b, i) << (4 * ncols)))
    red, pivots = rref_rows(aug, ncols + 1, ops)
    x = 0
    for i, p in enumerate(pivots):
        if p == ncols:
            return None
        x |= vec_entry(red[i], ncols) << (4 * p)
    return x


# ---------------------------------------------------------------------------
# Matrix
# ---------------------------------------------------------------------------

class Matrix:
    """Immutable dense matrix over a FieldSpec, hashable, exact."""

    __slots__ = ("field", "nrows", "ncols", "rows")

    def __init__(self, f, nrows, ncols, rows):
        object.__setattr__(self, "field", f)
        object.__setattr__(self, "nrows", nrows)
        object.__setattr__(self, "ncols", ncols)
        object.__setattr__(self, "rows", tuple(rows))
        if len(self.rows) != nrows:
            raise DimensionMismatch("row count mismatch")

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_entries(cls, f, entries):
        rows = []
        width = None
        for row in entries:
            vals = [e.value if isinstance(e, FieldElement) else int(e) % f.q for e in row]
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise DimensionMismatch("ragged rows")
            rows.append(pack_vec(vals))
        return cls(f, len(rows), width or 0, rows)

    @classmethod
    def zero(cls, f, nrows, ncols=None):
        if ncols is None:
            ncols = nrows
        return cls(f, nrows, ncols, (0,) * nrows)

    @classmethod
    def identity(cls, f, n):
        return cls(f, n, n, tuple(1 << (4 * i) for i in range(n)))

    @classmethod
    def from_json(cls, obj):
        f = field(obj["q"])
        return cls.from_entries(f, obj["rows"])

    def to_json(self):
        return {"q": self.field.q, "rows": [list(unpack_vec(r, self.ncols)) for r in self.rows]}

    # -- access ---------------------------------------------------------------

    def entry(self, i, j):
        return (self.rows[i] >> (4 * j)) & 15

    def to_lists(self):
        return [list(unpack_vec(r, self.ncols)) for r in self.rows]

    def __eq__(self, other):
        return (isinstance(other, Matrix) and other.field.q == self.field.q
                and other.ncols == self.ncols and other.rows == self.rows)

    def __hash__(self):
        return hash((self.field.q, self.ncols, self.rows))

    def __repr__(self):
        return f"Matrix(q={self.field.q}, {self.nrows}x{self.ncols}, {self.to_lists()})"

    # -- arithmetic -----------------------------------------------------------

    def _check_same_shape(self, other):
        if (not isinstance(other, Matrix) or other.field.q != self.field.q
                or other.nrows != self.nrows or other.ncols != self.ncols):
            raise DimensionMismatch("shape or field mismatch")

    def __add__(self, other):
        self._check_same_shape(other)
        ops = row_ops(self.field)
        return Matrix(self.field, self.nrows, self.ncols,
                      tuple(ops.add(a, b) for a, b in zip(self.rows, other.rows)))

    def __sub__(self, other):
        self._check_same_shape(other)
        ops = row_ops(self.field)
        pm1 = ops.neg_scalar[1] if self.field.q > 1 else 0
        return Matrix(self.field, self.nrows, self.ncols,
                      tuple(ops.add(a, ops.scale(b, pm1)) for a, b in zip(self.rows, other.rows)))

    def __neg__(self):
        ops = row_ops(self.field)
        pm1 = ops.neg_scalar[1]
        return Matrix(self.field, self.nrows, self.ncols,
                      tuple(ops.scale(r, pm1) for r in self.rows))

    def __mul__(self, other):
        if isinstance(other, Matrix):
            if other.field.q != self.field.q or self.ncols != other.nrows:
                raise DimensionMismatch("matmul shape or field mismatch")
            ops = row_ops(self.field)
            return Matrix(self.field, self.nrows, other.ncols,
                          mat_mul_rows(self.rows, other.rows, ops))
        return NotImplemented

    def scalar_mul(self, c):
        c = c.value if isinstance(c, FieldElement) else int(c) % self.field.q
        ops = row_ops(self.field)
        return Matrix(self.field, self.nrows, self.ncols,
                      tuple(ops.scale(r, c) for r in self.rows))

    def __pow__(self, n):
        if self.nrows != self.ncols:
            raise DimensionMismatch("power of a non-square matrix")
        result = Matrix.identity(self.field, self.nrows)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def apply(self, v):
        """M x for a packed column vector x."""
        return mat_vec_rows(self.rows, v, row_ops(self.field))

    def transpose(self):
        return Matrix(self.field, self.ncols, self.nrows,
                      transpose_rows(self.rows, self.nrows, self.ncols))

    def rank(self):
        return rank_rows(self.rows, self.ncols, row_ops(self.field))

    def is_zero(self):
        return all(r == 0 for r in self.rows)

    def inverse(self):
        """Inverse of a square matrix; None if singular."""
        if self.nrows != self.ncols:
            raise DimensionMismatch("inverse of a non-square matrix")
        n = self.nrows
        ops = row_ops(self.field)
        aug = [self.rows[i] | (1 << (4 * (n + i))) for i in range(n)]
        red, pivots = rref_rows(aug, 2 * n, ops)
        if len(red) != n or any(p != i for i, p in enumerate(pivots[:n])):
            return None
        mask = (1 << (4 * n)) - 1
        return Matrix(self.field, n, n, tuple((r >> (4 * n)) & mask for r in red))


# ---------------------------------------------------------------------------
# Subspace
# ---------------------------------------------------------------------------

class Subspace:
    """A subspace of F_q^n in canonical reduced row-echelon form."""

    __slots__ = ("field", "ambient_dim", "basis")

    def __init__(self, f, ambient_dim, basis):
        object.__setattr__(self, "field", f)
        object.__setattr__(self, "ambient_dim", ambient_dim)
        object.__setattr__(self, "basis", tuple(basis))

    def __setattr__(self, name, value):
        raise AttributeError("Subspace is immutable")

    @classmethod
    def from_vectors(cls, f, ambient_dim, packed_vectors):
        basis, _ = rref_rows(packed_vectors, ambient_dim, row_ops(f))
        return cls(f, ambient_dim, basis)

    @classmethod
    def from_entry_rows(cls, f, ambient_dim, rows):
        return cls.from_vectors(f, ambient_dim, [pack_vec(r) for r in rows])

    @classmethod
    def zero(cls, f, ambient_dim):
        return cls(f, ambient_dim, ())

    @classmethod
    def full(cls, f, ambient_dim):
        return cls(f, ambient_dim, tuple(1 << (4 * i) for i in range(ambient_dim)))

    def dim(self):
        return len(self.basis)

    def contains_vector(self, v):
        return reduce_row(v, self.basis, row_ops(self.field)) == 0

    def __eq__(self, other):
        return (isinstance(other, Subspace) and other.field.q == self.field.q
                and other.ambient_dim == self.ambient_dim and other.basis == self.basis)

    def __hash__(self):
        return hash((self.field.q, self.ambient_dim, self.basis))

    def __repr__(self):
        rows = [list(unpack_vec(r, self.ambient_dim)) for r in self.basis]
        return f"Subspace(q={self.field.q}, n={self.ambient_dim}, basis={rows})"

    def basis_lists(self):
        return [list(unpack_vec(r, self.ambient_dim)) for r in self.basis]

    def vectors(self):
        """Iterate over every vector of the subspace (packed)."""
        f = self.field
        ops = row_ops(f)
        combos = [0]
        for b in self.basis:
            combos = [ops.add(c, ops.scale(b, s)) for c in combos for s in range(f.q)]
        return combos


def _check_compat(a: Subspace, b: Subspace):
    if a.field.q != b.field.q or a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch("subspaces in different ambient spaces")


def kernel(m: Matrix) -> Subspace:
    """{x : M x = 0} in canonical form."""
    return Subspace(m.field, m.ncols,
                    kernel_rows(m.rows, m.ncols, row_ops(m.field)))


def image(m: Matrix) -> Subspace:
    """Column space of M (as a subspace of the target F_q^nrows)."""
    t = transpose_rows(m.rows, m.nrows, m.ncols)
    return Subspace.from_vectors(m.field, m.nrows, t)


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    _check_compat(a, b)
    return Subspace.from_vectors(a.field, a.ambient_dim, a.basis + b.basis)


def subspace_meet(a: Subspace, b: Subspace) -> Subspace:
    """Intersection, via the Zassenhaus double-block elimination."""
    _check_compat(a, b)
    n = a.ambient_dim
    ops = row_ops(a.field)
    shift = 4 * n
    stacked = [r | (r << shift) for r in a.basis] + list(b.basis)
    red, _ = rref_rows(stacked, 2 * n, ops)
    lo_mask = (1 << shift) - 1
    inter = [r >> shift for r in red if (r & lo_mask) == 0]
    return Subspace.from_vectors(a.field, n, inter)


def contains(a: Subspace, b: Subspace) -> bool:
    """True iff b is a subspace of a."""
    _check_compat(a, b)
    ops = row_ops(a.field)
    return all(reduce_row(v, a.basis, ops) == 0 for v in b.basis)


def perp(w: Subspace, gram: Matrix) -> Subspace:
    """{x : <x, w> = 0 for all w in W} with <x,y> = x^T G y."""
    if gram.nrows != gram.ncols or gram.nrows != w.ambient_dim or gram.field.q != w.field.q:
        raise DimensionMismatch("gram does not match the ambient space")
    ops = row_ops(w.field)
    constraint = [mat_vec_rows(gram.rows, v, ops) for v in w.basis]
    return Subspace(w.field, w.ambient_dim,
                    kernel_rows(constraint, w.ambient_dim, ops))


def constraint_rows(w: Subspace):
    """Packed rows C with {x : C x = 0} = W (for preimage computations)."""
    return kernel_rows(w.basis, w.ambient_dim, row_ops(w.field))


def preimage(m: Matrix, w: Subspace) -> Subspace:
    """{x : M x in W}."""
    if m.nrows != w.ambient_dim or m.field.q != w.field.q:
        raise DimensionMismatch("matrix target does not match subspace ambient")
    ops = row_ops(m.field)
    cw = constraint_rows(w)
    cm = mat_mul_rows(cw, m.rows, ops)
    return Subspace(m.field, m.ncols, kernel_rows(cm, m.ncols, ops))


# ---------------------------------------------------------------------------
# randomness helpers (seeded by callers; used by tests and spot checks)
# ---------------------------------------------------------------------------

def random_matrix(f, nrows, ncols, rng):
    return Matrix(f, nrows, ncols,
                  tuple(pack_vec(rng.randrange(f.q) for _ in range(ncols))
                        for _ in range(nrows)))


def random_invertible(f, n, rng):
    while True:
        m = random_matrix(f, n, n, rng)
        if m.rank() == n:
            return m
