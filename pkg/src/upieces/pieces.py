"""Piece labels, canonical representatives, and exhaustive group sweeps.

A unipotent element u of GL or Sp is classified by the Jordan partition
of u - 1 together with, inside the symplectic group in characteristic
2, the set J of odd depths at which the symmetric form on the primitive
piece is not alternating.  The pair (partition, J) is the piece label;
labels with J empty are the whole story for GL and in odd
characteristic.

Enumeration works at desk scale: the unipotent set of the group is the
closure of the unipotent radical of the standard Borel under
conjugation by a fixed generating set (every unipotent lies in a
conjugate of the Borel), cross-checked against the count q^(2 * number
of positive roots).  Conjugacy orbits are breadth-first closures of
single elements under the same generators.

The representative constructor builds, for each admissible label, a
graded model with block shifts and prescribed primitive pairings, then
extends the degree-2 shift to a form-compatible nilpotent degree by
degree; in characteristic 2 a square-root correction aligns the
quadratic invariant at the critical even depth with a prescribed form.
"""

from __future__ import annotations

import itertools

from .char2 import SplittingInvariant, odd_set_I, splitting_invariant
from .errors import (
    InadmissibleLabel, IncompatibleQ, NotSpMember, NotUnipotent, ScaleExceeded,
)
from .ff import field as make_field
from .filtration import (
    Partition, dk_filtration, jordan_type, matrix_powers, partitions_of,
)
from .linalg import (
    Matrix, Subspace, kernel_rows, mat_mul_rows, mat_vec_rows, pack_vec,
    row_ops, rref_rows, subspace_meet, transpose_rows, vec_entry,
)
from .symplectic import SymplecticSpace, is_m_member, standard_symplectic

# ---------------------------------------------------------------------------
# group specifications and labels
# ---------------------------------------------------------------------------

_DESK_SCALE_NOTE = "GL: dim <= 4, q <= 5; Sp: dim <= 4 with q <= 5, or dim <= 6 with q = 2"


class GroupSpec:
    """A desk-scale classical group: family 'gl' or 'sp', dimension, q."""

    __slots__ = ("family", "dim", "q")

    def __init__(self, family, dim, q):
        family = family.lower()
        if family not in ("gl", "sp"):
            raise ValueError("family must be 'gl' or 'sp'")
        make_field(q)
        if family == "sp":
            if dim % 2 != 0:
                raise ValueError("sp needs even dimension")
            if not (dim <= 4 and q <= 5) and not (dim <= 6 and q == 2):
                raise ScaleExceeded(_DESK_SCALE_NOTE)
        else:
            if not (1 <= dim <= 4 and q <= 5):
                raise ScaleExceeded(_DESK_SCALE_NOTE)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "q", q)

    def __setattr__(self, name, value):
        raise AttributeError("GroupSpec is immutable")

    @property
    def field(self):
        return make_field(self.q)

    def positive_roots(self):
        n = self.dim
        return n * (n - 1) // 2 if self.family == "gl" else (n // 2) ** 2

    def unipotent_count(self):
        return self.q ** (2 * self.positive_roots())

    def group_order(self):
        q, n = self.q, self.dim
        if self.family == "gl":
            order = 1
            for i in range(n):
                order *= q ** n - q ** i
            return order
        m = n // 2
        order = q ** (m * m)
        for i in range(1, m + 1):
            order *= q ** (2 * i) - 1
        return order

    def space(self):
        return standard_symplectic(self.dim, self.q) if self.family == "sp" else None

    def __eq__(self, other):
        return (isinstance(other, GroupSpec) and other.family == self.family
                and other.dim == self.dim and other.q == self.q)

    def __hash__(self):
        return hash((self.family, self.dim, self.q))

    def __repr__(self):
        return f"GroupSpec({self.family}, dim={self.dim}, q={self.q})"


class PieceLabel:
    """(partition, J): the piece and the class data inside it."""

    __slots__ = ("lam", "J")

    def __init__(self, lam, J=()):
        if not isinstance(lam, Partition):
            lam = Partition(lam)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "J", tuple(sorted(set(int(j) for j in J))))
        if any(j % 2 == 0 or j < 1 for j in self.J):
            raise ValueError("J holds odd positive depths")

    def __setattr__(self, name, value):
        raise AttributeError("PieceLabel is immutable")

    def sort_key(self):
        return (self.lam.parts, self.J)

    def __eq__(self, other):
        return (isinstance(other, PieceLabel) and other.lam == self.lam
                and other.J == self.J)

    def __hash__(self):
        return hash((self.lam, self.J))

    def __repr__(self):
        return f"PieceLabel(lam={self.lam.parts}, J={self.J})"

    def to_json(self):
        return {"lambda": list(self.lam.parts), "J": list(self.J)}

    @classmethod
    def from_json(cls, obj):
        return cls(Partition(obj["lambda"]), tuple(obj.get("J", ())))


def sp_admissible_partition(lam: Partition) -> bool:
    """Odd parts occur with even multiplicity."""
    return all(lam.multiplicity(p) % 2 == 0
               for p in set(lam.parts) if p % 2 == 1)


def admissible_labels(spec: GroupSpec):
    """All piece labels of the group, sorted lexicographically."""
    out = []
    for lam in partitions_of(spec.dim):
        if spec.family == "gl":
            out.append(PieceLabel(lam))
            continue
        if not sp_admissible_partition(lam):
            continue
        if spec.field.p != 2:
            out.append(PieceLabel(lam))
            continue
        i_set = odd_set_I(lam)
        for r in range(len(i_set) + 1):
            for j_sub in itertools.combinations(i_set, r):
                out.append(PieceLabel(lam, j_sub))
    out.sort(key=PieceLabel.sort_key)
    return out


def gl_label(u: Matrix) -> PieceLabel:
    """Label of a unipotent GL element: the Jordan partition of u - 1."""
    n = u - Matrix.identity(u.field, u.nrows)
    if not (n ** u.nrows).is_zero():
        raise NotUnipotent("matrix is not unipotent")
    return PieceLabel(jordan_type(n))


def sp_label(u: Matrix, s: SymplecticSpace) -> PieceLabel:
    """Label of a unipotent symplectic element: (partition, J)."""
    if not s.in_group(u):
        raise NotSpMember("matrix does not preserve the form")
    n = u - Matrix.identity(u.field, u.nrows)
    if not (n ** u.nrows).is_zero():
        raise NotUnipotent("matrix is not unipotent")
    inv = splitting_invariant(n, s)
    lam = jordan_type(n)
    if not sp_admissible_partition(lam):
        raise AssertionError("symplectic member with odd-multiplicity odd part")
    return PieceLabel(lam, inv.J)


# ---------------------------------------------------------------------------
# generators and packed group machinery
# ---------------------------------------------------------------------------

def _identity_rows(d):
    return tuple(1 << (4 * i) for i in range(d))


def _pack_key(rows, d):
    key = 0
    shift = 0
    for r in rows:
        key |= r << shift
        shift += 4 * d
    return key


def _unpack_key(key, d):
    mask = (1 << (4 * d)) - 1
    return tuple((key >> (4 * d * i)) & mask for i in range(d))


def transvection(s: SymplecticSpace, v, lam):
    """x -> x + lam <x, v> v as a matrix (always preserves the form)."""
    f = s.field
    d = s.dim
    ops = row_ops(f)
    gv = s.gram.apply(v)
    rows = []
    for i in range(d):
        coeff = f.mul(lam, vec_entry(v, i))
        row = (1 << (4 * i))
        if coeff:
            row = ops.add(row, ops.scale(gv, coeff))
        rows.append(row)
    m = Matrix(f, d, d, rows)
    if not s.in_group(m):
        raise AssertionError("transvection construction broke the form")
    return m


def field_basis(f):
    """An F_p-basis 1, t, t^2, ... of the field, as raw encodings."""
    if f.k == 1:
        return [1]
    t = f.p  # encoding of the residue class t (digits little-endian)
    return [f.pow(t, j) for j in range(f.k)]


def _multiplicative_generator(f):
    for a in range(2, f.q):
        x = a
        order = 1
        while x != 1:
            x = f.mul(x, a)
            order += 1
        if order == f.q - 1:
            return a
    return 1


def group_generators(spec: GroupSpec):
    """Generating matrices: elementary/transvection set plus GL torus."""
    f = spec.field
    d = spec.dim
    gens = []
    if spec.family == "gl":
        for lam in field_basis(f):
            for i in range(d - 1):
                for (a, b) in ((i, i + 1), (i + 1, i)):
                    rows = list(_identity_rows(d))
                    rows[a] |= lam << (4 * b)
                    gens.append(Matrix(f, d, d, rows))
        g0 = _multiplicative_generator(f)
        if g0 != 1:
            rows = list(_identity_rows(d))
            rows[0] = g0
            gens.append(Matrix(f, d, d, rows))
    else:
        s = standard_symplectic(d, spec.q)
        vecs = [1 << (4 * i) for i in range(d)]
        vecs += [(1 << (4 * i)) | (1 << (4 * j))
                 for i in range(d) for j in range(i + 1, d)]
        for lam in field_basis(f):
            for v in vecs:
                gens.append(transvection(s, v, lam))
    return gens


def bfs_group(spec: GroupSpec, limit=2_000_000):
    """All group elements by closure of the generators (packed keys)."""
    d = spec.dim
    ops = row_ops(spec.field)
    gens = [g.rows for g in group_generators(spec)]
    start = _identity_rows(d)
    seen = {_pack_key(start, d)}
    queue = [start]
    while queue:
        nxt = []
        for rows in queue:
            for g in gens:
                prod = mat_mul_rows(g, rows, ops)
                key = _pack_key(prod, d)
                if key not in seen:
                    seen.add(key)
                    nxt.append(prod)
                    if len(seen) > limit:
                        raise ScaleExceeded("group closure exceeded limit")
        queue = nxt
    return seen


# ---------------------------------------------------------------------------
# unipotent enumeration
# ---------------------------------------------------------------------------

def borel_unipotents(spec: GroupSpec):
    """Unipotent radical of the standard Borel, as packed row tuples."""
    f = spec.field
    d = spec.dim
    q = spec.q
    above = [(i, j) for i in range(d) for j in range(i + 1, d)]
    out = []
    if spec.family == "sp":
        s = standard_symplectic(d, q)
        gram = s.gram
    for codes in itertools.product(range(q), repeat=len(above)):
        rows = list(_identity_rows(d))
        for (i, j), c in zip(above, codes):
            if c:
                rows[i] |= c << (4 * j)
        if spec.family == "sp":
            m = Matrix(f, d, d, rows)
            if not s.in_group(m):
                continue
        out.append(tuple(rows))
    return out


_UNIPOTENT_CACHE = {}


def unipotent_keys(spec: GroupSpec):
    """Every unipotent element of the group, as packed row tuples.

    Conjugation closure of the Borel unipotents under the generator set;
    completeness is certified by the count q^(2 * positive roots).
    """
    cached = _UNIPOTENT_CACHE.get(spec)
    if cached is not None:
        return cached
    d = spec.dim
    ops = row_ops(spec.field)
    pairs = []
    for g in group_generators(spec):
        gi = g.inverse()
        pairs.append((g.rows, gi.rows))
    seen = {}
    queue = []
    for rows in borel_unipotents(spec):
        key = _pack_key(rows, d)
        if key not in seen:
            seen[key] = rows
            queue.append(rows)
    while queue:
        nxt = []
        for rows in queue:
            for g, gi in pairs:
                prod = mat_mul_rows(g, mat_mul_rows(rows, gi, ops), ops)
                key = _pack_key(prod, d)
                if key not in seen:
                    seen[key] = prod
                    nxt.append(prod)
        queue = nxt
    expected = spec.unipotent_count()
    if len(seen) != expected:
        raise AssertionError(
            f"unipotent closure found {len(seen)}, expected {expected}")
    result = list(seen.values())
    _UNIPOTENT_CACHE[spec] = result
    return result


def enumerate_unipotents(spec: GroupSpec):
    """Stream of unipotent group elements as Matrix objects."""
    f = spec.field
    d = spec.dim
    for rows in unipotent_keys(spec):
        yield Matrix(f, d, d, rows)


def conjugacy_orbits(elements, spec: GroupSpec):
    """Partition a conjugation-closed iterable of matrices into orbits.

    Orbits are breadth-first closures under conjugation by the group
    generators; returns a list of lists of Matrix, each sorted by packed
    key, largest orbits last.
    """
    f = spec.field
    d = spec.dim
    ops = row_ops(f)
    pool = {}
    for m in elements:
        rows = m.rows if isinstance(m, Matrix) else tuple(m)
        pool[_pack_key(rows, d)] = rows
    pairs = []
    for g in group_generators(spec):
        pairs.append((g.rows, g.inverse().rows))
    orbits = []
    remaining = set(pool)
    order = spec.group_order()
    for key in sorted(pool):
        if key not in remaining:
            continue
        orbit = {key}
        queue = [pool[key]]
        remaining.discard(key)
        while queue:
            rows = queue.pop()
            for g, gi in pairs:
                prod = mat_mul_rows(g, mat_mul_rows(rows, gi, ops), ops)
                k2 = _pack_key(prod, d)
                if k2 not in orbit:
                    if k2 not in pool:
                        raise ValueError("input not closed under conjugation")
                    orbit.add(k2)
                    queue.append(prod)
                    remaining.discard(k2)
        if order % len(orbit) != 0:
            raise AssertionError("orbit size does not divide the group order")
        orbits.append(sorted(orbit))
    orbits.sort(key=lambda o: (len(o), o[0]))
    return [[Matrix(f, d, d, _unpack_key(k, d)) for k in orbit]
            for orbit in orbits]


# ---------------------------------------------------------------------------
# fast per-element labeling (packed)
# ---------------------------------------------------------------------------

class _Labeler:
    """Shared tables for labeling a stream of unipotents of one group."""

    def __init__(self, spec: GroupSpec):
        self.spec = spec
        self.field = spec.field
        self.ops = row_ops(self.field)
        self.d = spec.dim
        self.char2 = self.field.p == 2
        self.gram_rows = (standard_symplectic(spec.dim, spec.q).gram.rows
                          if spec.family == "sp" else None)
        neg1 = self.field.neg_table[1]
        self.minus_one_diag = tuple(neg1 << (4 * i) for i in range(self.d))
        self.i_cache = {}

    def nilpotent_rows(self, u_rows):
        add = self.ops.add
        return tuple(add(r, m) for r, m in zip(u_rows, self.minus_one_diag))

    def label_key(self, u_rows):
        """(partition parts, J) for a packed unipotent."""
        d = self.d
        ops = self.ops
        n_rows = self.nilpotent_rows(u_rows)
        powers = [_identity_rows(d)]
        ranks = [d]
        while ranks[-1] > 0:
            powers.append(mat_mul_rows(powers[-1], n_rows, ops))
            ranks.append(len(rref_rows(powers[-1], d, ops)[0]))
        e = len(ranks) - 1  # smallest e with N^e = 0
        ranks += [0, 0]
        parts = []
        for j in range(1, e + 1):
            mult = ranks[j - 1] - 2 * ranks[j] + ranks[j + 1]
            parts.extend([j] * mult)
        parts = tuple(sorted(parts, reverse=True))
        key = parts
        i_set = self.i_cache.get(parts)
        if i_set is None:
            i_set = odd_set_I(Partition(parts)) if (
                self.spec.family == "sp" and self.char2) else ()
            self.i_cache[parts] = i_set
        if not i_set:
            return (parts, ())
        j_set = self._j_set(n_rows, powers, e, parts, i_set)
        return (parts, j_set)

    def _j_set(self, n_rows, powers, e, parts, i_set):
        d = self.d
        ops = self.ops
        f = self.field
        while len(powers) < max(i_set) + 2:
            powers.append(mat_mul_rows(powers[-1], n_rows, ops))
        kernels = {m: kernel_rows(powers[m], d, ops) for m in range(1, e)}

        def step(a):
            # V_{>=a} by the kernel-sum formula (packed rows, canonical)
            if a >= e:
                return ()
            if a <= -e:
                return _identity_rows(d)
            acc = []
            j = max(0, a)
            while True:
                m = 2 * j - a + 1
                if m >= e:
                    acc.extend(transpose_rows(powers[j], d, d))
                    break
                if m >= 1:
                    for v in kernels[m]:
                        acc.append(mat_vec_rows(powers[j], v, ops))
                j += 1
            return rref_rows(acc, d, ops)[0]

        gram_rows = self.gram_rows
        j_out = []
        for m in i_set:
            lo = step(-m)
            hi = step(m + 3)
            # K = {x in V_{>=-m} : N^(m+1) x in V_{>=m+3}}
            con = kernel_rows(hi, d, ops) if hi else _identity_rows(d)
            cm = mat_mul_rows(con, powers[m + 1], ops)
            pre = kernel_rows(cm, d, ops)
            shift = 4 * d
            stacked = [r | (r << shift) for r in lo] + list(pre)
            red, _ = rref_rows(stacked, 2 * d, ops)
            lo_mask = (1 << shift) - 1
            kn = [r >> shift for r in red if (r & lo_mask) == 0]
            dot = ops.dot
            for x in kn:
                if dot(x, mat_vec_rows(gram_rows,
                                       mat_vec_rows(powers[m], x, ops), ops)):
                    j_out.append(m)
                    break
        return tuple(j_out)


def label_counts(spec: GroupSpec):
    """dict label-key -> number of unipotents carrying it."""
    labeler = _Labeler(spec)
    counts = {}
    for rows in unipotent_keys(spec):
        key = labeler.label_key(rows)
        counts[key] = counts.get(key, 0) + 1
    return counts


def _label_from_key(key):
    return PieceLabel(Partition(key[0]), key[1])


# ---------------------------------------------------------------------------
# graded block models and the representative constructor
# ---------------------------------------------------------------------------

class BlockModel:
    """Graded shift model for a label: basis (part m, degree i, copy t).

    Blocks are ordered by decreasing part size, degrees ascending inside
    a block, copies ascending inside a degree.  nu shifts degree by 2
    inside each block; the ambient form pairs degree i against -i within
    a block through a prescribed symmetric form with a sign twist, so
    the grading is form-orthogonal and nu is skew-adjoint.
    """

    def __init__(self, label: PieceLabel, q: int):
        f = make_field(q)
        self.field = f
        self.label = label
        lam = label.lam
        self.dim = lam.total()
        sizes = sorted(set(lam.parts), reverse=True)
        index = {}
        degrees = []
        pos = 0
        for m in sizes:
            dm = lam.multiplicity(m)
            for i in range(1 - m, m, 2):
                for t in range(dm):
                    index[(m, i, t)] = pos
                    degrees.append(i)
                    pos += 1
        self.index = index
        self.degrees = tuple(degrees)
        self.sizes = sizes

        d = self.dim
        # nu: (m, i, t) -> (m, i+2, t)
        nu_rows = [0] * d
        for (m, i, t), col in index.items():
            if i + 2 <= m - 1:
                nu_rows[index[(m, i + 2, t)]] |= 1 << (4 * col)
        self.nu = Matrix(f, d, d, nu_rows)

        # primitive pairings b^m and the ambient graded form
        self.bforms = {}
        for m in sizes:
            dm = lam.multiplicity(m)
            n_depth = m - 1
            rows = [[0] * dm for _ in range(dm)]
            if m % 2 == 1:
                # even depth: alternating, hyperbolic pairs (dm even)
                for t in range(dm // 2):
                    rows[t][dm - 1 - t] = 1
                    rows[dm - 1 - t][t] = f.neg(1)
            else:
                if n_depth in label.J or dm % 2 == 1:
                    for t in range(dm):
                        rows[t][t] = 1
                else:
                    for t in range(dm // 2):
                        rows[t][dm - 1 - t] = 1
                        rows[dm - 1 - t][t] = 1
            self.bforms[m] = Matrix.from_entries(f, rows)

        gram_rows = [0] * d
        for (m, i, t), col in index.items():
            b = self.bforms[m]
            sign_pow = (i - (i % 2)) // 2
            for t2 in range(lam.multiplicity(m)):
                val = b.entry(t, t2)
                if val:
                    if sign_pow % 2 == 1:
                        val = f.neg(val)
                    row = index[(m, i, t)]
                    colj = index[(m, -i, t2)]
                    gram_rows[row] |= val << (4 * colj)
        self.gram = Matrix(f, d, d, gram_rows)
        self.space = SymplecticSpace(self.gram)

        self.piece_cols = {}
        for (m, i, t), col in index.items():
            self.piece_cols.setdefault(i, []).append(col)
        for cols in self.piece_cols.values():
            cols.sort()
        self.max_degree = max(degrees) if degrees else 0

    def piece_basis(self, a):
        return [1 << (4 * c) for c in self.piece_cols.get(a, ())]

    def critical_depth(self):
        """Smallest even depth with every deeper odd-depth form alternating."""
        worst = 0
        for m in self.sizes:
            if m % 2 == 0:
                b = self.bforms[m]
                if any(b.entry(t, t) != 0 for t in range(b.nrows)):
                    worst = max(worst, m - 1)
        return worst + 3 if worst else 2

    def default_q_values(self):
        """Zero values on the basis of the critical graded piece."""
        return tuple(0 for _ in self.piece_cols.get(-self.critical_depth(), ()))

    def polar_matrix(self, depth):
        """Gram of (x, y) -> <x, nu^depth y> on the degree -depth piece."""
        f = self.field
        ops = row_ops(f)
        basis = self.piece_basis(-depth)
        k = len(basis)
        powers = matrix_powers(self.nu, depth)
        rows = []
        for x in basis:
            row = 0
            for j, y in enumerate(basis):
                val = ops.dot(x, self.gram.apply(
                    mat_vec_rows(powers[depth], y, ops)))
                row |= val << (4 * j)
            rows.append(row)
        return Matrix(f, k, k, rows)


def _pairing_solver(model, a):
    """Matrix inverse data to solve <z, y> = phi(y) for z in V_a.

    Returns (basis of V_a, basis of V_{-a}, inverse of the pairing
    matrix P[r][c] = <z_r, y_c>).
    """
    f = model.field
    ops = row_ops(f)
    za = model.piece_basis(a)
    ya = model.piece_basis(-a)
    k = len(za)
    rows = []
    for z in za:
        row = 0
        for j, y in enumerate(ya):
            row |= ops.dot(z, model.gram.apply(y)) << (4 * j)
        rows.append(row)
    p = Matrix(f, k, k, rows)
    pinv = p.inverse()
    if pinv is None:
        raise AssertionError("graded pairing block is degenerate")
    return za, ya, pinv


def _strict_upper(mat: Matrix):
    f = mat.field
    k = mat.nrows
    rows = []
    for i in range(k):
        row = 0
        for j in range(i + 1, k):
            row |= mat.entry(i, j) << (4 * j)
        rows.append(row)
    return Matrix(f, k, k, rows)


def construct_model_nilpotent(label: PieceLabel, q: int, q_values=None):
    """Extend the block shift of the model to a form-compatible nilpotent.

    Returns (N, model).  N = sum of homogeneous parts of degrees 2, 4,
    ...; each step solves the pairing identity
    <N_{2j} x, y> + <x, N_{2j} y> + sum <N_{2j'} x, N_{2j''} y> = 0
    degree block by degree block, with the symmetrization ambiguity on
    the middle block resolved by the strictly-upper-triangular choice.
    In characteristic 2 the quadratic form at the critical even depth is
    matched to the prescribed values by a square-root correction.
    """
    model = BlockModel(label, q)
    f = model.field
    ops = row_ops(f)
    d = model.dim
    char2 = f.p == 2
    nn = model.critical_depth() if char2 else None
    if char2:
        crit_basis = model.piece_basis(-nn)
        if q_values is None:
            q_values = model.default_q_values()
        q_values = tuple(q_values)
        if len(q_values) != len(crit_basis):
            raise IncompatibleQ("value count does not match the critical piece")

    parts = {1: model.nu}          # parts[j] holds N_{2j}
    e = max(model.label.lam.parts, default=1)

    def pair(x, y):
        return ops.dot(x, model.gram.apply(y))

    for j in range(2, e):
        njx = {}                   # col index -> image of basis vector
        # higher blocks: a > -j determined by duality against V_{-a-2j}
        for a in sorted(model.piece_cols):
            if a <= -j or not model.piece_cols.get(a):
                continue
            target = a + 2 * j
            ya = model.piece_basis(-target)
            if not ya:
                for col in model.piece_cols[a]:
                    njx[col] = 0
                continue
            za, _, pinv = _pairing_solver(model, target)
            for col in model.piece_cols[a]:
                x = 1 << (4 * col)
                phi = 0
                for idx, y in enumerate(ya):
                    acc = 0
                    for jp in range(1, j):
                        jq = j - jp
                        if jp in parts and jq in parts:
                            acc = f.add(acc, pair(parts[jp].apply(x),
                                                  parts[jq].apply(y)))
                    phi |= f.neg(acc) << (4 * idx)
                coeffs = pinv.apply(phi)
                z = 0
                for idx2, zb in enumerate(za):
                    cc = vec_entry(coeffs, idx2)
                    if cc:
                        z = ops.add(z, ops.scale(zb, cc))
                njx[col] = z
        # middle block a = -j: antisymmetrization choice
        mid = model.piece_cols.get(-j, ())
        if mid:
            basis = model.piece_basis(-j)
            k = len(basis)
            beta_rows = []
            for x in basis:
                row = 0
                for idx, y in enumerate(basis):
                    acc = 0
                    for jp in range(1, j):
                        jq = j - jp
                        acc = f.add(acc, pair(parts[jp].apply(x),
                                              parts[jq].apply(y)))
                    row |= acc << (4 * idx)
                beta_rows.append(row)
            beta = Matrix(f, k, k, beta_rows)
            for i in range(k):
                if beta.entry(i, i) != 0:
                    raise AssertionError("middle-block pairing is not alternating")
            bracket = _strict_upper(beta).scalar_mul(f.neg(1))
            za, _, pinv = _pairing_solver(model, j)
            for idx, col in enumerate(mid):
                phi = bracket.rows[idx]
                coeffs = pinv.apply(phi)
                z = 0
                for idx2, zb in enumerate(za):
                    cc = vec_entry(coeffs, idx2)
                    if cc:
                        z = ops.add(z, ops.scale(zb, cc))
                njx[col] = z
        rows = [0] * d
        for col, z in njx.items():
            for rr in range(d):
                vv = vec_entry(z, rr)
                if vv:
                    rows[rr] |= vv << (4 * col)
        parts[j] = Matrix(f, d, d, rows)

        if char2 and j == 2:
            parts[2] = _char2_q_correction(model, parts, nn, crit_basis,
                                           q_values)

    n = Matrix.zero(f, d)
    for m in parts.values():
        n = n + m
    _assert_model_postconditions(model, n, parts[1], nn, crit_basis if char2 else None,
                                 q_values if char2 else None)
    return n, model


def _char2_q_correction(model, parts, nn, crit_basis, q_values):
    """Adjust the degree-4 part so the critical quadratic form matches.

    The defect between the prescribed values and the values produced by
    the current degree-4 part is a square of a linear functional; it is
    pulled back along the injective shift power into the degree -2
    piece and absorbed by a symmetric correction of the pairing there.
    """
    f = model.field
    ops = row_ops(f)
    n2 = parts[1]
    n4 = parts[2]
    if not crit_basis:
        return n4

    def pair(x, y):
        return ops.dot(x, model.gram.apply(y))

    powers2 = matrix_powers(n2, nn)

    def q_via(x):
        acc = 0
        for i in range(nn - 1):
            i2 = nn - 2 - i
            w = mat_vec_rows(powers2[i2], x, ops)
            w = n4.apply(w)
            w = mat_vec_rows(powers2[i], w, ops)
            acc = f.add(acc, pair(x, w))
        return acc

    theta = [f.sqrt(f.add(q_values[idx], q_via(x)))
             for idx, x in enumerate(crit_basis)]
    # the produced and prescribed forms must share their polarization,
    # making the defect additive; checked on basis pairs
    polar = model.polar_matrix(nn)
    for i, x in enumerate(crit_basis):
        for j2 in range(i + 1, len(crit_basis)):
            y = crit_basis[j2]
            mixed = f.add(q_via(ops.add(x, y)), f.add(q_via(x), q_via(y)))
            if mixed != polar.entry(i, j2):
                raise AssertionError(
                    "degree-4 values fail to polarize to the graded pairing")

    vm2_cols = model.piece_cols.get(-2, ())
    if not vm2_cols:
        if any(theta):
            raise AssertionError("correction needed but no degree -2 piece")
        return n4
    k2 = len(vm2_cols)
    t_half = (nn - 2) // 2
    # theta1 on the degree -2 piece with theta1(shift^t x) = theta(x);
    # model basis vectors are unit vectors, so coordinates are entries
    sysrows = []
    for idx, x in enumerate(crit_basis):
        img = mat_vec_rows(powers2[t_half], x, ops)
        row = 0
        for pos, col in enumerate(vm2_cols):
            row |= vec_entry(img, col) << (4 * pos)
        row |= theta[idx] << (4 * k2)
        sysrows.append(row)
    red, pivots = rref_rows(sysrows, k2 + 1, ops)
    theta1 = [0] * k2
    for i, p in enumerate(pivots):
        if p == k2:
            raise AssertionError("square-root functional not expressible")
        theta1[p] = vec_entry(red[i], k2)

    # zeta: degree -2 -> degree 2 with <x, zeta y> = theta1(x) theta1(y)
    za, _, pinv = _pairing_solver(model, 2)
    zrows = [0] * model.dim
    for idx in range(k2):
        phi = 0
        for idx2 in range(k2):
            phi |= f.mul(theta1[idx2], theta1[idx]) << (4 * idx2)
        coeffs = pinv.apply(phi)
        z = 0
        for idx2, zb in enumerate(za):
            cc = vec_entry(coeffs, idx2)
            if cc:
                z = ops.add(z, ops.scale(zb, cc))
        col = vm2_cols[idx]
        for rr in range(model.dim):
            vv = vec_entry(z, rr)
            if vv:
                zrows[rr] |= vv << (4 * col)
    return n4 + Matrix(f, model.dim, model.dim, zrows)


def _assert_model_postconditions(model, n, nu, nn, crit_basis, q_values):
    f = model.field
    ops = row_ops(f)
    if not is_m_member(n, model.space):
        raise AssertionError("constructed nilpotent broke the form")
    filt = dk_filtration(n)
    for a in sorted(model.piece_cols):
        want = Subspace.from_vectors(
            f, model.dim,
            [v for deg, cols in model.piece_cols.items() if deg >= a
             for v in (1 << (4 * c) for c in cols)])
        if filt.step(a) != want:
            raise AssertionError("constructed filtration missed the target")
    diff = n - nu
    # induced degree-2 part is nu: the difference raises degrees by >= 4
    for a, cols in model.piece_cols.items():
        for c in cols:
            img = diff.apply(1 << (4 * c))
            for rr in range(model.dim):
                if vec_entry(img, rr) and model.degrees[rr] < a + 4:
                    raise AssertionError("constructed nilpotent has stray low terms")
    if crit_basis is not None and crit_basis:
        powers = matrix_powers(n, nn)
        for idx, x in enumerate(crit_basis):
            got = ops.dot(x, model.gram.apply(
                mat_vec_rows(powers[nn - 1], x, ops)))
            if got != q_values[idx]:
                raise AssertionError("critical quadratic form mismatch")


def _symplectic_standardizer(s: SymplecticSpace):
    """U with columns a hyperbolic basis: U^T G U = standard antidiagonal."""
    f = s.field
    d = s.dim
    ops = row_ops(f)
    remaining = Subspace.full(f, d)
    firsts = []
    seconds = []
    while remaining.dim():
        v = remaining.basis[0]
        w = None
        for cand in remaining.basis[1:]:
            if s.pairing(v, cand):
                w = cand
                break
        if w is None:
            raise AssertionError("form degenerate on the remaining block")
        c = s.pairing(v, w)
        w = ops.scale(w, f.inv(c))
        firsts.append(v)
        seconds.append(w)
        span = Subspace.from_vectors(f, d, (v, w))
        remaining = subspace_meet(remaining, s.perp(span))
    cols = firsts + list(reversed(seconds))
    u = Matrix(f, d, d, transpose_rows(cols, d, d))
    std = standard_symplectic(d, f.q)
    if u.transpose() * s.gram * u != std.gram:
        raise AssertionError("hyperbolic basis did not standardize the form")
    return u


def construct_N(label: PieceLabel, spec: GroupSpec, q_form=None) -> Matrix:
    """A member nilpotent with the given label in the standard space.

    q_form, when given, is the tuple of prescribed values of the
    critical-depth quadratic form on the model's graded basis
    (characteristic 2 only); omitted, it defaults to zero values.
    """
    if spec.family != "sp":
        raise InadmissibleLabel("constructor applies to the symplectic family")
    if label not in set(admissible_labels(spec)):
        raise InadmissibleLabel(f"{label} is not admissible for {spec}")
    n_model, model = construct_model_nilpotent(label, spec.q, q_form)
    u = _symplectic_standardizer(model.space)
    ui = u.inverse()
    n_std = ui * n_model * u
    s = standard_symplectic(spec.dim, spec.q)
    if not is_m_member(n_std, s):
        raise AssertionError("standardized nilpotent broke the form")
    return n_std


def canonical_representative(label: PieceLabel, spec: GroupSpec):
    """(u, S): a unipotent with the given label, in the standard space."""
    if spec.family == "gl":
        if label.J:
            raise InadmissibleLabel("GL labels have empty J")
        if label.lam.total() != spec.dim:
            raise InadmissibleLabel("partition does not match the dimension")
        f = spec.field
        d = spec.dim
        rows = list(_identity_rows(d))
        off = 0
        for p in label.lam.parts:
            for i in range(p - 1):
                rows[off + i + 1] |= 1 << (4 * (off + i))
            off += p
        return Matrix(f, d, d, rows), None
    n = construct_N(label, spec)
    s = standard_symplectic(spec.dim, spec.q)
    u = Matrix.identity(spec.field, spec.dim) + n
    got = sp_label(u, s)
    if got != label:
        raise AssertionError(f"representative round-trip failed: {got} != {label}")
    return u, s


# ---------------------------------------------------------------------------
# verification driver
# ---------------------------------------------------------------------------

class ClassReport:
    """Per-label counts and orbit data for one group, plus check flags."""

    def __init__(self, spec, records, checks, metadata=None):
        self.spec = spec
        self.records = records          # list of dicts: label/count/orbits
        self.checks = checks            # dict name -> bool
        self.metadata = metadata or {}

    def ok(self):
        return all(self.checks.values())

    def to_json_lines(self):
        lines = []
        for rec in self.records:
            lines.append({"lambda": list(rec["label"].lam.parts),
                          "J": list(rec["label"].J),
                          "count": rec["count"],
                          "orbits": rec["orbits"]})
        return lines


def e3_group_elements(filt, spec: GroupSpec, s=None):
    """Points of the unipotent group 1 + (filtration-degree >= 3 maps).

    Enumerates the matrix subspace raising filtration degree by 3 and
    keeps the form-compatible points for Sp.
    """
    f = spec.field
    d = spec.dim
    ops = row_ops(f)
    # linear conditions on vectorized matrices (d^2 nibbles, row-major)
    cons = []
    for a in filt.window():
        va = filt.step(a)
        target = filt.step(a + 3)
        tcon = kernel_rows(target.basis, d, ops) if target.dim() else _identity_rows(d)
        for v in va.basis:
            for crow in tcon:
                # sum_{r,c} crow_r M[r][c] v_c = 0
                entries = [0] * (d * d)
                for rr in range(d):
                    cr = vec_entry(crow, rr)
                    if cr:
                        for cc in range(d):
                            vv = vec_entry(v, cc)
                            if vv:
                                pos = rr * d + cc
                                entries[pos] = f.add(entries[pos], f.mul(cr, vv))
                row = pack_vec(entries)
                if row:
                    cons.append(row)
    basis = kernel_rows(cons, d * d, ops) if cons else tuple(
        1 << (4 * i) for i in range(d * d))
    one = Matrix.identity(f, d)
    out = []
    for codes in itertools.product(range(f.q), repeat=len(basis)):
        vecm = 0
        for c, b in zip(codes, basis):
            if c:
                vecm = ops.add(vecm, ops.scale(b, c))
        rows = tuple(sum(vec_entry(vecm, rr * d + cc) << (4 * cc)
                         for cc in range(d)) for rr in range(d))
        m = Matrix(f, d, d, rows)
        g = one + m
        if s is not None and not s.in_group(g):
            continue
        if not (m ** d).is_zero():
            continue
        out.append(g)
    return out


def verify_pieces(spec: GroupSpec, sample=200, rng=None) -> ClassReport:
    """Exhaustive piece verification for one group at desk scale.

    Checks: every unipotent gets exactly one label and the labels match
    the admissible census; the label is constant on conjugation orbits
    (each orbit refines one fiber); per-label coset stability of
    translation by the depth->=3 unipotent group; centralizer
    containment in the degree->=0 parabolic for small groups.
    """
    import random as _random
    if rng is None:
        rng = _random.Random(0)
    f = spec.field
    d = spec.dim
    labeler = _Labeler(spec)
    keys = unipotent_keys(spec)
    counts = {}
    by_label = {}
    for rows in keys:
        k = labeler.label_key(rows)
        counts[k] = counts.get(k, 0) + 1
        by_label.setdefault(k, []).append(rows)

    checks = {}
    admissible = admissible_labels(spec)
    observed = {_label_from_key(k) for k in counts}
    checks["labels-match-census"] = observed == set(admissible)
    checks["counts-sum-to-unipotent-total"] = (
        sum(counts.values()) == spec.unipotent_count())

    # orbits and the class-function property
    elements = [Matrix(f, d, d, rows) for rows in keys]
    orbits = conjugacy_orbits(elements, spec)
    orbit_sizes_by_label = {}
    class_fn = True
    for orbit in orbits:
        lk = labeler.label_key(orbit[0].rows)
        if any(labeler.label_key(m.rows) != lk for m in orbit[1:]):
            class_fn = False
        orbit_sizes_by_label.setdefault(lk, []).append(len(orbit))
    checks["label-constant-on-orbits"] = class_fn
    checks["orbit-counts-partition-fibers"] = all(
        sum(orbit_sizes_by_label.get(k, [])) == c for k, c in counts.items())

    s = spec.space()
    one = Matrix.identity(f, d)
    coset_ok = True
    centralizer_ok = True
    small_group = spec.group_order() <= 1_000_000
    group_keys = None
    for k, rows_list in by_label.items():
        chosen = rows_list if len(rows_list) <= 5 else [
            rows_list[rng.randrange(len(rows_list))] for _ in range(5)]
        for rows in chosen:
            u = Matrix(f, d, d, rows)
            n = u - one
            filt = dk_filtration(n)
            g3 = e3_group_elements(filt, spec, s)
            left = {(u * g).rows for g in g3}
            right = {(g * u).rows for g in g3}
            if left != right:
                coset_ok = False
            for g in g3:
                if labeler.label_key((u * g).rows) != k:
                    coset_ok = False
        # centralizer containment: z u = u z implies z preserves the filtration
        if small_group and spec.dim <= 4:
            if group_keys is None:
                group_keys = bfs_group(spec)
            rows = rows_list[0]
            u = Matrix(f, d, d, rows)
            filt = dk_filtration(u - one)
            ops = row_ops(f)
            for gk in group_keys:
                grows = _unpack_key(gk, d)
                if mat_mul_rows(grows, rows, ops) == mat_mul_rows(rows, grows, ops):
                    gm = Matrix(f, d, d, grows)
                    for a in filt.window():
                        va = filt.step(a)
                        if not all(va.contains_vector(gm.apply(v))
                                   for v in va.basis):
                            centralizer_ok = False
    checks["coset-translation-stays-in-class"] = coset_ok
    checks["centralizer-preserves-filtration"] = centralizer_ok

    records = []
    for k in sorted(counts, key=lambda kk: (kk[0], kk[1])):
        records.append({
            "label": _label_from_key(k),
            "count": counts[k],
            "orbits": sorted(orbit_sizes_by_label.get(k, ())),
        })
    metadata = {
        "group": repr(spec),
        "group_order": spec.group_order(),
        "generators": "elementary transvections on basis vectors and pairwise sums"
                      if spec.family == "sp" else
                      "adjacent elementary matrices and a torus generator",
    }
    return ClassReport(spec, records, checks, metadata)
