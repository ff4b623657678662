"""Characteristic-2 quadratic invariants attached to a symplectic nilpotent.

For each even n with the neighbouring odd-depth forms alternating, the
primitive piece P_{-n} carries a quadratic form

    q_n(x) = <lift(x), N^(n-1) lift(x)>,

well defined because any two admissible lifts differ inside a space on
which the pairing contributes nothing; it polarizes to b_n.  When every
odd-depth form from n-1 upward is alternating, the whole graded piece
at depth n carries the coarser form Q_n (any representative works), and
Q_n decomposes as the sum of the q_{n+2k} on primitive components.

The class invariant inside a piece is the pair (I, J): I collects the
odd n whose primitive piece has positive even dimension, and n lies in
J exactly when the additive functional x -> <x, nu^n x> is nonzero on
ker(nu^(n+1)) in graded depth n, equivalently when the symmetric form
b_n is not alternating.  In odd characteristic J is always empty.
"""

from __future__ import annotations

from typing import NamedTuple

from .errors import CharMismatch, NotInL, NotInLprime, NotMMember
from .filtration import GradedSpace, dk_filtration, jordan_type, matrix_powers
from .linalg import (
    Matrix, Subspace, mat_vec_rows, preimage, row_ops, subspace_meet,
    vec_entry,
)
from .symplectic import GradedSymplecticData, SymplecticSpace, is_m_member


class SetsL(NamedTuple):
    L: tuple
    Lprime: tuple
    nn: int


def _require_char2(s: SymplecticSpace):
    if s.field.p != 2:
        raise CharMismatch("operation is defined in characteristic 2 only")


def _require_member(n, s):
    if not is_m_member(n, s):
        raise NotMMember("nilpotent is not compatible with the symplectic form")


def _is_alternating(mat: Matrix) -> bool:
    return all(mat.entry(i, i) == 0 for i in range(mat.nrows))


def sets_L(n: Matrix, s: SymplecticSpace, data: GradedSymplecticData = None) -> SetsL:
    """The even depths where q_n and Q_n exist, and the smallest of the latter.

    L lists the even n >= 2 with b_{n-1} and b_{n+1} alternating; Lprime
    those with every b at odd depth >= n-1 alternating.  Both are listed
    within the window [2, e+2]; beyond the window membership is vacuous
    (all forms live on zero spaces), so Lprime's minimum nn always falls
    inside the window.
    """
    _require_char2(s)
    if data is None:
        _require_member(n, s)
        data = GradedSymplecticData(n, s)
    e = data.graded.e
    alternating = {}
    for m in range(1, e, 2):
        alternating[m] = _is_alternating(data.b_form(m))
    window_top = e + 2 if (e + 2) % 2 == 0 else e + 3

    def alt(m):
        return alternating.get(m, True)

    l_set = tuple(nn for nn in range(2, window_top + 1, 2)
                  if alt(nn - 1) and alt(nn + 1))
    lp_set = tuple(nn for nn in range(2, window_top + 1, 2)
                   if all(alt(m) for m in range(nn - 1, e, 2)))
    nn_val = lp_set[0] if lp_set else window_top
    return SetsL(l_set, lp_set, nn_val)


class QuadraticForm:
    """A quadratic form given by values on a basis plus its polarization.

    Evaluation rule: Q(sum a_i x_i) = sum a_i^2 Q(x_i)
    + sum_{i<j} a_i a_j polar(x_i, x_j).
    """

    __slots__ = ("field", "domain", "basis_vectors", "values", "polar")

    def __init__(self, f, domain: Subspace, basis_vectors, values, polar: Matrix):
        object.__setattr__(self, "field", f)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "basis_vectors", tuple(basis_vectors))
        object.__setattr__(self, "values", tuple(values))
        object.__setattr__(self, "polar", polar)
        if len(self.values) != len(self.basis_vectors):
            raise ValueError("one value per basis vector required")
        if polar.nrows != len(self.basis_vectors):
            raise ValueError("polarization size mismatch")

    def __setattr__(self, name, value):
        raise AttributeError("QuadraticForm is immutable")

    def dim(self):
        return len(self.basis_vectors)

    def evaluate_coeffs(self, coeffs):
        """Value on sum coeffs[i] * basis[i]."""
        f = self.field
        acc = 0
        k = len(coeffs)
        for i in range(k):
            a = coeffs[i]
            if a:
                acc = f.add(acc, f.mul(f.mul(a, a), self.values[i]))
                for j in range(i + 1, k):
                    b = coeffs[j]
                    if b:
                        acc = f.add(acc, f.mul(f.mul(a, b), self.polar.entry(i, j)))
        return acc

    def evaluate_vector(self, v):
        """Value on an ambient packed vector lying in the domain."""
        coeffs = self._coords(v)
        return self.evaluate_coeffs(coeffs)

    def _coords(self, v):
        from .linalg import rref_rows
        ops = row_ops(self.field)
        k = len(self.basis_vectors)
        aug = []
        for rr in range(self.domain.ambient_dim):
            row = 0
            for i in range(k):
                row |= vec_entry(self.basis_vectors[i], rr) << (4 * i)
            row |= vec_entry(v, rr) << (4 * k)
            aug.append(row)
        red, pivots = rref_rows(aug, k + 1, ops)
        coeffs = [0] * k
        for i, p in enumerate(pivots):
            if p == k:
                raise ValueError("vector is not in the domain of the form")
            coeffs[p] = vec_entry(red[i], k)
        return coeffs

    def polar_value(self, i, j):
        return self.polar.entry(i, j)

    def is_alternating_polarization(self):
        return _is_alternating(self.polar)

    def __eq__(self, other):
        return (isinstance(other, QuadraticForm)
                and other.basis_vectors == self.basis_vectors
                and other.values == self.values and other.polar == self.polar)

    def __repr__(self):
        return (f"QuadraticForm(dim={self.dim()}, values={self.values})")


def _pair(s, powers, m, x, y, ops):
    """<x, N^m y> in the ambient space."""
    return ops.dot(x, s.gram.apply(mat_vec_rows(powers[m], y, ops)))


def qform_qn(n: Matrix, s: SymplecticSpace, depth: int,
             data: GradedSymplecticData = None) -> QuadraticForm:
    """The quadratic form q_n on P_{-n}, for even n in the set L.

    Values are computed on the chain-top basis via the distinguished
    lifts; each value is recomputed with an independent second lift and
    the two must agree (the well-definedness contract).
    """
    _require_char2(s)
    if data is None:
        _require_member(n, s)
        data = GradedSymplecticData(n, s)
    sets = sets_L(n, s, data)
    if depth not in sets.L:
        raise NotInL(f"{depth} is not in the admissible even set {sets.L}")
    g = data.graded
    f = n.field
    ops = row_ops(f)
    basis = g.primitive_vectors.get(-depth, ())
    powers = matrix_powers(n, max(depth + 1, 1))
    values = [_pair(s, powers, depth - 1, x, x, ops) for x in basis]
    if basis:
        from .filtration import primitive_lift_freedom
        freedom = primitive_lift_freedom(g, depth)
        if freedom.dim():
            y = freedom.basis[0]
            for i, x in enumerate(basis):
                x2 = ops.add(x, y)
                if _pair(s, powers, depth - 1, x2, x2, ops) != values[i]:
                    raise AssertionError("q value depends on the lift")  # bug guard
    polar = data.b_form(depth)
    dom = g.primitive_subspace(-depth)
    return QuadraticForm(f, dom, basis, values, polar)


def qform_Qn(n: Matrix, s: SymplecticSpace, depth: int,
             data: GradedSymplecticData = None) -> QuadraticForm:
    """The quadratic form Q_n on the graded piece at depth n, n in Lprime.

    Any representative computes it; the decomposition into the q_{n+2k}
    on primitive components is asserted on the basis.
    """
    _require_char2(s)
    if data is None:
        _require_member(n, s)
        data = GradedSymplecticData(n, s)
    sets = sets_L(n, s, data)
    if depth not in sets.Lprime:
        raise NotInLprime(f"{depth} is not in the admissible upward-closed set")
    g = data.graded
    f = n.field
    ops = row_ops(f)
    basis = g.piece_vectors.get(-depth, ())
    powers = matrix_powers(n, max(depth + 1, 1))
    values = [_pair(s, powers, depth - 1, w, w, ops) for w in basis]

    # polarization: (x, y) -> <x, nu^depth y> on the graded piece
    k = len(basis)
    rows = []
    for x in basis:
        row = 0
        for j, y in enumerate(basis):
            row |= _pair(s, powers, depth, x, y, ops) << (4 * j)
        rows.append(row)
    polar = Matrix(f, k, k, rows)

    # decomposition against the primitive forms q_{depth+2k}
    qns = {}
    for idx, w in enumerate(basis):
        coords = g.coordinates(w)
        comps = {}
        pos = 0
        for chain in g.chains:
            er = len(chain)
            for kk in range(er):
                c = vec_entry(coords, pos)
                pos += 1
                if c and 2 * kk + 1 - er == -depth:
                    dd = er - 1  # w component sits at nu^kk of a depth-dd top
                    comps.setdefault(dd, 0)
                    comps[dd] = ops.add(comps[dd], ops.scale(chain[0], c))
        total = 0
        for dd, xk in comps.items():
            if dd not in qns:
                qns[dd] = qform_qn(n, s, dd, data)
            total = f.add(total, qns[dd].evaluate_vector(xk))
        if total != values[idx]:
            raise AssertionError("graded form does not decompose over primitives")
    dom = g.piece_subspace(-depth)
    return QuadraticForm(f, dom, basis, values, polar)


class SplittingInvariant:
    """The per-class data (I, J, c) plus the even-depth sets in char 2."""

    __slots__ = ("I", "J", "c", "L", "Lprime", "nn")

    def __init__(self, i_set, j_set, c_map, l_set=(), lp_set=(), nn=None):
        object.__setattr__(self, "I", tuple(sorted(i_set)))
        object.__setattr__(self, "J", tuple(sorted(j_set)))
        object.__setattr__(self, "c", dict(c_map))
        object.__setattr__(self, "L", tuple(l_set))
        object.__setattr__(self, "Lprime", tuple(lp_set))
        object.__setattr__(self, "nn", nn)
        if not set(self.J) <= set(self.I):
            raise ValueError("J must be a subset of I")
        for m in self.I:
            cm = self.c[m]
            if cm <= 0 or cm % 2 != 0:
                raise ValueError("c values on I must be even and positive")

    def __setattr__(self, name, value):
        raise AttributeError("SplittingInvariant is immutable")

    def __eq__(self, other):
        return (isinstance(other, SplittingInvariant) and other.I == self.I
                and other.J == self.J and other.c == self.c)

    def __hash__(self):
        return hash((self.I, self.J, tuple(sorted(self.c.items()))))

    def __repr__(self):
        return f"SplittingInvariant(I={self.I}, J={self.J}, c={self.c})"

    def to_json(self):
        return {"I": list(self.I), "J": list(self.J),
                "c": {str(k): v for k, v in sorted(self.c.items())},
                "L": list(self.L), "Lprime": list(self.Lprime)}


def odd_set_I(lam) -> tuple:
    """Odd n whose primitive piece has positive even dimension: the
    multiplicity of the part n+1 is even and >= 2."""
    return tuple(n for n in range(1, max(lam.parts, default=0) + 1, 2)
                 if (m := lam.multiplicity(n + 1)) >= 2 and m % 2 == 0)


def splitting_invariant(n: Matrix, s: SymplecticSpace) -> SplittingInvariant:
    """The invariant (I, J, c) of a member nilpotent.

    J is decided by zero-testing the additive functional
    x -> <x, N^n x> on a basis of the space of vectors of filtration
    depth -n killed into depth n+3 by N^(n+1): the functional is
    additive and Frobenius-homogeneous in characteristic 2, so vanishing
    on a basis is vanishing everywhere.  Odd characteristic: J is empty.
    """
    _require_member(n, s)
    lam = jordan_type(n)
    i_set = odd_set_I(lam)
    c_map = {m: lam.multiplicity(m + 1) for m in i_set}
    f = n.field
    if f.p != 2:
        return SplittingInvariant(i_set, (), c_map)
    filt = dk_filtration(n)
    ops = row_ops(f)
    j_set = []
    powers = matrix_powers(n, (max(i_set) + 1) if i_set else 1)
    for m in i_set:
        pm1 = Matrix(f, n.nrows, n.nrows, powers[m + 1])
        kn = subspace_meet(filt.step(-m), preimage(pm1, filt.step(m + 3)))
        gram_rows = s.gram.rows
        if any(ops.dot(x, mat_vec_rows(gram_rows,
                                       mat_vec_rows(powers[m], x, ops), ops)) != 0
               for x in kn.basis):
            j_set.append(m)
    sets = sets_L(n, s)
    return SplittingInvariant(i_set, j_set, c_map, sets.L, sets.Lprime, sets.nn)


def j_set_from_bforms(n: Matrix, s: SymplecticSpace) -> tuple:
    """J recomputed from the graded side: odd n in I with b_n non-alternating.

    Independent of splitting_invariant's functional route; used for
    cross-checking.
    """
    _require_member(n, s)
    lam = jordan_type(n)
    i_set = odd_set_I(lam)
    if n.field.p != 2 or not i_set:
        return ()
    data = GradedSymplecticData(n, s)
    return tuple(m for m in i_set if not _is_alternating(data.b_form(m)))
