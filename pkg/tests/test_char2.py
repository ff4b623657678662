import itertools
import random

import pytest

from upieces.char2 import (
    QuadraticForm, SplittingInvariant, j_set_from_bforms, odd_set_I,
    qform_Qn, qform_qn, sets_L, splitting_invariant,
)
from upieces.errors import CharMismatch, NotInL, NotInLprime
from upieces.ff import field
from upieces.filtration import (
    GradedSpace, Partition, matrix_powers, primitive_lift_freedom,
)
from upieces.linalg import Matrix, mat_vec_rows, pack_vec, row_ops
from upieces.symplectic import (
    GradedSymplecticData, SymplecticSpace, is_m_member, standard_symplectic,
)
from test_symplectic import _pairs_form_dim4, sample_m_members


def test_sets_L_zero():
    f = field(2)
    s = standard_symplectic(4, 2)
    sets = sets_L(Matrix.zero(f, 4), s)
    assert sets.L == (2, 4)       # vacuous within the window
    assert sets.Lprime == (2, 4)
    assert sets.nn == 2


def test_sets_L_single_block_dim2():
    f = field(2)
    s = standard_symplectic(2, 2)
    n = Matrix.from_entries(f, [[0, 1], [0, 0]])
    sets = sets_L(n, s)
    assert 2 not in sets.L
    assert sets.L == (4,)
    assert sets.nn == 4


def test_sets_L_type22_crossed():
    f = field(2)
    n, s, _ = _pairs_form_dim4(f, diag=False)
    sets = sets_L(n, s)
    assert 2 in sets.L
    assert sets.nn == 2


def test_sets_L_type22_diag():
    f = field(2)
    n, s, _ = _pairs_form_dim4(f, diag=True)
    sets = sets_L(n, s)
    assert 2 not in sets.L
    assert sets.nn == 4


def test_sets_L_char_rejected():
    s = standard_symplectic(2, 3)
    with pytest.raises(CharMismatch):
        sets_L(Matrix.zero(field(3), 2), s)


def type33_member():
    """Two chains of length 3: shift in degrees -2, 0, 2 with block pairing.

    Basis (f1, f2, g1, g2, h1, h2), N: f_i -> g_i -> h_i.  The Gram
    blocks follow the shift-compatible recursion: antidiagonal blocks
    pair f with h and g with g by [[0,1],[1,0]], and the half-block
    pairing f against g absorbs the quadratic membership term.
    """
    f = field(2)
    gram = Matrix.from_entries(f, [
        [0, 0, 0, 1, 0, 1],
        [0, 0, 0, 0, 1, 0],
        [0, 0, 0, 1, 0, 0],
        [1, 0, 1, 0, 0, 0],
        [0, 1, 0, 0, 0, 0],
        [1, 0, 0, 0, 0, 0]])
    n = Matrix.from_entries(f, [
        [0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0],
        [1, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0],
        [0, 0, 1, 0, 0, 0],
        [0, 0, 0, 1, 0, 0]])
    s = SymplecticSpace(gram)
    assert is_m_member(n, s)
    return n, s


def test_qform_qn_type33():
    n, s = type33_member()
    from upieces.filtration import jordan_type
    assert jordan_type(n).parts == (3, 3)
    sets = sets_L(n, s)
    assert 2 in sets.L
    q2 = qform_qn(n, s, 2)
    assert q2.dim() == 2
    # polarization is b_2, alternating and nondegenerate
    assert q2.is_alternating_polarization()
    assert q2.polar.rank() == 2


def test_qform_qn_rejects_outside_L():
    f = field(2)
    n, s, _ = _pairs_form_dim4(f, diag=True)
    with pytest.raises(NotInL):
        qform_qn(n, s, 2)


def test_qform_empty_when_no_primitives():
    n, s = type33_member()
    sets = sets_L(n, s)
    assert 4 in sets.L
    q4 = qform_qn(n, s, 4)   # P_{-4} = 0 for type (3,3)
    assert q4.dim() == 0


def _q_direct(n, s, m, x):
    """<x, N^(m-1) x> for a packed lift x."""
    ops = row_ops(n.field)
    powers = matrix_powers(n, m + 1)
    return ops.dot(x, s.gram.apply(mat_vec_rows(powers[m - 1], x, ops)))


def exhaustive_lift_check(n, s, depth):
    """q values agree across every admissible lift of every primitive vector."""
    f = n.field
    g = GradedSpace(n)
    data = GradedSymplecticData(n, s, graded=g)
    q = qform_qn(n, s, depth, data)
    free = primitive_lift_freedom(g, depth)
    ops = row_ops(f)
    for i, x in enumerate(q.basis_vectors):
        base = q.values[i]
        for y in free.vectors():
            assert _q_direct(n, s, depth, ops.add(x, y)) == base


def test_qn_lift_independence_small():
    n, s = type33_member()
    exhaustive_lift_check(n, s, 2)
    f = field(2)
    n2, s2, _ = _pairs_form_dim4(f, diag=False)
    exhaustive_lift_check(n2, s2, 2)


def test_qn_polarization_identity():
    # q(x+y) = q(x) + q(y) + b(x, y) checked against direct evaluation
    n, s = type33_member()
    data = GradedSymplecticData(n, s)
    q2 = qform_qn(n, s, 2, data)
    f = n.field
    ops = row_ops(f)
    k = q2.dim()
    for ca in itertools.product(range(2), repeat=k):
        for cb in itertools.product(range(2), repeat=k):
            x = 0
            y = 0
            for i in range(k):
                if ca[i]:
                    x = ops.add(x, q2.basis_vectors[i])
                if cb[i]:
                    y = ops.add(y, q2.basis_vectors[i])
            qx = _q_direct(n, s, 2, x)
            qy = _q_direct(n, s, 2, y)
            qxy = _q_direct(n, s, 2, ops.add(x, y))
            bxy = ops.dot(x, data.gram0.apply(mat_vec_rows(
                matrix_powers(n, 2)[2], y, ops)))
            assert qxy == f.add(f.add(qx, qy), bxy)
            # and the stored form evaluates identically
            assert q2.evaluate_coeffs(ca) == qx


def test_Qn_matches_primitive_decomposition():
    n, s = type33_member()
    sets = sets_L(n, s)
    assert sets.nn == 2
    q_big = qform_Qn(n, s, 2)
    assert q_big.dim() == 2  # gr_{-2} has dimension 2 for type (3,3)


def test_Qn_rejects_outside_Lprime():
    f = field(2)
    n, s, _ = _pairs_form_dim4(f, diag=True)  # b_1 non-alternating: 2 not in L'
    with pytest.raises(NotInLprime):
        qform_Qn(n, s, 2)


def test_Qn_representative_independence():
    n, s = type33_member()
    f = n.field
    g = GradedSpace(n)
    data = GradedSymplecticData(n, s, graded=g)
    q_big = qform_Qn(n, s, 2, data)
    filt = g.filtration
    higher = filt.step(-1)
    ops = row_ops(f)
    rng = random.Random(4)
    for i, w in enumerate(q_big.basis_vectors):
        for _ in range(50):
            y = 0
            for b in higher.basis:
                y = ops.add(y, ops.scale(b, rng.randrange(f.q)))
            assert _q_direct(n, s, 2, ops.add(w, y)) == q_big.values[i]


def test_odd_set_I():
    assert odd_set_I(Partition((2, 2))) == (1,)
    assert odd_set_I(Partition((2, 1, 1))) == ()
    assert odd_set_I(Partition((2, 2, 2))) == ()
    assert odd_set_I(Partition((2, 2, 1, 1))) == (1,)
    assert odd_set_I(Partition((4, 4, 2, 2))) == (1, 3)
    assert odd_set_I(Partition((4,))) == ()


def test_splitting_invariant_examples():
    f = field(2)
    n_diag, s_diag, _ = _pairs_form_dim4(f, diag=True)
    inv = splitting_invariant(n_diag, s_diag)
    assert inv.I == (1,) and inv.J == (1,) and inv.c == {1: 2}

    n_cross, s_cross, _ = _pairs_form_dim4(f, diag=False)
    inv = splitting_invariant(n_cross, s_cross)
    assert inv.I == (1,) and inv.J == () and inv.c == {1: 2}

    # type (2,1,1): transvection-like member of the standard dim-4 space
    s = standard_symplectic(4, 2)
    n = Matrix.from_entries(f, [[0, 0, 0, 1], [0, 0, 0, 0],
                                [0, 0, 0, 0], [0, 0, 0, 0]])
    assert is_m_member(n, s)
    from upieces.filtration import jordan_type
    assert jordan_type(n).parts == (2, 1, 1)
    inv = splitting_invariant(n, s)
    assert inv.I == () and inv.J == ()


def test_splitting_invariant_odd_char():
    s = standard_symplectic(4, 3)
    rng = random.Random(8)
    for n in sample_m_members(s, rng, 10):
        inv = splitting_invariant(n, s)
        assert inv.J == ()


@pytest.mark.parametrize("dim", (2, 4))
def test_j_routes_agree_random(dim):
    # functional route vs b_n-diagonal route
    s = standard_symplectic(dim, 2)
    rng = random.Random(dim)
    for n in sample_m_members(s, rng, 40):
        inv = splitting_invariant(n, s)
        assert inv.J == j_set_from_bforms(n, s)


def test_splitting_invariant_json():
    f = field(2)
    n, s, _ = _pairs_form_dim4(f, diag=True)
    obj = splitting_invariant(n, s).to_json()
    assert obj["I"] == [1] and obj["J"] == [1] and obj["c"] == {"1": 2}
    assert "L" in obj and "Lprime" in obj
