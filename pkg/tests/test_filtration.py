import random

import pytest

from upieces.errors import DegreeMismatch, NotInE3, NotNilpotent, NotPrimitive
from upieces.ff import field
from upieces.filtration import (
    Filtration, GradedSpace, Partition, commutator_solve, dk_filtration,
    filtration_from_chains, graded_space, jordan_basis, jordan_type,
    lift_graded_endomorphism, lift_primitive, matrix_powers, nilpotency_order,
    partitions_of, primitive_lift_freedom, straighten, verify_characterization,
)
from upieces.linalg import (
    Matrix, Subspace, mat_vec_rows, pack_vec, random_invertible, row_ops,
)


def jordan_nilpotent(f, partition):
    """Block nilpotent with one Jordan chain per part (shift on each block)."""
    n = sum(partition)
    rows = [[0] * n for _ in range(n)]
    off = 0
    for p in partition:
        for i in range(p - 1):
            rows[off + i + 1][off + i] = 1
        off += p
    return Matrix.from_entries(f, rows)


def conjugate(m, g):
    return g * m * g.inverse()


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------

def test_partitions_of():
    assert [p.parts for p in partitions_of(4)] == [
        (4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]
    assert len(partitions_of(6)) == 11


def test_partition_graded_dims():
    assert Partition([2, 1]).graded_dims() == {-1: 1, 0: 1, 1: 1}
    assert Partition([4]).graded_dims() == {-3: 1, -1: 1, 1: 1, 3: 1}


# ---------------------------------------------------------------------------
# jordan type / basis
# ---------------------------------------------------------------------------

def test_jordan_type_examples():
    f = field(2)
    assert jordan_type(Matrix.zero(f, 3)).parts == (1, 1, 1)
    assert jordan_type(jordan_nilpotent(f, (4,))).parts == (4,)
    n = jordan_nilpotent(f, (3, 1))
    powers = [n ** k for k in (1, 2, 3)]
    assert [p.rank() for p in powers] == [2, 1, 0]
    assert jordan_type(n).parts == (3, 1)


def test_jordan_type_rejects_non_nilpotent():
    f = field(3)
    with pytest.raises(NotNilpotent):
        jordan_type(Matrix.identity(f, 2))


@pytest.mark.parametrize("q", (2, 3, 4))
def test_jordan_basis_reproduces_type(q):
    f = field(q)
    rng = random.Random(q * 17)
    for _ in range(30):
        dim = rng.randrange(1, 7)
        part = random.Random(rng.random()).choice(partitions_of(dim))
        n = conjugate(jordan_nilpotent(f, part.parts), random_invertible(f, dim, rng))
        chains = jordan_basis(n)
        assert sorted((len(c) for c in chains), reverse=True) == list(part.parts)
        ops = row_ops(f)
        for chain in chains:
            for k in range(len(chain) - 1):
                assert mat_vec_rows(n.rows, chain[k], ops) == chain[k + 1]
            assert mat_vec_rows(n.rows, chain[-1], ops) == 0


# ---------------------------------------------------------------------------
# dk filtration
# ---------------------------------------------------------------------------

def test_dk_filtration_zero_matrix():
    f = field(2)
    filt = dk_filtration(Matrix.zero(f, 3))
    assert filt.e == 1
    assert filt.step(0) == Subspace.full(f, 3)
    assert filt.step(1) == Subspace.zero(f, 3)
    assert filt.graded_dims() == {0: 3}


def test_dk_filtration_single_block_dim2():
    f = field(2)
    n = jordan_nilpotent(f, (2,))
    filt = dk_filtration(n)
    # top step is the image of N^(e-1), next is its kernel
    assert filt.step(1).basis_lists() == [[0, 1]]
    assert filt.step(0).basis_lists() == [[0, 1]]
    assert filt.step(-1) == Subspace.full(f, 2)


def test_dk_filtration_type21_graded_dims():
    f = field(2)
    filt = dk_filtration(jordan_nilpotent(f, (2, 1)))
    assert filt.graded_dims() == {-1: 1, 0: 1, 1: 1}


def test_boundary_identities():
    # V_{>=e-1} = im N^(e-1) and V_{>=2-e} = ker N^(e-1)
    rng = random.Random(5)
    for q in (2, 3):
        f = field(q)
        for dim in range(2, 7):
            for part in partitions_of(dim):
                n = conjugate(jordan_nilpotent(f, part.parts),
                              random_invertible(f, dim, rng))
                e = nilpotency_order(n)
                if e < 2:
                    continue
                filt = dk_filtration(n)
                pe = n ** (e - 1)
                from upieces.linalg import image, kernel
                assert filt.step(e - 1) == image(pe)
                assert filt.step(2 - e) == kernel(pe)


@pytest.mark.parametrize("q", (2, 3, 4))
def test_filtration_oracle_equivalence(q):
    # kernel-sum formula vs Jordan-basis definition
    f = field(q)
    rng = random.Random(100 + q)
    for dim in range(1, 7):
        for part in partitions_of(dim):
            n0 = jordan_nilpotent(f, part.parts)
            for _ in range(5):
                n = conjugate(n0, random_invertible(f, dim, rng))
                assert dk_filtration(n) == filtration_from_chains(n)


@pytest.mark.parametrize("q", (2, 3))
def test_graded_dims_symmetric(q):
    f = field(q)
    rng = random.Random(7 * q)
    for dim in range(1, 7):
        for part in partitions_of(dim):
            n = conjugate(jordan_nilpotent(f, part.parts),
                          random_invertible(f, dim, rng))
            filt = dk_filtration(n)
            for a in filt.window():
                assert filt.graded_dim(a) == filt.graded_dim(-a)


# ---------------------------------------------------------------------------
# graded space
# ---------------------------------------------------------------------------

def test_graded_space_zero_matrix():
    f = field(3)
    g = graded_space(Matrix.zero(f, 2))
    assert g.piece_dim(0) == 2
    assert g.primitive_dim(0) == 2
    assert g.nu.is_zero()


def test_graded_space_single_block_dim4():
    f = field(2)
    g = graded_space(jordan_nilpotent(f, (4,)))
    assert {a: g.piece_dim(a) for a in (-3, -1, 1, 3)} == {-3: 1, -1: 1, 1: 1, 3: 1}
    assert g.primitive_dim(-3) == 1
    assert g.primitive_subspace(-3) == g.piece_subspace(-3)


@pytest.mark.parametrize("q", (2, 3, 4))
def test_primitive_dims(q):
    # dim P_{1-j} = multiplicity of j; dim P_{-n} = gr dim drop
    f = field(q)
    rng = random.Random(31 * q)
    for dim in range(1, 7):
        for part in partitions_of(dim):
            n = conjugate(jordan_nilpotent(f, part.parts),
                          random_invertible(f, dim, rng))
            g = graded_space(n)
            filt = g.filtration
            for j in range(1, dim + 1):
                assert g.primitive_dim(1 - j) == part.multiplicity(j)
            for m in range(0, dim + 1):
                assert g.primitive_dim(-m) == (
                    filt.graded_dim(-m) - filt.graded_dim(-m - 2))


def test_lefschetz_on_grading():
    f = field(3)
    rng = random.Random(2)
    for part in partitions_of(5):
        n = conjugate(jordan_nilpotent(f, part.parts), random_invertible(f, 5, rng))
        g = graded_space(n)
        ops = row_ops(f)
        for m in range(0, g.e + 1):
            src = g.piece_vectors.get(-m, ())
            powers = matrix_powers(n, m)
            imgs = [mat_vec_rows(powers[m], v, ops) for v in src]
            img_space = Subspace.from_vectors(f, 5, imgs)
            assert img_space.dim() == len(src) == g.piece_dim(m)
            assert img_space == g.piece_subspace(m)


# ---------------------------------------------------------------------------
# characterization
# ---------------------------------------------------------------------------

def test_verify_characterization_positive():
    f = field(2)
    rng = random.Random(3)
    for dim in (2, 3, 4, 5):
        for part in partitions_of(dim):
            n = conjugate(jordan_nilpotent(f, part.parts),
                          random_invertible(f, dim, rng))
            assert verify_characterization(dk_filtration(n), n)


def test_verify_characterization_shifted_false():
    f = field(2)
    n = jordan_nilpotent(f, (2, 1))
    filt = dk_filtration(n)
    shifted = Filtration(f, 3, filt.e + 1,
                         {a: filt.step(a - 1) for a in range(-filt.e, filt.e + 1)},
                         check=False)
    assert verify_characterization(shifted, n) is False


def test_perturbation_keeps_filtration():
    # degree >= 3 perturbations and polynomial rescalings keep the filtration
    rng = random.Random(77)
    for q in (2, 3):
        f = field(q)
        for part in ((4,), (3, 2), (4, 2), (3, 3), (5, 1)):
            dim = sum(part)
            n = conjugate(jordan_nilpotent(f, part), random_invertible(f, dim, rng))
            filt = dk_filtration(n)
            # c1 N + c2 N^2 with c1 != 0
            for c1 in range(1, q):
                m = n.scalar_mul(c1) + (n * n).scalar_mul(rng.randrange(q))
                assert dk_filtration(m) == filt
            # plus S in E_{>=3}: verify via the characterization
            s = (n * n * n).scalar_mul(rng.randrange(1, q))
            assert dk_filtration(n + s) == filt


# ---------------------------------------------------------------------------
# commutator solver
# ---------------------------------------------------------------------------

def _commutator(t, nu):
    return t * nu - nu * t


def test_commutator_solve_zero():
    f = field(2)
    g = graded_space(jordan_nilpotent(f, (3,)))
    t = commutator_solve(g, Matrix.zero(f, 3), 0)
    assert _commutator(t, g.nu) == Matrix.zero(f, 3)


def test_commutator_solve_scaled_nu():
    f = field(2)
    n = jordan_nilpotent(f, (3,))
    g = graded_space(n)
    r = n  # nu has degree 2 = j + 2 for j = 0
    t = commutator_solve(g, r, 0)
    assert _commutator(t, n) == r


def test_commutator_solve_degree_mismatch():
    f = field(2)
    n = jordan_nilpotent(f, (3,))
    g = graded_space(n)
    with pytest.raises(DegreeMismatch):
        commutator_solve(g, n, 1)  # nu is degree 2, not 3


def _homogeneous_basis(g, deg):
    """Basis matrices of End_deg for the grading of g (as Matrix objects)."""
    f = g.field
    d = g.dim
    out = []
    for i, bi in enumerate(g.basis_rows):
        for jj, bj in enumerate(g.basis_rows):
            if g.degrees[jj] == g.degrees[i] + deg:
                images = [0] * d
                images[i] = bj
                out.append(g.matrix_from_basis_images(images))
    return out


@pytest.mark.parametrize("q", (2,))
def test_commutator_solve_exhaustive_small(q):
    # every homogeneous R of degree j+2, all partitions of dim <= 4
    f = field(q)
    for dim in range(1, 5):
        for part in partitions_of(dim):
            g = graded_space(jordan_nilpotent(f, part.parts))
            for j in range(0, 2 * g.e):
                basis = _homogeneous_basis(g, j + 2)
                if not basis:
                    continue
                # enumerate the span for small bases, else sample
                rng = random.Random(dim * 100 + j)
                combos = range(q ** len(basis)) if q ** len(basis) <= 256 else (
                    rng.randrange(q ** len(basis)) for _ in range(256))
                for code in combos:
                    r = Matrix.zero(f, dim)
                    c = code
                    for b in basis:
                        s = c % q
                        c //= q
                        if s:
                            r = r + b.scalar_mul(s)
                    t = commutator_solve(g, r, j)
                    assert _commutator(t, g.nu) == r
                    assert g.is_homogeneous(t, j)


@pytest.mark.parametrize("q", (3, 4))
def test_commutator_solve_random(q):
    f = field(q)
    rng = random.Random(q)
    for _ in range(40):
        dim = rng.randrange(2, 7)
        part = rng.choice(partitions_of(dim))
        g = graded_space(conjugate(jordan_nilpotent(f, part.parts),
                                   random_invertible(f, dim, rng)))
        j = rng.randrange(0, 3)
        basis = _homogeneous_basis(g, j + 2)
        if not basis:
            continue
        r = Matrix.zero(f, dim)
        for b in basis:
            r = r + b.scalar_mul(rng.randrange(q))
        t = commutator_solve(g, r, j)
        assert _commutator(t, g.nu) == r


# ---------------------------------------------------------------------------
# straighten
# ---------------------------------------------------------------------------

def test_straighten_zero():
    f = field(2)
    n = jordan_nilpotent(f, (3,))
    t = straighten(n, Matrix.zero(f, 3))
    one = Matrix.identity(f, 3)
    assert (one + t) * n == n * (one + t)


def test_straighten_nsquared():
    f = field(2)
    n = jordan_nilpotent(f, (3,))
    s = n * n
    t = straighten(n, s)
    one = Matrix.identity(f, 3)
    assert (one + t) * n == (n + s) * (one + t)


def test_straighten_rejects_low_degree():
    f = field(3)
    n = jordan_nilpotent(f, (3,))
    with pytest.raises(NotInE3):
        straighten(n, n)  # N itself has degree 2


def _e_ge_basis(g, min_deg):
    out = []
    for deg in range(min_deg, 2 * g.e):
        out.extend(_homogeneous_basis(g, deg))
    return out


@pytest.mark.parametrize("q", (2, 3))
def test_straighten_random(q):
    f = field(q)
    rng = random.Random(q * 1000 + 1)
    for _ in range(40):
        dim = rng.randrange(2, 7)
        part = rng.choice(partitions_of(dim))
        n = conjugate(jordan_nilpotent(f, part.parts), random_invertible(f, dim, rng))
        g = GradedSpace(n)
        basis = _e_ge_basis(g, 3)
        s = Matrix.zero(f, dim)
        for b in basis:
            s = s + b.scalar_mul(rng.randrange(q))
        t = straighten(n, s)
        one = Matrix.identity(f, dim)
        assert (one + t) * n == (n + s) * (one + t)
        # and the perturbed nilpotent has the same canonical filtration
        assert dk_filtration(n + s) == dk_filtration(n)


# ---------------------------------------------------------------------------
# lifts
# ---------------------------------------------------------------------------

def test_lift_primitive_examples():
    f = field(2)
    n = jordan_nilpotent(f, (2,))
    g = graded_space(n)
    v = g.primitive_vectors[-1][0]
    x = lift_primitive(g, v, 1)
    assert x == v
    assert mat_vec_rows((n * n).rows, x, row_ops(f)) == 0
    assert lift_primitive(g, 0, 1) == 0
    with pytest.raises(NotPrimitive):
        lift_primitive(g, g.chains[0][1], 1)  # bottom of the chain, degree +1


@pytest.mark.parametrize("q", (2, 3))
def test_lift_primitive_random(q):
    f = field(q)
    rng = random.Random(q + 13)
    for _ in range(25):
        dim = rng.randrange(1, 7)
        part = rng.choice(partitions_of(dim))
        n = conjugate(jordan_nilpotent(f, part.parts), random_invertible(f, dim, rng))
        g = GradedSpace(n)
        for m in range(0, dim):
            prim = g.primitive_vectors.get(-m, ())
            powers = matrix_powers(n, m + 1)
            filt = g.filtration
            for v in prim:
                x = lift_primitive(g, v, m)
                assert filt.step(-m).contains_vector(x)
                assert mat_vec_rows(powers[m + 1], x, row_ops(f)) == 0
            # freedom space: all alternative lifts stay valid
            free = primitive_lift_freedom(g, m)
            for y in free.basis:
                assert filt.step(1 - m).contains_vector(y)
                assert mat_vec_rows(powers[m + 1], y, row_ops(f)) == 0


def test_lift_graded_endomorphism():
    f = field(2)
    n = jordan_nilpotent(f, (2, 1))
    g = graded_space(n)
    # degree-1 map commuting with nu: send the length-1 chain top (degree 0)
    # to the bottom of the length-2 chain (degree 1)
    images = [0] * 3
    # chains: [(v, Nv), (w,)]; indices 0,1 for first chain, 2 for second
    images[2] = g.chains[0][1]
    sigma = g.matrix_from_basis_images(images)
    s = lift_graded_endomorphism(g, sigma)
    assert s * n == n * s
    assert g.is_homogeneous(s, 1)


@pytest.mark.parametrize("q", (2, 3))
def test_lift_graded_endomorphism_random(q):
    from upieces.errors import NotCommuting
    f = field(q)
    rng = random.Random(q * 3)
    found = 0
    for _ in range(60):
        dim = rng.randrange(2, 7)
        part = rng.choice(partitions_of(dim))
        n = conjugate(jordan_nilpotent(f, part.parts), random_invertible(f, dim, rng))
        g = GradedSpace(n)
        basis = _homogeneous_basis(g, 1)
        if not basis:
            continue
        sigma = Matrix.zero(f, dim)
        for b in basis:
            sigma = sigma + b.scalar_mul(rng.randrange(q))
        if sigma * n != n * sigma:
            with pytest.raises(NotCommuting):
                lift_graded_endomorphism(g, sigma)
            continue
        s = lift_graded_endomorphism(g, sigma)
        assert s * n == n * s and g.is_homogeneous(s, 1)
        found += 1
    assert found > 0
