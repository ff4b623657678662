import pytest

from upieces.errors import CharMismatch, UnsupportedField
from upieces.ff import SUPPORTED_Q, FieldElement, ff_make, ff_sqrt, field


@pytest.mark.parametrize("q", SUPPORTED_Q)
def test_field_axioms_exhaustive(q):
    f = field(q)
    els = list(f.elements())
    for a in els:
        assert f.add(a, 0) == a
        assert f.mul(a, 1) == a
        assert f.add(a, f.neg(a)) == 0
        for b in els:
            assert f.add(a, b) == f.add(b, a)
            assert f.mul(a, b) == f.mul(b, a)
            for c in els:
                assert f.add(f.add(a, b), c) == f.add(a, f.add(b, c))
                assert f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))
                assert f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))


@pytest.mark.parametrize("q", SUPPORTED_Q)
def test_inverses_exhaustive(q):
    f = field(q)
    for a in range(1, q):
        assert f.mul(a, f.inv(a)) == 1


@pytest.mark.parametrize("q", SUPPORTED_Q)
def test_frobenius_additive(q):
    f = field(q)
    p = f.p
    for a in f.elements():
        for b in f.elements():
            lhs = f.pow(f.add(a, b), p)
            rhs = f.add(f.pow(a, p), f.pow(b, p))
            assert lhs == rhs


@pytest.mark.parametrize("q", [2, 4, 8, 16])
def test_sqrt_char2(q):
    f = field(q)
    for a in f.elements():
        r = f.sqrt(a)
        assert f.mul(r, r) == a
        assert r == f.pow(a, q // 2) or q == 2  # a^(q/2) formula
        if q > 2:
            assert r == f.pow(a, q // 2)


def test_sqrt_rejected_in_odd_characteristic():
    f = field(3)
    with pytest.raises(CharMismatch):
        f.sqrt(1)
    with pytest.raises(CharMismatch):
        ff_sqrt(field(9).element(2))


def test_make_rejects_non_prime_powers():
    for q in (0, 1, 6, 10, 12, 14, 15, 18, 32, 25, 49, 11, 13):
        with pytest.raises(UnsupportedField):
            ff_make(q)


def test_fixed_moduli():
    assert field(4).modulus == (1, 1, 1)      # t^2 + t + 1
    assert field(8).modulus == (1, 1, 0, 1)   # t^3 + t + 1
    assert field(9).modulus == (1, 0, 1)      # t^2 + 1
    assert field(16).modulus == (1, 1, 0, 0, 1)  # t^4 + t + 1


def test_f4_sqrt_example():
    # in F_4 with t the residue class: sqrt(t) = t^2 = t + 1
    f = field(4)
    t = 2  # encoding of the residue class t
    t_sq = f.mul(t, t)
    assert f.sqrt(t) == t_sq
    assert f.mul(f.sqrt(t), f.sqrt(t)) == t


def test_element_value_semantics():
    f = field(5)
    a = f.element(3)
    b = f.element(4)
    assert (a + b).value == 2
    assert (a * b).value == 2
    assert (-a).value == 2
    assert (a - b).value == 4
    assert a.inverse() * a == f.one()
    assert a == FieldElement(3, field(5))
    assert hash(a) == hash(FieldElement(3, field(5)))
    assert a != field(7).element(3)


def test_element_wire_encoding_is_value():
    f = field(9)
    for v in f.elements():
        assert f.element(v).value == v
