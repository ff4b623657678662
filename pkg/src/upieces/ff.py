"""Exact arithmetic in small finite fields F_q, q = p^k <= 16.

Elements are encoded as integers in [0, q): the base-p digits of the
integer, little-endian, are the coefficients of a polynomial in the
residue class ring F_p[t]/(modulus).  The moduli are fixed so that the
encoding is stable across runs:

    F_4  = F_2[t]/(t^2 + t + 1)
    F_8  = F_2[t]/(t^3 + t + 1)
    F_9  = F_3[t]/(t^2 + 1)
    F_16 = F_2[t]/(t^4 + t + 1)

All operation tables are precomputed at construction, so arithmetic on
raw integer encodings is a table lookup.  In characteristic 2 the
Frobenius a -> a^2 is a bijection and square roots are exact.
"""

from __future__ import annotations

from .errors import CharMismatch, DimensionMismatch, UnsupportedField

# Fixed irreducible moduli, little-endian coefficient tuples (constant first).
_MODULI = {
    4: (1, 1, 1),
    8: (1, 1, 0, 1),
    9: (1, 0, 1),
    16: (1, 1, 0, 0, 1),
}

_SUPPORTED_PRIMES = (2, 3, 5, 7)


def _factor_prime_power(q):
    """Return (p, k) with q = p^k for p in the supported primes, else None."""
    if q < 2:
        return None
    for p in _SUPPORTED_PRIMES:
        if q % p == 0:
            k = 0
            m = q
            while m % p == 0:
                m //= p
                k += 1
            return (p, k) if m == 1 else None
    return None


def _poly_mul_mod(a, b, modulus, p):
    """Multiply digit tuples a, b in F_p[t] and reduce modulo `modulus`."""
    k = len(modulus) - 1
    prod = [0] * (len(a) + len(b) - 1) if a and b else [0]
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    # reduce: modulus is monic of degree k
    for d in range(len(prod) - 1, k - 1, -1):
        c = prod[d]
        if c:
            prod[d] = 0
            for j in range(k + 1):
                prod[d - k + j] = (prod[d - k + j] - c * modulus[j]) % p
    return tuple(prod[:k]) + (0,) * (k - len(prod[:k]))


def _digits(value, p, k):
    out = []
    for _ in range(k):
        out.append(value % p)
        value //= p
    return tuple(out)


def _undigits(digits, p):
    v = 0
    for d in reversed(digits):
        v = v * p + d
    return v


def _is_irreducible(modulus, p):
    """Brute-force irreducibility test for monic polynomials of degree <= 4."""
    k = len(modulus) - 1
    if k == 1:
        return True
    # no roots in F_p kills all reducible cases for k in {2, 3}
    for r in range(p):
        acc = 0
        for c in reversed(modulus):
            acc = (acc * r + c) % p
        if acc == 0:
            return False
    if k <= 3:
        return True
    # k = 4: additionally exclude products of two irreducible quadratics
    for b in range(p):
        for c in range(p):
            quad = (c, b, 1)
            if any((r * r + b * r + c) % p == 0 for r in range(p)):
                continue
            rem = _poly_divmod_rem(modulus, quad, p)
            if all(x == 0 for x in rem):
                return False
    return True


def _poly_divmod_rem(num, den, p):
    num = list(num)
    dd = len(den) - 1
    inv_lead = pow(den[-1], p - 2, p)
    for i in range(len(num) - 1, dd - 1, -1):
        c = (num[i] * inv_lead) % p
        if c:
            for j in range(dd + 1):
                num[i - dd + j] = (num[i - dd + j] - c * den[j]) % p
    return num[:dd]


class FieldSpec:
    """The finite field F_q with its fixed modulus and operation tables.

    Immutable after construction; all methods are pure functions on the
    integer element encodings.
    """

    __slots__ = (
        "p", "k", "q", "modulus",
        "add_table", "mul_table", "neg_table", "inv_table", "sqrt_table",
        "_frozen",
    )

    def __init__(self, q):
        pk = _factor_prime_power(q)
        if pk is None or q > 16:
            raise UnsupportedField(
                f"q={q} is not a supported prime power (p in {_SUPPORTED_PRIMES}, q <= 16)")
        p, k = pk
        self.p = p
        self.k = k
        self.q = q
        if k == 1:
            self.modulus = (0, 1)  # t, unused for prime fields
        else:
            self.modulus = _MODULI[q]
            if not _is_irreducible(self.modulus, p):
                raise UnsupportedField(f"modulus for q={q} is not irreducible")

        add = [[0] * q for _ in range(q)]
        mul = [[0] * q for _ in range(q)]
        for a in range(q):
            da = _digits(a, p, k)
            for b in range(q):
                db = _digits(b, p, k)
                add[a][b] = _undigits(tuple((x + y) % p for x, y in zip(da, db)), p)
                if k == 1:
                    mul[a][b] = (a * b) % p
                else:
                    mul[a][b] = _undigits(_poly_mul_mod(da, db, self.modulus, p), p)
        self.add_table = tuple(tuple(r) for r in add)
        self.mul_table = tuple(tuple(r) for r in mul)
        self.neg_table = tuple(
            _undigits(tuple((-x) % p for x in _digits(a, p, k)), p) for a in range(q))
        inv = [0] * q
        for a in range(1, q):
            for b in range(1, q):
                if self.mul_table[a][b] == 1:
                    inv[a] = b
                    break
            else:
                raise UnsupportedField(f"element {a} has no inverse in F_{q}")
        self.inv_table = tuple(inv)
        if p == 2:
            # invert the squaring permutation
            sq = [0] * q
            for a in range(q):
                sq[self.mul_table[a][a]] = a
            self.sqrt_table = tuple(sq)
        else:
            self.sqrt_table = None
        self._frozen = True

    def __setattr__(self, name, value):
        if getattr(self, "_frozen", False):
            raise AttributeError("FieldSpec is immutable")
        object.__setattr__(self, name, value)

    def __repr__(self):
        return f"FieldSpec(q={self.q})"

    def __eq__(self, other):
        return isinstance(other, FieldSpec) and other.q == self.q

    def __hash__(self):
        return hash(("FieldSpec", self.q))

    # -- arithmetic on raw integer encodings --------------------------------

    def add(self, a, b):
        return self.add_table[a][b]

    def sub(self, a, b):
        return self.add_table[a][self.neg_table[b]]

    def mul(self, a, b):
        return self.mul_table[a][b]

    def neg(self, a):
        return self.neg_table[a]

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError(f"0 has no inverse in F_{self.q}")
        return self.inv_table[a]

    def sqrt(self, a):
        """The unique square root, defined in characteristic 2 only."""
        if self.p != 2:
            raise CharMismatch(f"square roots are only provided for p=2, got p={self.p}")
        return self.sqrt_table[a]

    def pow(self, a, n):
        r = 1
        for _ in range(n):
            r = self.mul_table[r][a]
        return r

    def elements(self):
        """All element encodings, 0 .. q-1."""
        return range(self.q)

    def element(self, value):
        return FieldElement(value % self.q if value >= 0 else value % self.q, self)

    def one(self):
        return FieldElement(1, self)

    def zero(self):
        return FieldElement(0, self)


class FieldElement:
    """A field element as a value type: compared by (value, q)."""

    __slots__ = ("value", "field")

    def __init__(self, value, field):
        if not 0 <= value < field.q:
            raise ValueError(f"encoding {value} out of range for F_{field.q}")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "field", field)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.field.q != self.field.q:
                raise DimensionMismatch("elements of different fields")
            return other.value
        if isinstance(other, int):
            return other % self.field.q
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        return FieldElement(self.field.add_table[self.value][v], self.field)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        return FieldElement(self.field.sub(self.value, v), self.field)

    def __neg__(self):
        return FieldElement(self.field.neg_table[self.value], self.field)

    def __mul__(self, other):
        v = self._coerce(other)
        return FieldElement(self.field.mul_table[self.value][v], self.field)

    __rmul__ = __mul__

    def __pow__(self, n):
        return FieldElement(self.field.pow(self.value, n), self.field)

    def inverse(self):
        return FieldElement(self.field.inv(self.value), self.field)

    def sqrt(self):
        return FieldElement(self.field.sqrt(self.value), self.field)

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.value == other.value and self.field.q == other.field.q
        if isinstance(other, int):
            return self.value == other % self.field.q
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.field.q))

    def __repr__(self):
        return f"F{self.field.q}({self.value})"


_CACHE = {}


def field(q):
    """Return the supported field F_q (cached; FieldSpec is immutable)."""
    spec = _CACHE.get(q)
    if spec is None:
        spec = FieldSpec(q)
        _CACHE[q] = spec
    return spec


# spec-facing alias
ff_make = field


def ff_sqrt(a: FieldElement) -> FieldElement:
    """Unique square root of a field element in characteristic 2."""
    return a.sqrt()


SUPPORTED_Q = (2, 3, 4, 5, 7, 8, 9, 16)
