"""Arithmetic in GF(p^m).

Elements are plain integers in ``[0, q)``. The base-p digits of an index
(least significant first) are the coefficients of the element's polynomial
representation, so index 0 is the zero element and index 1 is the one
element. Addition is digit-wise mod p; multiplication goes through
log/antilog tables built from a primitive element.
"""

from __future__ import annotations

import itertools
from functools import cached_property, lru_cache

import numpy as np

# Monic irreducible reduction polynomials, coefficients lowest degree first.
REDUCTION_POLYS: dict[tuple[int, int], tuple[int, ...]] = {
    (2, 2): (1, 1, 1),
    (2, 3): (1, 1, 0, 1),
    (2, 4): (1, 1, 0, 0, 1),
    (2, 5): (1, 0, 1, 0, 0, 1),
    (2, 6): (1, 1, 0, 0, 0, 0, 1),
    (2, 7): (1, 0, 0, 1, 0, 0, 0, 1),
    (2, 8): (1, 0, 1, 1, 1, 0, 0, 0, 1),
    (3, 2): (1, 0, 1),
    (3, 3): (1, 2, 0, 1),
    (3, 4): (2, 1, 0, 0, 1),
    (3, 5): (1, 2, 0, 0, 0, 1),
    (3, 6): (2, 1, 0, 0, 0, 0, 1),
    (5, 2): (2, 0, 1),
    (5, 3): (1, 1, 0, 1),
    (5, 4): (2, 0, 0, 0, 1),
    (5, 5): (1, 4, 0, 0, 0, 1),
    (5, 6): (2, 1, 0, 0, 0, 0, 1),
    (7, 2): (1, 0, 1),
    (7, 3): (2, 0, 0, 1),
    (7, 4): (1, 1, 0, 0, 1),
    (7, 5): (3, 1, 0, 0, 0, 1),
    (7, 6): (2, 0, 0, 0, 0, 0, 1),
}

MAX_ORDER = 1 << 16
_TABLE_LIMIT = 4096


class FieldError(ValueError):
    """Invalid field parameters or an out-of-domain element."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, int(n**0.5) + 1))


def factor_prime_power(q: int) -> tuple[int, int]:
    """Return ``(p, m)`` with ``q == p**m``; raise if q is not a prime power."""
    if q < 2:
        raise FieldError(f"field order must be >= 2, got {q}")
    for p in range(2, q + 1):
        if q % p == 0:
            break
    if not _is_prime(p):
        raise FieldError(f"{q} is not a prime power")
    m, r = 0, q
    while r % p == 0:
        r //= p
        m += 1
    if r != 1:
        raise FieldError(f"{q} is not a prime power")
    return p, m


def _poly_rem(a: list[int], b: list[int], p: int) -> list[int]:
    a = list(a)
    inv_lead = pow(b[-1], -1, p)
    while len(a) >= len(b):
        c = a[-1] * inv_lead % p
        shift = len(a) - len(b)
        for i, bi in enumerate(b):
            a[shift + i] = (a[shift + i] - c * bi) % p
        while a and a[-1] == 0:
            a.pop()
    return a


def is_irreducible(poly, p: int) -> bool:
    """Exhaustive trial division by every monic polynomial of degree <= m/2."""
    f = [int(c) % p for c in poly]
    m = len(f) - 1
    if m < 1 or f[-1] == 0:
        return False
    for d in range(1, m // 2 + 1):
        for tail in itertools.product(range(p), repeat=d):
            if not _poly_rem(f, list(tail) + [1], p):
                return False
    return True


class GaloisField:
    """The finite field GF(p^m).

    Parameters
    ----------
    q : int
        Field order. Must be a prime power no larger than 2**16.
    poly : sequence of int, optional
        Monic reduction polynomial, lowest-degree coefficient first. Defaults
        to the entry in :data:`REDUCTION_POLYS`.
    """

    def __init__(self, q: int, poly=None):
        if q > MAX_ORDER:
            raise FieldError(f"field order {q} exceeds {MAX_ORDER}")
        self.p, self.m = factor_prime_power(q)
        self.q = q
        if self.m == 1:
            self.poly = (0, 1)
        else:
            if poly is None:
                if (self.p, self.m) not in REDUCTION_POLYS:
                    raise FieldError(f"no reduction polynomial tabulated for GF({self.p}^{self.m})")
                poly = REDUCTION_POLYS[(self.p, self.m)]
            poly = tuple(int(c) % self.p for c in poly)
            if len(poly) != self.m + 1 or poly[-1] != 1:
                raise FieldError("reduction polynomial must be monic of degree m")
            if self.m <= 8 and not is_irreducible(poly, self.p):
                raise FieldError(f"{poly} is reducible over GF({self.p})")
            self.poly = poly
        self._powers = self.p ** np.arange(self.m)
        self._build_log_tables()

    def __repr__(self):
        return f"GaloisField({self.q})"

    def __eq__(self, other):
        return isinstance(other, GaloisField) and (self.q, self.poly) == (other.q, other.poly)

    def __hash__(self):
        return hash((self.q, self.poly))

    # digit-vector representation

    def digits(self, a):
        """Base-p digits of ``a`` (least significant first), shape ``(..., m)``."""
        a = np.asarray(a)
        return (a[..., None] // self._powers) % self.p

    def index(self, digits):
        """Inverse of :meth:`digits`."""
        return np.asarray(digits) @ self._powers

    def _check(self, *elems):
        for a in elems:
            arr = np.asarray(a)
            if arr.size and (arr.min() < 0 or arr.max() >= self.q):
                raise FieldError(f"element out of range for GF({self.q})")

    # arithmetic

    def _raw_mul(self, a: int, b: int) -> int:
        """Polynomial product modulo the reduction polynomial."""
        da = [int(x) for x in self.digits(a)]
        db = [int(x) for x in self.digits(b)]
        prod = [0] * (2 * self.m - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    prod[i + j] = (prod[i + j] + x * y) % self.p
        rem = _poly_rem(prod, list(self.poly), self.p) if self.m > 1 else [prod[0] % self.p]
        rem = rem + [0] * (self.m - len(rem))
        return int(sum(c * self.p**k for k, c in enumerate(rem)))

    def _build_log_tables(self):
        q = self.q
        for g in range(2, q) if q > 2 else [1]:
            exp = np.empty(q - 1, dtype=np.int64)
            x = 1
            for k in range(q - 1):
                exp[k] = x
                x = self._raw_mul(x, g)
                if x == 1 and k < q - 2:
                    break
            else:
                break
        else:  # pragma: no cover - every finite field has a primitive element
            raise FieldError("no primitive element found")
        self.primitive = g if q > 2 else 1
        log = np.zeros(q, dtype=np.int64)
        log[exp] = np.arange(q - 1)
        self._exp = np.concatenate([exp, exp])
        self._log = log

    def add(self, a, b):
        self._check(a, b)
        if self.p == 2:
            return np.bitwise_xor(a, b)
        return self.index((self.digits(a) + self.digits(b)) % self.p)

    def sub(self, a, b):
        self._check(a, b)
        if self.p == 2:
            return np.bitwise_xor(a, b)
        return self.index((self.digits(a) - self.digits(b)) % self.p)

    def neg(self, a):
        return self.sub(np.zeros_like(np.asarray(a)), a)

    def mul(self, a, b):
        self._check(a, b)
        a, b = np.asarray(a), np.asarray(b)
        out = self._exp[self._log[a] + self._log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def inv(self, a):
        self._check(a)
        a = np.asarray(a)
        if np.any(a == 0):
            raise FieldError("zero has no multiplicative inverse")
        return self._exp[(self.q - 1 - self._log[a]) % (self.q - 1)]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    # lookup tables used by the message operators and the decoder

    @cached_property
    def add_table(self) -> np.ndarray:
        """``add_table[a, b] == a + b``."""
        self._require_tables()
        e = np.arange(self.q)
        return np.asarray(self.add(e[:, None], e[None, :]), dtype=np.int64)

    @cached_property
    def sub_table(self) -> np.ndarray:
        """``sub_table[a, b] == a - b``."""
        self._require_tables()
        e = np.arange(self.q)
        return np.asarray(self.sub(e[:, None], e[None, :]), dtype=np.int64)

    @cached_property
    def mul_table(self) -> np.ndarray:
        self._require_tables()
        e = np.arange(self.q)
        return np.asarray(self.mul(e[:, None], e[None, :]), dtype=np.int64)

    @cached_property
    def neg_table(self) -> np.ndarray:
        return self.sub_table[0]

    @cached_property
    def inv_table(self) -> np.ndarray:
        """Multiplicative inverses; entry 0 is set to 0 as a placeholder."""
        t = np.zeros(self.q, dtype=np.int64)
        t[1:] = self.inv(np.arange(1, self.q))
        return t

    def _require_tables(self):
        if self.q > _TABLE_LIMIT:
            raise FieldError(f"lookup tables are limited to q <= {_TABLE_LIMIT}")


@lru_cache(maxsize=None)
def field(q: int) -> GaloisField:
    """Shared default-polynomial instance of GF(q)."""
    return GaloisField(q)
