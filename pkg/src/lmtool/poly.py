"""Sparse multivariate polynomials and Groebner basis computations.

Coefficients live in one of four small field implementations: the
rationals, a real quadratic extension of the rationals, a prime field,
or a binary field GF(2^k).  Field elements are plain Python values
(Fraction, pairs of Fractions, or ints) and the field object supplies
the arithmetic, which keeps polynomial storage compact.

Monomials are exponent tuples ordered by degree reverse lexicographic
order.  Groebner bases are computed with Buchberger's algorithm using
the product and chain criteria; the number of S-pair reductions is
capped by the LMTOOL_BUDGET environment variable so runaway inputs
fail loudly instead of hanging.
"""

from __future__ import annotations

import heapq
import json
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

DEFAULT_BUDGET = 1_000_000

_VAR_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class BudgetExceeded(RuntimeError):
    """Raised when a Groebner run exceeds its S-pair reduction budget."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class RationalField:
    """The field of rational numbers with Fraction elements."""

    char = 0
    name = "QQ"

    def coerce(self, x) -> Fraction:
        if isinstance(x, Fraction):
            return x
        if isinstance(x, int):
            return Fraction(x)
        if isinstance(x, str):
            return Fraction(x)
        raise TypeError(f"cannot coerce {x!r} into QQ")

    zero = Fraction(0)
    one = Fraction(1)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return 1 / a

    def fmt(self, a) -> str:
        return str(a)

    def __eq__(self, other):
        return isinstance(other, RationalField)

    def __hash__(self):
        return hash("QQ")

    def __repr__(self):
        return "QQ"


QQ = RationalField()


class QuadraticField:
    """QQ(sqrt(d)) for a nonsquare integer d, elements (a, b) = a + b*sqrt(d)."""

    char = 0

    def __init__(self, d: int):
        if d in (0, 1):
            raise ValueError("d must not be a square")
        r = int(abs(d) ** 0.5)
        if d > 0 and r * r == d:
            raise ValueError("d must not be a square")
        self.d = d
        self.name = f"QQ(sqrt({d}))"
        self.zero = (Fraction(0), Fraction(0))
        self.one = (Fraction(1), Fraction(0))

    def coerce(self, x):
        if isinstance(x, tuple) and len(x) == 2:
            return (Fraction(x[0]), Fraction(x[1]))
        if isinstance(x, (int, Fraction, str)):
            return (Fraction(x), Fraction(0))
        raise TypeError(f"cannot coerce {x!r} into {self.name}")

    def sqrt_gen(self):
        return (Fraction(0), Fraction(1))

    def add(self, a, b):
        return (a[0] + b[0], a[1] + b[1])

    def sub(self, a, b):
        return (a[0] - b[0], a[1] - b[1])

    def mul(self, a, b):
        return (a[0] * b[0] + self.d * a[1] * b[1], a[0] * b[1] + a[1] * b[0])

    def neg(self, a):
        return (-a[0], -a[1])

    def inv(self, a):
        n = a[0] * a[0] - self.d * a[1] * a[1]
        if n == 0:
            if a == self.zero:
                raise ZeroDivisionError("inverse of zero")
            raise ZeroDivisionError("element has zero conjugate norm")
        return (a[0] / n, -a[1] / n)

    def fmt(self, a) -> str:
        if a[1] == 0:
            return str(a[0])
        if a[0] == 0:
            inner = f"{a[1]}*s{self.d}" if a[1] != 1 else f"s{self.d}"
            return inner
        tail = f"{a[1]}*s{self.d}" if a[1] not in (1, -1) else ("s" if a[1] == 1 else "-s") + str(self.d)
        sep = "+" if not tail.startswith("-") else ""
        return f"({a[0]}{sep}{tail})"

    def __eq__(self, other):
        return isinstance(other, QuadraticField) and other.d == self.d

    def __hash__(self):
        return hash(("QuadraticField", self.d))

    def __repr__(self):
        return self.name


class PrimeField:
    """GF(p) for an odd or even prime p below 2^31."""

    def __init__(self, p: int):
        if not (2 <= p < 2**31) or not _is_prime(p):
            raise ValueError(f"{p} is not a prime below 2^31")
        self.p = p
        self.char = p
        self.name = f"GF({p})"
        self.zero = 0
        self.one = 1 % p

    def coerce(self, x) -> int:
        if isinstance(x, int):
            return x % self.p
        if isinstance(x, Fraction):
            den = x.denominator % self.p
            if den == 0:
                raise ZeroDivisionError(f"denominator of {x} vanishes mod {self.p}")
            return x.numerator % self.p * pow(den, self.p - 2, self.p) % self.p
        if isinstance(x, str):
            return self.coerce(Fraction(x))
        raise TypeError(f"cannot coerce {x!r} into {self.name}")

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return a * b % self.p

    def neg(self, a):
        return -a % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, self.p - 2, self.p)

    def fmt(self, a) -> str:
        return str(a)

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self):
        return hash(("PrimeField", self.p))

    def __repr__(self):
        return self.name


def _gf2_mod(a: int, f: int) -> int:
    fd = f.bit_length() - 1
    while a.bit_length() - 1 >= fd and a:
        a ^= f << (a.bit_length() - 1 - fd)
    return a


def _gf2_mulmod(a: int, b: int, f: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
    return _gf2_mod(r, f)


def _gf2_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _gf2_mod(a, b)
    return a


def _gf2_irreducible(f: int, k: int) -> bool:
    x = 0b10
    s = x
    for _ in range(k):
        s = _gf2_mulmod(s, s, f)
    if s != _gf2_mod(x, f):
        return False
    d = k
    primes = set()
    m, q = k, 2
    while q * q <= m:
        if m % q == 0:
            primes.add(q)
            while m % q == 0:
                m //= q
        q += 1
    if m > 1:
        primes.add(m)
    for q in primes:
        s = x
        for _ in range(k // q):
            s = _gf2_mulmod(s, s, f)
        if _gf2_gcd(s ^ x, f) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def _binary_modulus(k: int) -> int:
    for low in range(1, 1 << k, 2):
        f = (1 << k) | low
        if _gf2_irreducible(f, k):
            return f
    raise RuntimeError(f"no irreducible polynomial of degree {k}")


class BinaryField:
    """GF(2^k) with elements stored as k-bit integers."""

    char = 2

    def __init__(self, k: int):
        if not 1 <= k <= 16:
            raise ValueError("k must lie in 1..16")
        self.k = k
        self.modulus = _binary_modulus(k)
        self.name = f"GF(2^{k})" if k > 1 else "GF(2)"
        self.zero = 0
        self.one = 1

    @property
    def order(self) -> int:
        return 1 << self.k

    def coerce(self, x) -> int:
        if isinstance(x, bool):
            return int(x)
        if isinstance(x, int):
            if 0 <= x < (1 << self.k):
                return x
            return x % 2
        if isinstance(x, Fraction):
            if x.denominator % 2 == 0:
                raise ZeroDivisionError(f"denominator of {x} is even")
            return x.numerator % 2
        if isinstance(x, str):
            return self.coerce(Fraction(x))
        raise TypeError(f"cannot coerce {x!r} into {self.name}")

    def gen(self) -> int:
        return 0b10 if self.k > 1 else 1

    def elements(self) -> range:
        return range(1 << self.k)

    def add(self, a, b):
        return a ^ b

    sub = add

    def mul(self, a, b):
        return _gf2_mulmod(a, b, self.modulus)

    def neg(self, a):
        return a

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return self._pow(a, (1 << self.k) - 2)

    def _pow(self, a: int, e: int) -> int:
        r = self.one
        while e:
            if e & 1:
                r = self.mul(r, a)
            a = self.mul(a, a)
            e >>= 1
        return r

    def sqrt(self, a: int) -> int:
        """Squaring is bijective in characteristic 2; invert it."""
        return self._pow(a, 1 << (self.k - 1))

    def fmt(self, a) -> str:
        return str(a)

    def __eq__(self, other):
        return isinstance(other, BinaryField) and other.k == self.k

    def __hash__(self):
        return hash(("BinaryField", self.k))

    def __repr__(self):
        return self.name


GF2 = BinaryField(1)


def field_to_json(field) -> dict:
    if isinstance(field, RationalField):
        return {"kind": "QQ"}
    if isinstance(field, QuadraticField):
        return {"kind": "quad", "d": field.d}
    if isinstance(field, PrimeField):
        return {"kind": "GFp", "p": field.p}
    if isinstance(field, BinaryField):
        return {"kind": "GF2k", "k": field.k}
    raise TypeError(f"unknown field {field!r}")


def field_from_json(data: Mapping) -> object:
    kind = data["kind"]
    if kind == "QQ":
        return QQ
    if kind == "quad":
        return QuadraticField(int(data["d"]))
    if kind == "GFp":
        return PrimeField(int(data["p"]))
    if kind == "GF2k":
        return BinaryField(int(data["k"]))
    raise ValueError(f"unknown field kind {kind!r}")


# ---------------------------------------------------------------------------
# monomial helpers

Monomial = tuple


def drl_key(exps: Monomial):
    """Sort key whose max agrees with degree reverse lexicographic order."""
    return (sum(exps), tuple(-e for e in reversed(exps)))


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def mono_divides(a: Monomial, b: Monomial) -> bool:
    return all(x <= y for x, y in zip(a, b))


def mono_div(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x - y for x, y in zip(a, b))


def mono_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(max(x, y) for x, y in zip(a, b))


@dataclass(frozen=True)
class PolyRing:
    """A polynomial ring with named generators over a coefficient field."""

    field: object
    gens: tuple

    def __post_init__(self):
        object.__setattr__(self, "gens", tuple(self.gens))
        if len(set(self.gens)) != len(self.gens):
            raise ValueError("duplicate generator names")
        for name in self.gens:
            if not _VAR_RE.match(name):
                raise ValueError(f"bad variable name {name!r}")

    @property
    def nvars(self) -> int:
        return len(self.gens)

    def gen_index(self, name: str) -> int:
        try:
            return self.gens.index(name)
        except ValueError:
            raise KeyError(f"{name!r} is not a generator of this ring") from None

    def zero(self) -> "Poly":
        return Poly(self, {})

    def one(self) -> "Poly":
        return self.const(self.field.one)

    def const(self, c) -> "Poly":
        c = self.field.coerce(c)
        if c == self.field.zero:
            return Poly(self, {})
        return Poly(self, {(0,) * self.nvars: c})

    def gen(self, name: str) -> "Poly":
        i = self.gen_index(name)
        exps = [0] * self.nvars
        exps[i] = 1
        return Poly(self, {tuple(exps): self.field.one})

    def monomial(self, exps: Sequence, coeff=None) -> "Poly":
        exps = tuple(int(e) for e in exps)
        if len(exps) != self.nvars or any(e < 0 for e in exps):
            raise ValueError("bad exponent vector")
        c = self.field.one if coeff is None else self.field.coerce(coeff)
        if c == self.field.zero:
            return self.zero()
        return Poly(self, {exps: c})

    def poly(self, terms: Mapping) -> "Poly":
        out = {}
        for exps, c in terms.items():
            c = self.field.coerce(c)
            if c != self.field.zero:
                out[tuple(exps)] = c
        return Poly(self, out)

    def extend(self, *names: str) -> "PolyRing":
        return PolyRing(self.field, self.gens + tuple(names))

    def lift(self, p: "Poly") -> "Poly":
        """Reindex a polynomial from a ring whose generators are a subset."""
        if p.ring == self:
            return p
        idx = [self.gen_index(n) for n in p.ring.gens]
        out = {}
        for exps, c in p.terms.items():
            new = [0] * self.nvars
            for i, e in zip(idx, exps):
                new[i] = e
            out[tuple(new)] = c
        return Poly(self, out)

    def parse(self, text: str) -> "Poly":
        return _parse_poly(self, text)

    def __repr__(self):
        return f"PolyRing({self.field!r}, {list(self.gens)})"


class Poly:
    """Immutable sparse polynomial keyed by exponent tuples."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: PolyRing, terms: dict):
        self.ring = ring
        self.terms = terms

    # -- structure -------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def lm(self) -> Monomial:
        if not self.terms:
            raise ValueError("zero polynomial has no leading monomial")
        return max(self.terms, key=drl_key)

    def lc(self):
        return self.terms[self.lm()]

    def lt(self):
        m = self.lm()
        return m, self.terms[m]

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def constant_term(self):
        zero_m = (0,) * self.ring.nvars
        return self.terms.get(zero_m, self.ring.field.zero)

    def monic(self) -> "Poly":
        if not self.terms:
            return self
        f = self.ring.field
        c = self.lc()
        if c == f.one:
            return self
        ic = f.inv(c)
        return Poly(self.ring, {m: f.mul(ic, v) for m, v in self.terms.items()})

    def coeff_of(self, exps: Sequence):
        return self.terms.get(tuple(exps), self.ring.field.zero)

    def degree_in(self, name: str) -> int:
        i = self.ring.gen_index(name)
        return max((e[i] for e in self.terms), default=-1)

    def variables(self) -> tuple:
        used = set()
        for e in self.terms:
            for i, k in enumerate(e):
                if k:
                    used.add(i)
        return tuple(self.ring.gens[i] for i in sorted(used))

    # -- arithmetic ------------------------------------------------------

    def _check(self, other: "Poly"):
        if self.ring != other.ring:
            raise ValueError("polynomials from different rings")

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = self.ring.const(other)
        self._check(other)
        f = self.ring.field
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = f.add(out.get(m, f.zero), c)
            if s == f.zero:
                out.pop(m, None)
            else:
                out[m] = s
        return Poly(self.ring, out)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        f = self.ring.field
        return Poly(self.ring, {m: f.neg(c) for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = self.ring.const(other)
        return self.__add__(other.__neg__())

    def __rsub__(self, other):
        return self.ring.const(other).__sub__(self)

    def __mul__(self, other):
        if not isinstance(other, Poly):
            f = self.ring.field
            c = f.coerce(other)
            if c == f.zero:
                return self.ring.zero()
            return Poly(self.ring, {m: f.mul(c, v) for m, v in self.terms.items()})
        self._check(other)
        f = self.ring.field
        out = {}
        small, big = (self.terms, other.terms)
        if len(small) > len(big):
            small, big = big, small
        for m1, c1 in small.items():
            for m2, c2 in big.items():
                m = mono_mul(m1, m2)
                s = f.add(out.get(m, f.zero), f.mul(c1, c2))
                if s == f.zero:
                    out.pop(m, None)
                else:
                    out[m] = s
        return Poly(self.ring, out)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative power of a polynomial")
        result = self.ring.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.ring == other.ring and self.terms == other.terms
        return self.__sub__(other).is_zero()

    def __hash__(self):
        return hash((self.ring, tuple(sorted(self.terms.items(), key=lambda t: drl_key(t[0])))))

    # -- display ---------------------------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        f = self.ring.field
        parts = []
        for m in sorted(self.terms, key=drl_key, reverse=True):
            c = self.terms[m]
            factors = []
            for name, e in zip(self.ring.gens, m):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            cs = f.fmt(c)
            if not factors:
                parts.append(cs)
            elif cs == "1":
                parts.append("*".join(factors))
            elif cs == "-1":
                parts.append("-" + "*".join(factors))
            else:
                parts.append(cs + "*" + "*".join(factors))
        out = parts[0]
        for p in parts[1:]:
            out += p if p.startswith("-") else "+" + p
        return out

    def __repr__(self):
        return f"<Poly {self}>"


# ---------------------------------------------------------------------------
# parsing

def _parse_poly(ring: PolyRing, text: str) -> Poly:
    s = text.replace(" ", "").replace("**", "^")
    if not s:
        raise ValueError("empty polynomial text")
    if any(ch in s for ch in "()"):
        raise ValueError("parentheses are not supported in polynomial text")
    # split into signed terms
    terms = []
    sign = 1
    cur = ""
    for ch in s:
        if ch in "+-":
            if cur:
                terms.append((sign, cur))
                sign = 1
                cur = ""
            if ch == "-":
                sign = -sign
        else:
            cur += ch
    if not cur:
        raise ValueError(f"dangling sign in {text!r}")
    terms.append((sign, cur))

    f = ring.field
    result = ring.zero()
    num_re = re.compile(r"^\d+(/\d+)?$")
    var_re = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(\^(\d+))?$")
    for sign, body in terms:
        coeff = Fraction(sign)
        exps = [0] * ring.nvars
        for factor in body.split("*"):
            if not factor:
                raise ValueError(f"empty factor in {text!r}")
            if num_re.match(factor):
                coeff *= Fraction(factor)
                continue
            m = var_re.match(factor)
            if not m:
                raise ValueError(f"bad factor {factor!r} in {text!r}")
            i = ring.gen_index(m.group(1))
            exps[i] += int(m.group(3)) if m.group(3) else 1
        c = f.coerce(coeff)
        result = result + Poly(ring, {tuple(exps): c} if c != f.zero else {})
    return result


# ---------------------------------------------------------------------------
# division and Buchberger

def reduce_poly(f: Poly, basis: Sequence[Poly]) -> Poly:
    """Full normal form of f modulo an ordered list of divisors."""
    if not basis:
        return f
    ring = f.ring
    fld = ring.field
    divisors = [(g.lm(), g) for g in basis if not g.is_zero()]
    work = dict(f.terms)
    remainder = {}
    while work:
        m = max(work, key=drl_key)
        c = work.pop(m)
        hit = None
        for lm, g in divisors:
            if mono_divides(lm, m):
                hit = (lm, g)
                break
        if hit is None:
            remainder[m] = c
            continue
        lm, g = hit
        shift = mono_div(m, lm)
        scale = fld.mul(c, fld.inv(g.terms[lm]))
        for gm, gc in g.terms.items():
            if gm == lm:
                continue
            key = mono_mul(gm, shift)
            s = fld.sub(work.get(key, fld.zero), fld.mul(scale, gc))
            if s == fld.zero:
                work.pop(key, None)
            else:
                work[key] = s
    return Poly(ring, remainder)


def _spoly(f: Poly, g: Poly) -> Poly:
    ring = f.ring
    fld = ring.field
    lf, cf = f.lt()
    lg, cg = g.lt()
    l = mono_lcm(lf, lg)
    mf = Poly(ring, {mono_div(l, lf): fld.inv(cf)})
    mg = Poly(ring, {mono_div(l, lg): fld.inv(cg)})
    return mf * f - mg * g


def _budget() -> int:
    raw = os.environ.get("LMTOOL_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        val = int(raw)
    except ValueError as exc:
        raise ValueError(f"LMTOOL_BUDGET must be an integer, got {raw!r}") from exc
    if val <= 0:
        raise ValueError("LMTOOL_BUDGET must be positive")
    return val


def groebner(gens: Iterable[Poly], budget: int = None) -> tuple:
    """Reduced Groebner basis under degrevlex, deterministically ordered."""
    polys = [g for g in gens if not g.is_zero()]
    if not polys:
        return ()
    ring = polys[0].ring
    for g in polys:
        if g.ring != ring:
            raise ValueError("generators from different rings")
    if budget is None:
        budget = _budget()

    G = []
    for g in sorted((p.monic() for p in polys), key=lambda p: drl_key(p.lm())):
        if all(g.terms != h.terms for h in G):
            G.append(g)

    pairs = []
    pending = set()

    def push(i: int, j: int):
        key = (i, j) if i < j else (j, i)
        lcm = mono_lcm(G[key[0]].lm(), G[key[1]].lm())
        heapq.heappush(pairs, (drl_key(lcm), key))
        pending.add(key)

    for i in range(len(G)):
        for j in range(i + 1, len(G)):
            push(i, j)

    spent = 0
    while pairs:
        _, (i, j) = heapq.heappop(pairs)
        if (i, j) not in pending:
            continue
        pending.discard((i, j))
        li, lj = G[i].lm(), G[j].lm()
        lcm = mono_lcm(li, lj)
        # product criterion: coprime leading monomials reduce to zero
        if lcm == mono_mul(li, lj):
            continue
        # chain criterion
        skip = False
        for k in range(len(G)):
            if k in (i, j):
                continue
            if not mono_divides(G[k].lm(), lcm):
                continue
            pik = (i, k) if i < k else (k, i)
            pjk = (j, k) if j < k else (k, j)
            if pik not in pending and pjk not in pending:
                skip = True
                break
        if skip:
            continue
        spent += 1
        if spent > budget:
            raise BudgetExceeded(
                f"Groebner budget of {budget} S-pair reductions exceeded"
            )
        rem = reduce_poly(_spoly(G[i], G[j]), G)
        if rem.is_zero():
            continue
        G.append(rem.monic())
        new = len(G) - 1
        for k in range(new):
            push(k, new)

    # minimalize: drop members whose leading monomial another one divides
    keep = []
    lms = [g.lm() for g in G]
    for i, g in enumerate(G):
        dominated = any(
            j != i and mono_divides(lms[j], lms[i]) and (lms[j] != lms[i] or j < i)
            for j in range(len(G))
        )
        if not dominated:
            keep.append(g)
    # tail-reduce for the unique reduced basis
    reduced = []
    for i, g in enumerate(keep):
        others = keep[:i] + keep[i + 1 :]
        reduced.append(reduce_poly(g, others).monic())
    reduced = [g for g in reduced if not g.is_zero()]
    reduced.sort(key=lambda p: drl_key(p.lm()))
    return tuple(reduced)


def exact_div(f: Poly, g: Poly) -> Poly:
    """Quotient f/g when g divides f exactly; raises ValueError otherwise."""
    if g.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    ring = f.ring
    fld = ring.field
    lg, cg = g.lt()
    icg = fld.inv(cg)
    work = f
    quotient = ring.zero()
    while not work.is_zero():
        m = work.lm()
        if not mono_divides(lg, m):
            raise ValueError("polynomial division is not exact")
        qt = Poly(ring, {mono_div(m, lg): fld.mul(work.terms[m], icg)})
        quotient = quotient + qt
        work = work - qt * g
    return quotient


def evaluate(p: Poly, assignment: Mapping):
    """Evaluate a polynomial at field values given for every used variable."""
    fld = p.ring.field
    vals = {p.ring.gen_index(name): fld.coerce(v) for name, v in assignment.items()}
    total = fld.zero
    for exps, c in p.terms.items():
        acc = c
        for i, e in enumerate(exps):
            if e == 0:
                continue
            if i not in vals:
                raise KeyError(f"no value for variable {p.ring.gens[i]!r}")
            v = vals[i]
            for _ in range(e):
                acc = fld.mul(acc, v)
        total = fld.add(total, acc)
    return total


def poly_det(rows: Sequence[Sequence[Poly]]) -> Poly:
    """Determinant of a square matrix of polynomials, by memoized expansion."""
    n = len(rows)
    if n == 0:
        raise ValueError("empty matrix")
    ring = rows[0][0].ring
    for r in rows:
        if len(r) != n:
            raise ValueError("matrix is not square")
    memo = {}

    def rec(mask: int) -> Poly:
        if mask == 0:
            return ring.one()
        got = memo.get(mask)
        if got is not None:
            return got
        row = n - bin(mask).count("1")
        total = ring.zero()
        sign = 1
        for col in range(n):
            if not (mask >> col) & 1:
                continue
            entry = rows[row][col]
            if not entry.is_zero():
                sub = rec(mask & ~(1 << col))
                term = entry * sub
                total = total + (term if sign > 0 else -term)
            sign = -sign
        memo[mask] = total
        return total

    return rec((1 << n) - 1)


# ---------------------------------------------------------------------------
# ideals

class Ideal:
    """An ideal given by generators, with a cached Groebner basis."""

    def __init__(self, ring: PolyRing, gens: Iterable):
        self.ring = ring
        polys = []
        for g in gens:
            if isinstance(g, str):
                g = ring.parse(g)
            if not isinstance(g, Poly):
                g = ring.const(g)
            if g.ring != ring:
                raise ValueError("generator from a different ring")
            polys.append(g)
        self.gens = tuple(polys)
        self._gb = None

    def groebner(self, budget: int = None) -> tuple:
        if self._gb is None:
            self._gb = groebner(self.gens, budget=budget)
        return self._gb

    def reduce(self, f: Poly) -> Poly:
        if isinstance(f, str):
            f = self.ring.parse(f)
        return reduce_poly(f, self.groebner())

    def contains(self, f) -> bool:
        return self.reduce(f).is_zero()

    def contains_all(self, polys: Iterable) -> bool:
        return all(self.contains(f) for f in polys)

    def contains_ideal(self, other: "Ideal") -> bool:
        return self.contains_all(other.gens)

    def equals(self, other: "Ideal") -> bool:
        return self.contains_ideal(other) and other.contains_ideal(self)

    def is_trivial(self) -> bool:
        gb = self.groebner()
        return len(gb) == 1 and gb[0].total_degree() == 0

    def __add__(self, other) -> "Ideal":
        if isinstance(other, Ideal):
            if other.ring != self.ring:
                raise ValueError("ideals from different rings")
            return Ideal(self.ring, self.gens + other.gens)
        return Ideal(self.ring, self.gens + tuple(other))

    # -- dimension-type invariants ---------------------------------------

    def _staircase_supports(self) -> list:
        gb = self.groebner()
        supports = []
        for g in gb:
            sup = frozenset(i for i, e in enumerate(g.lm()) if e)
            supports.append(sup)
        # an empty support means 1 is in the ideal
        minimal = []
        for s in sorted(set(supports), key=lambda s: (len(s), sorted(s))):
            if not any(t <= s for t in minimal):
                minimal.append(s)
        return minimal

    def krull_dim(self) -> int:
        """Krull dimension of the quotient ring (-1 for the unit ideal)."""
        supports = self._staircase_supports()
        if any(len(s) == 0 for s in supports):
            return -1
        n = self.ring.nvars

        def cover(sets, size, bound):
            if size >= bound:
                return bound
            if not sets:
                return size
            s = min(sets, key=len)
            val = bound
            for v in sorted(s):
                rest = [t for t in sets if v not in t]
                val = min(val, cover(rest, size + 1, val))
            return val

        return n - cover(supports, 0, n)

    def is_zero_dimensional(self) -> bool:
        gb = self.groebner()
        if any(g.total_degree() == 0 for g in gb):
            return False
        lms = [g.lm() for g in gb]
        for i in range(self.ring.nvars):
            if not any(all(e == 0 or k == i for k, e in enumerate(m)) and m[i] > 0 for m in lms):
                return False
        return True

    def quotient_basis(self) -> tuple:
        """Monomials spanning the quotient, for zero-dimensional ideals."""
        gb = self.groebner()
        if any(g.total_degree() == 0 for g in gb):
            return ()
        if not self.is_zero_dimensional():
            raise ValueError("quotient is not finite dimensional")
        lms = [g.lm() for g in gb]
        n = self.ring.nvars
        seen = set()
        out = []
        frontier = [(0,) * n]
        seen.add(frontier[0])
        while frontier:
            nxt = []
            for m in frontier:
                if any(mono_divides(l, m) for l in lms):
                    continue
                out.append(m)
                for i in range(n):
                    child = m[:i] + (m[i] + 1,) + m[i + 1 :]
                    if child not in seen:
                        seen.add(child)
                        nxt.append(child)
            frontier = sorted(nxt, key=drl_key)
        out.sort(key=drl_key)
        return tuple(out)

    def quotient_dimension(self) -> int:
        return len(self.quotient_basis())

    # -- localization and radical ----------------------------------------

    def saturation_contains(self, f, unit) -> bool:
        """Whether f lies in the ideal after inverting the given element."""
        if isinstance(f, str):
            f = self.ring.parse(f)
        if isinstance(unit, str):
            unit = self.ring.parse(unit)
        aux = "_inv"
        while aux in self.ring.gens:
            aux += "_"
        big = self.ring.extend(aux)
        gens = [big.lift(g) for g in self.gens]
        gens.append(big.lift(unit) * big.gen(aux) - big.one())
        return Ideal(big, gens).contains(big.lift(f))

    def radical_contains(self, f) -> bool:
        """Whether some power of f lies in the ideal (Rabinowitsch trick)."""
        if isinstance(f, str):
            f = self.ring.parse(f)
        if self.contains(f):
            return True
        aux = "_rad"
        while aux in self.ring.gens:
            aux += "_"
        big = self.ring.extend(aux)
        gens = [big.lift(g) for g in self.gens]
        gens.append(big.one() - big.lift(f) * big.gen(aux))
        return Ideal(big, gens).is_trivial()

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        data = {
            "field": field_to_json(self.ring.field),
            "vars": list(self.ring.gens),
            "gens": [str(g) for g in self.gens],
        }
        return json.dumps(data, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Ideal":
        data = json.loads(text)
        ring = PolyRing(field_from_json(data["field"]), tuple(data["vars"]))
        return cls(ring, data["gens"])

    def __repr__(self):
        return f"Ideal({self.ring!r}, {len(self.gens)} gens)"


# ---------------------------------------------------------------------------
# specialization

def specialize(p: Poly, target: PolyRing, assignment: Mapping = None) -> Poly:
    """Map a polynomial into another ring, assigning values to some variables.

    Unassigned variables must exist in the target ring under the same
    name.  Coefficients are carried across via exact rational values, so
    the source field must embed accordingly.
    """
    assignment = dict(assignment or {})
    values = {}
    for name, v in assignment.items():
        p.ring.gen_index(name)
        if isinstance(v, str):
            v = target.parse(v)
        if isinstance(v, Poly):
            if v.ring != target:
                raise ValueError(f"assignment for {name!r} lives in the wrong ring")
            values[name] = v
        else:
            values[name] = target.const(v)
    carried = []
    for name in p.ring.gens:
        if name not in values and name in target.gens:
            carried.append(name)
        elif name not in values:
            # variable neither assigned nor present in the target
            if p.degree_in(name) > 0:
                raise ValueError(f"variable {name!r} has no image in the target ring")

    result = target.zero()
    src_field = p.ring.field
    for exps, c in p.terms.items():
        if isinstance(src_field, QuadraticField):
            if c[1] != 0:
                raise ValueError("coefficient has an irrational part")
            c = c[0]
        term = target.const(c)
        for name, e in zip(p.ring.gens, exps):
            if e == 0:
                continue
            if name in values:
                term = term * values[name] ** e
            else:
                term = term * target.gen(name) ** e
        result = result + term
    return result
