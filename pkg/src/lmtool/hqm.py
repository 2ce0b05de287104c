"""Hermitian quadratic modules over 2-adic coefficient rings.

A module of odd rank ``d`` is recorded through value-line coordinates for
its form data: the symmetric matrix ``a`` holds the quadratic values
``q(e_i)`` on the diagonal and the polarization ``f(e_i, e_j)`` off it,
while ``b`` holds the mixed values ``f(e_i, pi*e_j)``.  An optional matrix
``phi`` with ``phi(x, pi*y) = f(x, y)`` refines the module to the flavour
available on the self-dual member of the standard lattice chain.

The operations are Gram assembly, discriminants and divided discriminants
through generic-parameter polynomial division, hyperbolic reduction
without square roots, normal forms over coefficient rings of residue
characteristic two, and the polynomial equation systems cutting out the
similitude group of the split forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import comb
from typing import Optional, Sequence

from .poly import (
    QQ,
    BinaryField,
    Ideal,
    Poly,
    PolyRing,
    RationalField,
    exact_div,
    field_from_json,
    field_to_json,
    poly_det,
)
from .qext import FElement, QuadExtension, lambda_delta
from .norms import HermitianSpace


class NotOfType(ValueError):
    """The module cannot be carried onto the split standard form."""


class UnsupportedRing(ValueError):
    """The coefficient ring lacks an operation the algorithm needs."""


class DivisionWitnessError(ArithmeticError):
    """No exact witness for a divided discriminant is available."""


# ---------------------------------------------------------------------------
# coefficient rings


class TruncatedRing:
    """The quotient Z/2^bits, a truncation of the 2-adic integers.

    Elements are plain ints in ``[0, 2^bits)``.  Units are the odd
    classes; every even class is nilpotent, which is what makes the
    reduction algorithms below terminate."""

    def __init__(self, bits: int):
        if bits < 1:
            raise ValueError("bits must be positive")
        self.bits = bits
        self.modulus = 1 << bits
        self.zero = 0
        self.one = 1
        self.name = f"Z/2^{bits}"

    def coerce(self, x) -> int:
        if isinstance(x, bool):
            return int(x)
        if isinstance(x, int):
            return x % self.modulus
        if isinstance(x, Fraction):
            if x.denominator % 2 == 0:
                raise ZeroDivisionError(f"denominator of {x} is even")
            return x.numerator * pow(x.denominator, -1, self.modulus) % self.modulus
        if isinstance(x, str):
            return self.coerce(Fraction(x))
        raise TypeError(f"cannot coerce {x!r} into {self.name}")

    def add(self, a, b):
        return (a + b) % self.modulus

    def sub(self, a, b):
        return (a - b) % self.modulus

    def mul(self, a, b):
        return a * b % self.modulus

    def neg(self, a):
        return -a % self.modulus

    def is_zero(self, a) -> bool:
        return a % self.modulus == 0

    def is_unit(self, a) -> bool:
        return a % 2 == 1

    def inv(self, a):
        if not self.is_unit(a):
            raise ZeroDivisionError(f"{a} is not a unit in {self.name}")
        return pow(a, -1, self.modulus)

    def fmt(self, a) -> str:
        return str(a % self.modulus)

    def __eq__(self, other):
        return isinstance(other, TruncatedRing) and other.bits == self.bits

    def __hash__(self):
        return hash(("truncated", self.bits))

    def __repr__(self):
        return f"TruncatedRing({self.bits})"


class FieldRing:
    """A coefficient field wrapped in the ring interface used here."""

    def __init__(self, field):
        self.field = field
        self.zero = field.coerce(0)
        self.one = field.coerce(1)
        self.name = getattr(field, "name", repr(field))

    def coerce(self, x):
        return self.field.coerce(x)

    def add(self, a, b):
        return self.field.add(a, b)

    def sub(self, a, b):
        return self.field.add(a, self.field.neg(b))

    def mul(self, a, b):
        return self.field.mul(a, b)

    def neg(self, a):
        return self.field.neg(a)

    def is_zero(self, a) -> bool:
        return a == self.zero

    def is_unit(self, a) -> bool:
        return a != self.zero

    def inv(self, a):
        return self.field.inv(a)

    def fmt(self, a) -> str:
        return self.field.fmt(a)

    def __eq__(self, other):
        return isinstance(other, FieldRing) and other.field == self.field

    def __hash__(self):
        return hash(("fieldring", self.field))

    def __repr__(self):
        return f"FieldRing({self.field!r})"


EXACT = FieldRing(QQ)


@dataclass(frozen=True)
class RingParams:
    """Images of the arithmetic parameters inside a coefficient ring.

    ``t`` and ``pi0`` are the trace and the norm of the uniformizer of the
    quadratic extension; ``t_over_pi0`` carries the ratio separately since
    it stays meaningful in rings where ``pi0`` is not invertible.  ``ext``
    optionally points at exact extension data, which enables the lattice
    module constructors and exact companion computations."""

    ring: object
    t: object
    pi0: object
    t_over_pi0: object
    ext: Optional[QuadExtension] = None

    def __post_init__(self):
        R = self.ring
        object.__setattr__(self, "t", R.coerce(self.t))
        object.__setattr__(self, "pi0", R.coerce(self.pi0))
        object.__setattr__(self, "t_over_pi0", R.coerce(self.t_over_pi0))
        if not R.is_zero(R.sub(self.t, R.mul(self.pi0, self.t_over_pi0))):
            raise ValueError("t must equal pi0 * t_over_pi0")

    @staticmethod
    def from_extension(ext: QuadExtension, ring) -> "RingParams":
        ratio = ext.t / ext.pi0
        return RingParams(ring, ext.t, ext.pi0, ratio, ext)

    @property
    def pi0_nilpotent(self) -> bool:
        if isinstance(self.ring, TruncatedRing):
            return not self.ring.is_unit(self.pi0)
        return self.ring.is_zero(self.pi0)

    @property
    def exact_params(self) -> "RingParams":
        if self.ext is None:
            raise ValueError("no exact extension data attached")
        return RingParams.from_extension(self.ext, EXACT)


# ---------------------------------------------------------------------------
# small linear algebra over a coefficient ring


def _mat(rows) -> tuple:
    return tuple(tuple(r) for r in rows)


def mat_identity(R, n: int) -> tuple:
    return tuple(tuple(R.one if i == j else R.zero for j in range(n)) for i in range(n))


def mat_transpose(M) -> tuple:
    return tuple(tuple(row[i] for row in M) for i in range(len(M[0])))


def mat_mul(R, X, Y) -> tuple:
    rows = []
    for xr in X:
        row = []
        for j in range(len(Y[0])):
            acc = R.zero
            for k, xv in enumerate(xr):
                if not R.is_zero(xv):
                    acc = R.add(acc, R.mul(xv, Y[k][j]))
            row.append(acc)
        rows.append(tuple(row))
    return tuple(rows)


def mat_sub(R, X, Y) -> tuple:
    return tuple(
        tuple(R.sub(a, b) for a, b in zip(xr, yr)) for xr, yr in zip(X, Y)
    )


def mat_scale(R, c, X) -> tuple:
    return tuple(tuple(R.mul(c, a) for a in row) for row in X)


def ring_det(R, rows) -> object:
    """Determinant by Laplace expansion memoized on column subsets."""
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    if n == 0:
        return R.one
    memo = {}

    def rec(i: int, mask: int):
        if i == n:
            return R.one
        cached = memo.get(mask)
        if cached is not None:
            return cached
        acc = R.zero
        sign = False
        for j in range(n):
            bit = 1 << j
            if not mask & bit:
                continue
            c = rows[i][j]
            if not R.is_zero(c):
                term = R.mul(c, rec(i + 1, mask & ~bit))
                acc = R.add(acc, R.neg(term) if sign else term)
            sign = not sign
        memo[mask] = acc
        return acc

    return rec(0, (1 << n) - 1)


def solve_unit_pivot(R, M, rhs) -> tuple:
    """Solve M x = rhs by Gaussian elimination with unit pivots.

    Over a local coefficient ring this succeeds whenever det(M) is a
    unit; a missing unit pivot raises UnsupportedRing."""
    n = len(M)
    work = [list(row) + [rhs[i]] for i, row in enumerate(M)]
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if R.is_unit(work[r][col]):
                pivot = r
                break
        if pivot is None:
            raise UnsupportedRing("no unit pivot while solving a linear system")
        work[col], work[pivot] = work[pivot], work[col]
        inv = R.inv(work[col][col])
        work[col] = [R.mul(inv, v) for v in work[col]]
        for r in range(n):
            if r == col:
                continue
            factor = work[r][col]
            if R.is_zero(factor):
                continue
            work[r] = [R.sub(a, R.mul(factor, b)) for a, b in zip(work[r], work[col])]
    return tuple(work[i][n] for i in range(n))


def _vec(R, vals) -> tuple:
    return tuple(R.coerce(v) for v in vals)


def _add_vec(R, x, y) -> tuple:
    return tuple(R.add(a, b) for a, b in zip(x, y))


def _sub_vec(R, x, y) -> tuple:
    return tuple(R.sub(a, b) for a, b in zip(x, y))


def _scale_vec(R, c, x) -> tuple:
    return tuple(R.mul(c, a) for a in x)


# ---------------------------------------------------------------------------
# the module class


@dataclass(frozen=True)
class HermQuadModule:
    """A free hermitian quadratic module in coordinates.

    Vectors are length ``2d`` coordinate tuples with respect to the basis
    ``(e_1 .. e_d, pi*e_1 .. pi*e_d)``.  The stored data obeys the
    polarization relations; they are validated on construction.  When an
    exact companion over the rationals is attached it serves as a witness
    for divided discriminants in ranks where the generic division table
    is not precomputed."""

    params: RingParams
    a: tuple
    b: tuple
    phi: Optional[tuple] = None
    value_line: str = "eps^-1"
    exact: Optional["HermQuadModule"] = None

    def __post_init__(self):
        R = self.params.ring
        a = _mat([[R.coerce(v) for v in row] for row in self.a])
        b = _mat([[R.coerce(v) for v in row] for row in self.b])
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        d = len(a)
        if any(len(r) != d for r in a) or len(b) != d or any(len(r) != d for r in b):
            raise ValueError("coefficient matrices must be square of equal size")
        t, pi0, ratio = self.params.t, self.params.pi0, self.params.t_over_pi0
        for i in range(d):
            if not R.is_zero(R.sub(b[i][i], R.mul(t, a[i][i]))):
                raise ValueError("diagonal of b must be t times the diagonal of a")
            for j in range(i + 1, d):
                if a[i][j] != a[j][i]:
                    raise ValueError("a must be symmetric")
                total = R.add(b[i][j], b[j][i])
                if not R.is_zero(R.sub(total, R.mul(t, a[i][j]))):
                    raise ValueError("b[i][j] + b[j][i] must equal t * a[i][j]")
        if self.phi is not None:
            p = _mat([[R.coerce(v) for v in row] for row in self.phi])
            object.__setattr__(self, "phi", p)
            if len(p) != d or any(len(r) != d for r in p):
                raise ValueError("phi must match the rank")
            for i in range(d):
                if not R.is_zero(R.sub(p[i][i], R.mul(ratio, a[i][i]))):
                    raise ValueError("phi diagonal must be (t/pi0) times the a diagonal")
                for j in range(d):
                    if i == j:
                        continue
                    lhs = R.add(p[i][j], p[j][i])
                    if not R.is_zero(R.sub(lhs, R.mul(ratio, a[i][j]))):
                        raise ValueError("phi[i][j] + phi[j][i] must equal (t/pi0) * a[i][j]")
                    want = R.sub(R.mul(t, a[i][j]), R.mul(pi0, p[i][j]))
                    if not R.is_zero(R.sub(b[i][j], want)):
                        raise ValueError("b is inconsistent with phi")

    # -- basic shape --------------------------------------------------------

    @property
    def d(self) -> int:
        return len(self.a)

    @property
    def has_phi(self) -> bool:
        return self.phi is not None

    def basis_vec(self, i: int) -> tuple:
        R = self.params.ring
        return tuple(R.one if k == i else R.zero for k in range(2 * self.d))

    # -- Gram matrices ------------------------------------------------------

    @cached_property
    def a_tilde(self) -> tuple:
        R = self.params.ring
        d = self.d
        return tuple(
            tuple(
                R.add(self.a[i][i], self.a[i][i]) if i == j else self.a[i][j]
                for j in range(d)
            )
            for i in range(d)
        )

    @cached_property
    def gram(self) -> tuple:
        """The polarization Gram on (e, pi*e): [[At, B], [B^t, pi0*At]]."""
        R = self.params.ring
        at = self.a_tilde
        bt = mat_transpose(self.b)
        top = [list(r1) + list(r2) for r1, r2 in zip(at, self.b)]
        bottom = [list(r1) + list(r2) for r1, r2 in zip(bt, mat_scale(R, self.params.pi0, at))]
        return _mat(top + bottom)

    @cached_property
    def gram_phi(self) -> tuple:
        """The refined Gram [[phi, At], [t*phi - At, pi0*phi]]."""
        if self.phi is None:
            raise ValueError("module carries no pairing refinement")
        R = self.params.ring
        at = self.a_tilde
        low_left = mat_sub(R, mat_scale(R, self.params.t, self.phi), at)
        top = [list(r1) + list(r2) for r1, r2 in zip(self.phi, at)]
        bottom = [
            list(r1) + list(r2)
            for r1, r2 in zip(low_left, mat_scale(R, self.params.pi0, self.phi))
        ]
        return _mat(top + bottom)

    # -- evaluation ---------------------------------------------------------

    def q_eval(self, vec: Sequence):
        R = self.params.ring
        d = self.d
        x = _vec(R, vec)
        if len(x) != 2 * d:
            raise ValueError("vector has the wrong length")
        head, tail = x[:d], x[d:]

        def half(y):
            acc = R.zero
            for i in range(d):
                acc = R.add(acc, R.mul(R.mul(y[i], y[i]), self.a[i][i]))
                for j in range(i + 1, d):
                    acc = R.add(acc, R.mul(R.mul(y[i], y[j]), self.a[i][j]))
            return acc

        acc = half(head)
        for i in range(d):
            if R.is_zero(head[i]):
                continue
            for j in range(d):
                acc = R.add(acc, R.mul(R.mul(head[i], tail[j]), self.b[i][j]))
        return R.add(acc, R.mul(self.params.pi0, half(tail)))

    def _pair(self, gram, u, v):
        R = self.params.ring
        x = _vec(R, u)
        y = _vec(R, v)
        acc = R.zero
        for i, xv in enumerate(x):
            if R.is_zero(xv):
                continue
            row = gram[i]
            for j, yv in enumerate(y):
                if not R.is_zero(yv):
                    acc = R.add(acc, R.mul(xv, R.mul(row[j], yv)))
        return acc

    def f_eval(self, u, v):
        return self._pair(self.gram, u, v)

    def phi_eval(self, u, v):
        return self._pair(self.gram_phi, u, v)

    def pi_coords(self, vec) -> tuple:
        """Coordinates of pi times the vector."""
        R = self.params.ring
        d = self.d
        x = _vec(R, vec)
        head = tuple(R.neg(R.mul(self.params.pi0, x[d + i])) for i in range(d))
        tail = tuple(R.add(x[i], R.mul(self.params.t, x[d + i])) for i in range(d))
        return head + tail

    def pibar_coords(self, vec) -> tuple:
        """Coordinates of the conjugate uniformizer times the vector."""
        R = self.params.ring
        d = self.d
        x = _vec(R, vec)
        head = tuple(
            R.add(R.mul(self.params.t, x[i]), R.mul(self.params.pi0, x[d + i]))
            for i in range(d)
        )
        tail = tuple(R.neg(x[i]) for i in range(d))
        return head + tail

    def pi_matrix(self) -> tuple:
        R = self.params.ring
        d = self.d
        rows = []
        for i in range(d):
            rows.append(
                tuple(R.zero for _ in range(d))
                + tuple(R.neg(self.params.pi0) if j == i else R.zero for j in range(d))
            )
        for i in range(d):
            rows.append(
                tuple(R.one if j == i else R.zero for j in range(d))
                + tuple(self.params.t if j == i else R.zero for j in range(d))
            )
        return _mat(rows)

    # -- discriminants ------------------------------------------------------

    def disc(self):
        """Determinant of the active Gram (refined when phi is present)."""
        R = self.params.ring
        if self.phi is not None:
            return ring_det(R, self.gram_phi)
        return ring_det(R, self.gram)

    def _divisor(self):
        R = self.params.ring
        four = R.coerce(4)
        if self.phi is not None:
            r = self.params.t_over_pi0
            return R.sub(four, R.mul(self.params.pi0, R.mul(r, r)))
        return R.sub(R.mul(four, self.params.pi0), R.mul(self.params.t, self.params.t))

    def divided_disc(self):
        """The discriminant with its forced parameter factor divided out.

        In small rank the quotient is obtained by exact division at the
        generic-parameter level and then specialized, so it is meaningful
        even when the factor is a zero divisor.  In higher rank an exact
        companion module serves as the division witness; without one the
        factor must be invertible."""
        if self.d % 2 == 0:
            raise ValueError("divided discriminants need odd rank")
        R = self.params.ring
        case = "phi" if self.phi is not None else "q"
        if self.d <= 3:
            quot = _generic_divided(self.d, case)
            return _eval_generic(quot, self._generic_assignment(), R)
        if self.exact is not None:
            return R.coerce(self.exact.divided_disc())
        factor = self._divisor()
        if R.is_unit(factor):
            return R.mul(self.disc(), R.inv(factor))
        raise DivisionWitnessError(
            "division witness fails: the parameter factor is not invertible "
            "and no exact companion is attached"
        )

    def _generic_assignment(self) -> dict:
        d = self.d
        vals = {}
        if self.phi is not None:
            vals["p0"] = self.params.pi0
            vals["r"] = self.params.t_over_pi0
            for i in range(d):
                vals[f"q_{i + 1}"] = self.a[i][i]
                for j in range(i + 1, d):
                    vals[f"a_{i + 1}_{j + 1}"] = self.a[i][j]
                    vals[f"g_{i + 1}_{j + 1}"] = self.phi[i][j]
        else:
            vals["t"] = self.params.t
            vals["p0"] = self.params.pi0
            for i in range(d):
                for j in range(i, d):
                    vals[f"a_{i + 1}_{j + 1}"] = self.a[i][j]
                    if j > i:
                        vals[f"b_{i + 1}_{j + 1}"] = self.b[i][j]
        return vals

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        R = self.params.ring
        data = {
            "ring": ring_to_json(R),
            "t": _elt_to_json(R, self.params.t),
            "pi0": _elt_to_json(R, self.params.pi0),
            "t_over_pi0": _elt_to_json(R, self.params.t_over_pi0),
            "ext": self.params.ext.to_dict() if self.params.ext else None,
            "a": [[_elt_to_json(R, v) for v in row] for row in self.a],
            "b": [[_elt_to_json(R, v) for v in row] for row in self.b],
            "phi": None
            if self.phi is None
            else [[_elt_to_json(R, v) for v in row] for row in self.phi],
            "value_line": self.value_line,
        }
        return data


def module_from_json(data: dict) -> HermQuadModule:
    """Rebuild a module; exact companions are not carried across."""
    R = ring_from_json(data["ring"])
    ext = QuadExtension.from_dict(data["ext"]) if data.get("ext") else None
    params = RingParams(
        R,
        _elt_from_json(R, data["t"]),
        _elt_from_json(R, data["pi0"]),
        _elt_from_json(R, data["t_over_pi0"]),
        ext,
    )
    conv = lambda rows: [[_elt_from_json(R, v) for v in row] for row in rows]
    phi = conv(data["phi"]) if data.get("phi") else None
    return HermQuadModule(
        params,
        conv(data["a"]),
        conv(data["b"]),
        phi,
        data.get("value_line", "eps^-1"),
    )


def ring_to_json(R) -> dict:
    if isinstance(R, TruncatedRing):
        return {"kind": "truncated", "bits": R.bits}
    if isinstance(R, FieldRing):
        return {"kind": "field", "field": field_to_json(R.field)}
    raise TypeError(f"unknown coefficient ring {R!r}")


def ring_from_json(data: dict):
    if data["kind"] == "truncated":
        return TruncatedRing(data["bits"])
    if data["kind"] == "field":
        return FieldRing(field_from_json(data["field"]))
    raise ValueError(f"unknown ring kind {data['kind']!r}")


def _elt_to_json(R, x):
    if isinstance(x, tuple):
        return [str(x[0]), str(x[1])]
    return str(x)


def _elt_from_json(R, s):
    if isinstance(s, list):
        return R.coerce((Fraction(s[0]), Fraction(s[1])))
    try:
        return R.coerce(int(s))
    except ValueError:
        return R.coerce(Fraction(s))


# ---------------------------------------------------------------------------
# generic divided discriminants


@lru_cache(maxsize=None)
def _generic_ring(d: int, case: str) -> PolyRing:
    names = []
    if case == "q":
        names.extend(["t", "p0"])
        for i in range(1, d + 1):
            for j in range(i, d + 1):
                names.append(f"a_{i}_{j}")
        for i in range(1, d + 1):
            for j in range(i + 1, d + 1):
                names.append(f"b_{i}_{j}")
    else:
        names.extend(["p0", "r"])
        for i in range(1, d + 1):
            names.append(f"q_{i}")
        for i in range(1, d + 1):
            for j in range(i + 1, d + 1):
                names.append(f"a_{i}_{j}")
        for i in range(1, d + 1):
            for j in range(i + 1, d + 1):
                names.append(f"g_{i}_{j}")
    return PolyRing(QQ, tuple(names))


@lru_cache(maxsize=None)
def _generic_divided(d: int, case: str) -> Poly:
    """The divided discriminant as a polynomial in generic module data."""
    ring = _generic_ring(d, case)
    if case == "q":
        t, p0 = ring.gen("t"), ring.gen("p0")
        A = [[None] * d for _ in range(d)]
        for i in range(d):
            for j in range(i, d):
                g = ring.gen(f"a_{i + 1}_{j + 1}")
                A[i][j] = g
                A[j][i] = g
        B = [[None] * d for _ in range(d)]
        for i in range(d):
            B[i][i] = t * A[i][i]
            for j in range(i + 1, d):
                g = ring.gen(f"b_{i + 1}_{j + 1}")
                B[i][j] = g
                B[j][i] = t * A[i][j] - g
        At = [
            [A[i][j] + A[i][j] if i == j else A[i][j] for j in range(d)]
            for i in range(d)
        ]
        rows = []
        for i in range(d):
            rows.append(At[i] + B[i])
        for i in range(d):
            rows.append([B[j][i] for j in range(d)] + [p0 * At[i][j] for j in range(d)])
        disc = poly_det(rows)
        factor = ring.const(4) * p0 - t * t
        return exact_div(disc, factor)
    p0, r = ring.gen("p0"), ring.gen("r")
    qs = [ring.gen(f"q_{i + 1}") for i in range(d)]
    A = [[None] * d for _ in range(d)]
    G = [[None] * d for _ in range(d)]
    for i in range(d):
        A[i][i] = qs[i] + qs[i]
        for j in range(i + 1, d):
            a = ring.gen(f"a_{i + 1}_{j + 1}")
            A[i][j] = a
            A[j][i] = a
            g = ring.gen(f"g_{i + 1}_{j + 1}")
            G[i][j] = p0 * g
            G[j][i] = p0 * r * a - p0 * g
        G[i][i] = p0 * r * qs[i]
    # G is pi0 times the refined pairing; scaling the first block row by
    # pi0 keeps every entry polynomial in the generic parameters.
    rows = []
    for i in range(d):
        rows.append(G[i] + [p0 * A[i][j] for j in range(d)])
    for i in range(d):
        rows.append([r * G[i][j] - A[i][j] for j in range(d)] + G[i])
    scaled = poly_det(rows)
    factor = ring.const(4) - p0 * r * r
    divisor = factor
    for _ in range(d):
        divisor = divisor * p0
    return exact_div(scaled, divisor)


def _eval_generic(p: Poly, assignment: dict, R):
    """Evaluate a rational-coefficient polynomial at coefficient ring values."""
    gens = p.ring.gens
    vals = [assignment.get(name) for name in gens]
    total = R.zero
    for exps, c in p.terms.items():
        acc = R.coerce(c)
        for idx, e in enumerate(exps):
            if not e:
                continue
            v = vals[idx]
            if v is None:
                raise KeyError(f"no value for generic parameter {gens[idx]!r}")
            for _ in range(e):
                acc = R.mul(acc, v)
        total = R.add(total, acc)
    return total


# ---------------------------------------------------------------------------
# standard modules


VARIANTS = ("std-q", "std-phi", "lattice-0", "lattice-m")


def standard_module(n: int, variant: str, params: RingParams) -> HermQuadModule:
    """The split standard modules and the two distinguished lattice modules.

    ``std-q`` is the orthogonal sum of hyperbolic pairs with a unit
    middle line; ``std-phi`` is its refinement.  ``lattice-0`` and
    ``lattice-m`` carry the value-line coordinates of the self-dual and
    the almost-pi-modular members of the standard chain with respect to
    their distinguished ordered bases; the former includes the pairing
    refinement."""
    if n < 1 or n % 2 == 0:
        raise ValueError("rank must be odd and positive")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    R = params.ring
    m = n // 2
    exact_twin = None
    is_exact = isinstance(R, FieldRing) and isinstance(R.field, RationalField)
    if params.ext is not None and not is_exact:
        exact_twin = standard_module(n, variant, params.exact_params)
    if variant == "std-q":
        a = [[R.zero] * n for _ in range(n)]
        b = [[R.zero] * n for _ in range(n)]
        a[m][m] = R.one
        b[m][m] = params.t
        for i in range(m):
            b[i][n - 1 - i] = R.one
            b[n - 1 - i][i] = R.neg(R.one)
        return HermQuadModule(params, a, b, exact=exact_twin)
    if variant == "std-phi":
        a = [[R.zero] * n for _ in range(n)]
        b = [[R.zero] * n for _ in range(n)]
        p = [[R.zero] * n for _ in range(n)]
        ratio = params.t_over_pi0
        a[m][m] = R.one
        b[m][m] = params.t
        p[m][m] = ratio
        for i in range(m):
            a[i][n - 1 - i] = R.one
            a[n - 1 - i][i] = R.one
            b[i][n - 1 - i] = params.t
            p[n - 1 - i][i] = ratio
        return HermQuadModule(params, a, b, p, exact=exact_twin)
    if params.ext is None:
        raise ValueError("lattice variants need extension data on the parameters")
    chain_index = 0 if variant == "lattice-0" else m
    with_phi = variant == "lattice-0"
    a, b, p = _lattice_data(params.ext, n, chain_index, with_phi)
    return HermQuadModule(params, a, b, p, exact=exact_twin)


def _lattice_data(ext: QuadExtension, n: int, chain_index: int, with_phi: bool):
    """Exact value-line module data on the distinguished ordered basis."""
    m = n // 2
    sp = HermitianSpace(m, ext)
    lam = lambda_delta(ext).lam
    pi = ext.pi()
    vecs = []
    for i in range(m + 2, n + 1):
        vecs.append(sp.basis_vector(i, lam))
    head = None if chain_index == 0 else pi.inverse()
    for i in range(1, m + 1):
        vecs.append(sp.basis_vector(i, head))
    vecs.append(sp.basis_vector(m + 1))

    def scaled(vec, c: FElement):
        return tuple(c * x for x in vec)

    a = [[Fraction(0)] * n for _ in range(n)]
    b = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        diag = sp.h(vecs[i], vecs[i])
        if diag.b != 0:
            raise AssertionError("hermitian diagonal must lie in the base field")
        a[i][i] = diag.a
        for j in range(n):
            if j > i:
                val = sp.h(vecs[i], vecs[j]).trace()
                a[i][j] = val
                a[j][i] = val
            b[i][j] = sp.h(vecs[i], scaled(vecs[j], pi)).trace()
    p = None
    if with_phi:
        pinv = pi.inverse()
        p = [
            [sp.h(vecs[i], scaled(vecs[j], pinv)).trace() for j in range(n)]
            for i in range(n)
        ]
    return a, b, p


# ---------------------------------------------------------------------------
# hyperbolic reduction


def catalan_root(R, lead, const):
    """The distinguished root of lead*r^2 + r + const for nilpotent lead.

    This is the truncation of -const * sum_k C_k * (lead*const)^k with
    C_k the Catalan numbers, i.e. the quadratic formula with the square
    root expanded as a terminating series; no division by two occurs."""
    x = R.mul(lead, const)
    root = R.zero
    power = R.one
    k = 0
    while not R.is_zero(power):
        term = R.mul(R.neg(const), R.mul(R.coerce(comb(2 * k, k) // (k + 1)), power))
        root = R.add(root, term)
        power = R.mul(power, x)
        k += 1
        if k > getattr(R, "bits", 2) + 4:
            raise RuntimeError("Catalan series did not terminate")
    check = R.add(R.add(R.mul(lead, R.mul(root, root)), root), const)
    if not R.is_zero(check):
        raise RuntimeError("Catalan series did not solve the quadratic")
    return root


def hyperbolic_reduce(module: HermQuadModule, v, w):
    """Normalize a pair with f(v, pi*w) = 1 to a standard hyperbolic pair.

    Returns (v', w') spanning the same submodule over the extension ring
    with q(v') = q(w') = 0, f(v', w') = 0 and f(v', pi*w') = 1.  The
    quadratic values are removed by a Catalan-number series, so no square
    roots are taken; this needs pi0 nilpotent."""
    R = module.params.ring
    if not module.params.pi0_nilpotent:
        raise UnsupportedRing("hyperbolic reduction needs pi0 nilpotent")
    v = _vec(R, v)
    w = _vec(R, w)
    if module.f_eval(v, module.pi_coords(w)) != R.one:
        raise ValueError("the pair must satisfy f(v, pi*w) = 1")
    pi0 = module.params.pi0
    t = module.params.t

    # remove q(v): v += r0 * pi * w with r0 a truncated Catalan series
    r0 = catalan_root(R, R.mul(pi0, module.q_eval(w)), module.q_eval(v))
    v = _add_vec(R, v, _scale_vec(R, r0, module.pi_coords(w)))
    if not R.is_zero(module.q_eval(v)):
        raise RuntimeError("first reduction step failed")

    # rescale w so that f(v, pi*w) = 1 again
    u = module.f_eval(v, module.pi_coords(w))
    w = _scale_vec(R, R.inv(u), w)

    # remove q(w): w -= q(w) * pibar * v keeps f(v, pi*w)
    w = _sub_vec(R, w, _scale_vec(R, module.q_eval(w), module.pibar_coords(v)))

    # twist v to remove f(v, w)
    c = module.f_eval(v, w)
    fpi2 = R.sub(t, R.mul(pi0, c))
    r1 = R.inv(R.sub(R.one, R.mul(c, fpi2)))
    r2 = R.neg(R.mul(r1, c))
    v = _sub_vec(
        R,
        _scale_vec(R, R.add(r1, R.mul(t, r2)), v),
        _scale_vec(R, r2, module.pi_coords(v)),
    )

    if not R.is_zero(module.q_eval(v)):
        raise RuntimeError("postcondition q(v') = 0 failed")
    if not R.is_zero(module.q_eval(w)):
        raise RuntimeError("postcondition q(w') = 0 failed")
    if not R.is_zero(module.f_eval(v, w)):
        raise RuntimeError("postcondition f(v', w') = 0 failed")
    if module.f_eval(v, module.pi_coords(w)) != R.one:
        raise RuntimeError("postcondition f(v', pi*w') = 1 failed")
    return v, w


# ---------------------------------------------------------------------------
# normal form


@dataclass(frozen=True)
class Similitude:
    """A similitude in coordinates: x maps to matrix * x, scaling by gamma."""

    matrix: tuple
    gamma: object

    def __post_init__(self):
        object.__setattr__(self, "matrix", _mat(self.matrix))


def check_similitude(dom: HermQuadModule, cod: HermQuadModule, sim: Similitude) -> bool:
    """Verify that sim carries dom into cod with multiplier sim.gamma.

    Checks the Gram congruence, the quadratic values on basis columns
    (which the Gram alone does not pin down in residue characteristic
    two), commutation with the uniformizer action, and the refined Gram
    congruence when both modules carry one."""
    if dom.params != cod.params:
        return False
    R = cod.params.ring
    P = sim.matrix
    gamma = sim.gamma
    if not R.is_unit(gamma):
        return False
    d = dom.d
    if len(P) != 2 * d or any(len(r) != 2 * d for r in P):
        return False
    pi_mat = dom.pi_matrix()
    if mat_mul(R, P, pi_mat) != mat_mul(R, pi_mat, P):
        return False
    pt = mat_transpose(P)
    lhs = mat_mul(R, pt, mat_mul(R, cod.gram, P))
    if lhs != mat_scale(R, gamma, dom.gram):
        return False
    for j in range(d):
        col = tuple(P[i][j] for i in range(2 * d))
        if cod.q_eval(col) != R.mul(gamma, dom.a[j][j]):
            return False
    if dom.has_phi != cod.has_phi:
        return False
    if dom.has_phi:
        lhs = mat_mul(R, pt, mat_mul(R, cod.gram_phi, P))
        if lhs != mat_scale(R, gamma, dom.gram_phi):
            return False
    return True


def _find_plain_pair(module: HermQuadModule, gens):
    R = module.params.ring
    for i, gi in enumerate(gens):
        for j, gj in enumerate(gens):
            if i == j:
                continue
            u = module.f_eval(gi, module.pi_coords(gj))
            if R.is_unit(u):
                return i, j, u
    return None


def _project_away(module: HermQuadModule, pairing, frame, gram_inv_apply, gens):
    """Subtract the frame component of each generator, checking orthogonality."""
    R = module.params.ring
    rest = []
    for g in gens:
        rhs = [pairing(n, g) for n in frame]
        alpha = gram_inv_apply(rhs)
        proj = g
        for coef, n in zip(alpha, frame):
            if not R.is_zero(coef):
                proj = _sub_vec(R, proj, _scale_vec(R, coef, n))
        for n in frame:
            if not R.is_zero(pairing(n, proj)) or not R.is_zero(pairing(proj, n)):
                raise RuntimeError("orthogonal projection failed")
        rest.append(proj)
    return rest


def _split_plain(module: HermQuadModule, gens):
    R = module.params.ring
    if len(gens) == 1:
        gamma = module.q_eval(gens[0])
        if not R.is_unit(gamma):
            raise NotOfType("anisotropic line has a non-unit quadratic value")
        return [], gens[0], gamma
    found = _find_plain_pair(module, gens)
    if found is None:
        raise NotOfType("no unimodular hyperbolic pair among the generators")
    i, j, u = found
    v = gens[i]
    w = _scale_vec(R, R.inv(u), gens[j])
    v, w = hyperbolic_reduce(module, v, w)
    frame = (v, w, module.pi_coords(v), module.pi_coords(w))

    # the plane Gram is the fixed antidiagonal (1, -1, -1, 1), its own inverse
    def apply_inv(rhs):
        return (rhs[3], R.neg(rhs[2]), R.neg(rhs[1]), rhs[0])

    others = [g for k, g in enumerate(gens) if k not in (i, j)]
    rest = _project_away(module, module.f_eval, frame, apply_inv, others)
    pairs, mid, gamma = _split_plain(module, rest)
    return [(v, w)] + pairs, mid, gamma


def _solve_quadratic(R, aa, cc):
    """A root of aa*r^2 + r + cc over the coefficient ring, or None."""
    if R.is_zero(aa):
        return R.neg(cc)
    if isinstance(R, FieldRing):
        for x in R.field.elements():
            val = R.add(R.add(R.mul(aa, R.mul(x, x)), x), cc)
            if R.is_zero(val):
                return x
        return None
    # truncated ring: a unique Newton lift exists over each residue root
    if aa % 2 == 1 and cc % 2 == 1:
        return None
    r = cc % 2 if aa % 2 == 0 else 0
    for _ in range(R.bits + 2):
        g = R.add(R.add(R.mul(aa, R.mul(r, r)), r), cc)
        if R.is_zero(g):
            return r
        gp = R.add(R.mul(R.coerce(2), R.mul(aa, r)), R.one)
        r = R.sub(r, R.mul(g, R.inv(gp)))
    return r if R.is_zero(R.add(R.add(R.mul(aa, R.mul(r, r)), r), cc)) else None


def _split_refined(module: HermQuadModule, gens):
    R = module.params.ring
    if len(gens) == 1:
        gamma = module.q_eval(gens[0])
        if not R.is_unit(gamma):
            raise NotOfType("anisotropic line has a non-unit quadratic value")
        return [], gens[0], gamma
    t = module.params.t
    pi0 = module.params.pi0
    candidates = []
    for i, gi in enumerate(gens):
        for j, gj in enumerate(gens):
            if i != j and R.is_unit(module.f_eval(gi, gj)):
                candidates.append((i, j))
    if not candidates:
        raise NotOfType("no unimodular pair for the refined pairing")
    chosen = None
    for i, j in candidates:
        c = module.f_eval(gens[i], gens[j])
        v = gens[i]
        w = _scale_vec(R, R.inv(c), gens[j])
        r0 = _solve_quadratic(R, module.q_eval(w), module.q_eval(v))
        if r0 is not None:
            chosen = (i, j, v, w, r0)
            break
    if chosen is None:
        raise UnsupportedRing(
            "square roots unavailable: the reduction quadratic has no root"
        )
    i, j, v, w, r0 = chosen
    v = _add_vec(R, v, _scale_vec(R, r0, w))
    u = module.phi_eval(v, module.pi_coords(w))
    w = _scale_vec(R, R.inv(u), w)
    w = _sub_vec(R, w, _scale_vec(R, module.q_eval(w), v))
    c = module.phi_eval(v, w)
    fpi2 = R.sub(t, R.mul(pi0, c))
    r1 = R.inv(R.sub(R.one, R.mul(c, fpi2)))
    r2 = R.neg(R.mul(r1, c))
    v = _sub_vec(
        R,
        _scale_vec(R, R.add(r1, R.mul(t, r2)), v),
        _scale_vec(R, r2, module.pi_coords(v)),
    )
    if not R.is_zero(module.q_eval(v)) or not R.is_zero(module.q_eval(w)):
        raise RuntimeError("refined reduction failed to kill the quadratic values")
    if not R.is_zero(module.phi_eval(v, w)):
        raise RuntimeError("refined reduction postcondition phi(v, w) = 0 failed")
    if module.phi_eval(v, module.pi_coords(w)) != R.one:
        raise RuntimeError("refined reduction postcondition phi(v, pi*w) = 1 failed")
    frame = (v, w, module.pi_coords(v), module.pi_coords(w))
    ratio = module.params.t_over_pi0
    plane = (
        (R.zero, R.zero, R.zero, R.one),
        (ratio, R.zero, R.one, R.zero),
        (R.zero, R.neg(R.one), R.zero, R.zero),
        (R.sub(R.mul(t, ratio), R.one), R.zero, t, R.zero),
    )

    def apply_inv(rhs):
        return solve_unit_pivot(R, plane, rhs)

    others = [g for k, g in enumerate(gens) if k not in (i, j)]
    rest = _project_away(module, module.phi_eval, frame, apply_inv, others)
    pairs, mid, gamma = _split_refined(module, rest)
    return [(v, w)] + pairs, mid, gamma


def normal_form(module: HermQuadModule):
    """Carry the module onto the split standard form of the same rank.

    Returns ``(sim, gamma)`` where ``sim.matrix`` has as columns the
    located standard frame in module coordinates, so that the Gram of the
    module pulls back to gamma times the standard Gram.  Only coefficient
    rings of residue characteristic two are supported.  Raises NotOfType
    when the divided discriminant is not a unit or no hyperbolic pair
    exists, and UnsupportedRing when a needed root is unavailable."""
    R = module.params.ring
    if isinstance(R, TruncatedRing):
        pass
    elif isinstance(R, FieldRing) and isinstance(R.field, BinaryField):
        pass
    else:
        raise UnsupportedRing(
            "normal forms are implemented for residue characteristic two"
        )
    d = module.d
    if d % 2 == 0:
        raise ValueError("rank must be odd")
    dd = module.divided_disc()
    if not R.is_unit(dd):
        raise NotOfType("divided discriminant is not a unit")
    gens = [module.basis_vec(i) for i in range(d)]
    if module.has_phi:
        pairs, mid, gamma = _split_refined(module, gens)
        target = standard_module(d, "std-phi", module.params)
    else:
        pairs, mid, gamma = _split_plain(module, gens)
        target = standard_module(d, "std-q", module.params)
    m = d // 2
    cols = [None] * d
    for k, (v, w) in enumerate(pairs):
        cols[k] = v
        cols[d - 1 - k] = _scale_vec(R, gamma, w)
    cols[m] = mid
    rows = [[R.zero] * (2 * d) for _ in range(2 * d)]
    for j, col in enumerate(cols):
        shifted = module.pi_coords(col)
        for i in range(2 * d):
            rows[i][j] = col[i]
            rows[i][d + j] = shifted[i]
    sim = Similitude(_mat(rows), gamma)
    if not check_similitude(target, module, sim):
        raise RuntimeError("normal form verification failed")
    return sim, gamma


# ---------------------------------------------------------------------------
# similitude equations


def similitude_equations(n: int, variant: str, params: RingParams) -> Ideal:
    """The polynomial system cutting out the similitude group scheme.

    Variables are the 4n^2 matrix entries ``p_i_j`` together with the
    multiplier ``gamma``.  Generators: the Gram congruence, commutation
    with the uniformizer action, preservation of the quadratic values on
    basis columns (a genuine extra condition in residue characteristic
    two), and for the refined variant the refined Gram congruence."""
    if variant not in ("lattice-m", "lattice-0"):
        raise ValueError("variant must be 'lattice-m' or 'lattice-0'")
    if not isinstance(params.ring, FieldRing):
        raise UnsupportedRing("similitude equations are generated over a field")
    module = standard_module(n, variant, params)
    size = 2 * n
    names = [f"p_{i}_{j}" for i in range(1, size + 1) for j in range(1, size + 1)]
    names.append("gamma")
    ring = PolyRing(params.ring.field, tuple(names))
    gamma = ring.gen("gamma")
    P = [[ring.gen(f"p_{i + 1}_{j + 1}") for j in range(size)] for i in range(size)]

    def const_mat(M):
        return [[ring.const(v) for v in row] for row in M]

    def pmul(X, Y):
        out = []
        for xr in X:
            row = []
            for j in range(len(Y[0])):
                acc = ring.zero()
                for k, xv in enumerate(xr):
                    acc = acc + xv * Y[k][j]
                row.append(acc)
            out.append(row)
        return out

    eqs = []
    pt = [list(r) for r in zip(*P)]
    gram = const_mat(module.gram)
    congr = pmul(pt, pmul(gram, P))
    for i in range(size):
        for j in range(size):
            eqs.append(congr[i][j] - gamma * gram[i][j])
    pimat = const_mat(module.pi_matrix())
    comm_l = pmul(P, pimat)
    comm_r = pmul(pimat, P)
    for i in range(size):
        for j in range(size):
            eqs.append(comm_l[i][j] - comm_r[i][j])
    if variant == "lattice-0":
        refined = const_mat(module.gram_phi)
        congr = pmul(pt, pmul(refined, P))
        for i in range(size):
            for j in range(size):
                eqs.append(congr[i][j] - gamma * refined[i][j])
    for j in range(n):
        col = [P[i][j] for i in range(size)]
        eqs.append(_q_poly(ring, module, col) - gamma * ring.const(module.a[j][j]))
    return Ideal(ring, [e for e in eqs if not e.is_zero()])


def _q_poly(ring: PolyRing, module: HermQuadModule, col):
    """The quadratic value of a column of variables, as a polynomial."""
    d = module.d
    head, tail = col[:d], col[d:]

    def half(y):
        acc = ring.zero()
        for i in range(d):
            acc = acc + y[i] * y[i] * ring.const(module.a[i][i])
            for j in range(i + 1, d):
                acc = acc + y[i] * y[j] * ring.const(module.a[i][j])
        return acc

    acc = half(head)
    for i in range(d):
        for j in range(d):
            acc = acc + head[i] * tail[j] * ring.const(module.b[i][j])
    return acc + ring.const(module.params.pi0) * half(tail)
