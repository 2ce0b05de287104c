"""Arithmetic in wildly ramified quadratic extensions of 2-adic fields.

A quadratic extension F of a 2-adic base field F0 is presented by a
uniformizer pi with minimal polynomial ``pi^2 - t*pi + pi0`` over F0, where
``t = pi + conj(pi)`` and ``pi0 = pi * conj(pi)``.  Two ramified families
occur in residue characteristic 2:

- type RU ("ramified unit"): F = F0(sqrt(theta)) for a unit theta, with
  ``theta = 1 - 4*pi0/t**2`` and ``t*sqrt(theta) = t - 2*pi``;
- type RP ("ramified prime"): F = F0(sqrt of a uniformizer), with ``t = 0``
  and ``pi**2 = -pi0``.

Elements of F are pairs ``a + b*pi`` with exact rational coordinates.  The
valuation ``w`` is normalized so that ``w`` of a base uniformizer is 1 and
``w(pi) = 1/2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

Rat = Union[int, Fraction]


def val2(x: Rat) -> Fraction:
    """2-adic valuation of a rational number (``math.inf`` for zero)."""
    x = Fraction(x)
    if x == 0:
        return math.inf  # type: ignore[return-value]
    num, den = abs(x.numerator), x.denominator
    v = 0
    while num % 2 == 0:
        num //= 2
        v += 1
    while den % 2 == 0:
        den //= 2
        v -= 1
    return Fraction(v)


def _odd_part_mod8(x: Rat) -> int:
    """The odd part of a nonzero rational, reduced mod 8."""
    x = Fraction(x)
    num, den = abs(x.numerator), x.denominator
    while num % 2 == 0:
        num //= 2
    while den % 2 == 0:
        den //= 2
    # num/den mod 8 with den odd; den^-1 == den mod 8 for odd den.
    sign = 1 if x > 0 else -1
    return (sign * num * den) % 8


def is_square_q2(x: Rat) -> bool:
    """Whether a nonzero rational is a square in the 2-adic numbers."""
    v = val2(x)
    if v == math.inf:
        raise ValueError("zero has no square class")
    return v % 2 == 0 and _odd_part_mod8(x) == 1


@dataclass(frozen=True)
class BaseFieldSpec:
    """A 2-adic base field, either the concrete field Q2 or a generic one
    described by its ramification index e and residue degree f."""

    e: int = 1
    f: int = 1
    mode: str = "concrete-Q2"

    def __post_init__(self) -> None:
        if self.mode not in ("concrete-Q2", "generic-parameters"):
            raise ValueError(f"unknown base field mode: {self.mode!r}")
        if self.mode == "concrete-Q2" and (self.e, self.f) != (1, 1):
            raise ValueError("concrete-Q2 requires e = f = 1")
        if self.e < 1 or self.f < 1:
            raise ValueError("e and f must be positive")

    @property
    def degree(self) -> int:
        return self.e * self.f


Q2 = BaseFieldSpec()


@dataclass(frozen=True)
class ExtensionCensus:
    """Counts of quadratic extensions of a 2-adic field of degree d = e*f.

    ``square_classes`` is the order of the square class group E*/(E*)^2.
    ``total`` counts all quadratic extensions, split into ``rp`` (ramified,
    generated by a square root of a uniformizer times unit of odd valuation
    class), ``ru`` (ramified, generated by a unit square root), one
    unramified extension, and ``ru_matched`` counts the RU extensions whose
    trace and norm have equal valuation (w(t) = w(pi0))."""

    square_classes: int
    total: int
    rp: int
    ru: int
    unramified: int
    ru_matched: int
    representatives: Optional[tuple[tuple[int, str], ...]] = None


def classify_extensions(base: BaseFieldSpec = Q2) -> ExtensionCensus:
    """Census of quadratic extensions of the base field.

    >>> c = classify_extensions(Q2)
    >>> (c.total, c.rp, c.ru, c.ru_matched)
    (7, 4, 2, 2)
    """
    d = base.degree
    square_classes = 2 ** (2 + d)
    total = square_classes - 1
    rp = 2 ** (1 + d)
    ru = 2 ** (1 + d) - 2
    ru_matched = 2 ** (1 + base.f) - 2
    reps = None
    if base.mode == "concrete-Q2":
        # Square class representatives of Q2*/(Q2*)^2 other than 1.
        reps = (
            (3, "RU"),
            (7, "RU"),
            (5, "unramified"),
            (2, "RP"),
            (6, "RP"),
            (10, "RP"),
            (14, "RP"),
        )
    return ExtensionCensus(
        square_classes=square_classes,
        total=total,
        rp=rp,
        ru=ru,
        unramified=1,
        ru_matched=ru_matched,
        representatives=reps,
    )


@dataclass(frozen=True)
class QuadExtension:
    """A ramified quadratic extension F/F0 presented by (t, pi0).

    ``ext_type`` is "RU" or "RP"; ``t`` and ``pi0`` are exact rationals with
    ``t = 0`` exactly in the RP case.  ``theta`` (RU only) is the unit
    ``1 - 4*pi0/t**2`` with ``F = F0(sqrt(theta))``.  ``epsilon`` is the
    scaling unit of the trace pairing value line: ``t`` for RU, ``2`` for RP.
    ``precision`` is the default bit budget for truncated computations
    elsewhere in the package."""

    ext_type: str
    t: Fraction
    pi0: Fraction
    base: BaseFieldSpec = Q2
    precision: int = 64

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", Fraction(self.t))
        object.__setattr__(self, "pi0", Fraction(self.pi0))
        if self.ext_type not in ("RU", "RP"):
            raise ValueError(f"unknown extension type: {self.ext_type!r}")
        if self.ext_type == "RP":
            if self.t != 0:
                raise ValueError("RP extensions have t = 0")
        else:
            if self.t == 0:
                raise ValueError("RU extensions have t != 0")
        if self.base.mode == "concrete-Q2":
            if val2(self.pi0) != 1:
                raise ValueError("pi0 must have valuation 1 over Q2")
            if self.ext_type == "RU":
                # pi0 divides t divides 2; over Q2 both endpoints force v(t) = 1.
                if val2(self.t) != 1:
                    raise ValueError("t must have valuation 1 over Q2")
                th = self.theta
                if th is None or val2(th) != 0 or is_square_q2(th):
                    raise ValueError("theta = 1 - 4*pi0/t^2 must be a nonsquare unit")

    @property
    def theta(self) -> Optional[Fraction]:
        if self.ext_type != "RU":
            return None
        return 1 - 4 * self.pi0 / self.t**2

    @property
    def epsilon(self) -> Fraction:
        return self.t if self.ext_type == "RU" else Fraction(2)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def ru(t: Rat, pi0: Rat, base: BaseFieldSpec = Q2, precision: int = 64) -> "QuadExtension":
        return QuadExtension("RU", Fraction(t), Fraction(pi0), base, precision)

    @staticmethod
    def rp(pi0: Rat, base: BaseFieldSpec = Q2, precision: int = 64) -> "QuadExtension":
        return QuadExtension("RP", Fraction(0), Fraction(pi0), base, precision)

    @staticmethod
    def rp_from_sqrt(d: Rat, base: BaseFieldSpec = Q2, precision: int = 64) -> "QuadExtension":
        """The extension generated by a square root of d (pi^2 = d)."""
        return QuadExtension.rp(-Fraction(d), base, precision)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        out: dict = {"base": "Q2" if self.base.mode == "concrete-Q2" else "generic",
                     "type": self.ext_type, "precision": self.precision}
        if self.ext_type == "RU":
            out["theta"] = str(self.theta)
            out["t"] = str(self.t)
            out["pi0"] = str(self.pi0)
        else:
            out["pi0"] = str(self.pi0)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_dict(data: dict) -> "QuadExtension":
        base = Q2 if data.get("base", "Q2") == "Q2" else BaseFieldSpec(mode="generic-parameters")
        prec = int(data.get("precision", 64))
        if data["type"] == "RP":
            return QuadExtension.rp(Fraction(data["pi0"]), base, prec)
        if "t" in data:
            return QuadExtension.ru(Fraction(data["t"]), Fraction(data["pi0"]), base, prec)
        return eisenstein_params(Fraction(data["theta"]), base).extension

    # -- derived elements --------------------------------------------------

    def pi(self) -> "FElement":
        return FElement(self, 0, 1)

    def pibar(self) -> "FElement":
        return FElement(self, self.t, -1)

    def sqrt_theta(self) -> "FElement":
        """sqrt(theta) = 1 - 2*pi/t as an element of F (RU only)."""
        if self.ext_type != "RU":
            raise ValueError("sqrt(theta) is defined for RU extensions only")
        return FElement(self, 1, Fraction(-2, 1) / self.t)

    def one(self) -> "FElement":
        return FElement(self, 1, 0)

    def from_base(self, a: Rat) -> "FElement":
        return FElement(self, Fraction(a), 0)


@dataclass(frozen=True)
class FElement:
    """An element a + b*pi of the quadratic extension, exact rationals."""

    ext: QuadExtension
    a: Fraction
    b: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))

    # -- ring structure ----------------------------------------------------

    def __add__(self, other: "FElement") -> "FElement":
        other = self._coerce(other)
        return FElement(self.ext, self.a + other.a, self.b + other.b)

    def __sub__(self, other: "FElement") -> "FElement":
        other = self._coerce(other)
        return FElement(self.ext, self.a - other.a, self.b - other.b)

    def __neg__(self) -> "FElement":
        return FElement(self.ext, -self.a, -self.b)

    def __mul__(self, other: Union["FElement", Rat]) -> "FElement":
        if isinstance(other, (int, Fraction)):
            return FElement(self.ext, self.a * other, self.b * other)
        other = self._coerce(other)
        t, pi0 = self.ext.t, self.ext.pi0
        a, b, c, d = self.a, self.b, other.a, other.b
        # (a + b*pi)(c + d*pi) with pi^2 = t*pi - pi0
        return FElement(self.ext, a * c - b * d * pi0, a * d + b * c + b * d * t)

    __rmul__ = __mul__

    def __truediv__(self, other: Union["FElement", Rat]) -> "FElement":
        if isinstance(other, (int, Fraction)):
            return FElement(self.ext, self.a / other, self.b / other)
        return self * other.inverse()

    def __pow__(self, k: int) -> "FElement":
        if k < 0:
            return self.inverse() ** (-k)
        out = self.ext.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def _coerce(self, other: Union["FElement", Rat]) -> "FElement":
        if isinstance(other, (int, Fraction)):
            return FElement(self.ext, Fraction(other), 0)
        if other.ext != self.ext:
            raise ValueError("elements belong to different extensions")
        return other

    # -- Galois structure --------------------------------------------------

    def conj(self) -> "FElement":
        """The nontrivial Galois conjugate a + b*conj(pi) = (a + b*t) - b*pi."""
        return FElement(self.ext, self.a + self.b * self.ext.t, -self.b)

    def trace(self) -> Fraction:
        return 2 * self.a + self.b * self.ext.t

    def norm(self) -> Fraction:
        t, pi0 = self.ext.t, self.ext.pi0
        return self.a**2 + self.a * self.b * t + self.b**2 * pi0

    def valuation(self) -> Fraction:
        """w(x) = (1/2) * val2(norm(x)); normalized so w(pi) = 1/2."""
        n = self.norm()
        if n == 0:
            return math.inf  # type: ignore[return-value]
        return Fraction(val2(n), 2)

    def inverse(self) -> "FElement":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("element is zero")
        return self.conj() / n

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {"a": str(self.a), "b": str(self.b)}

    @staticmethod
    def from_dict(ext: QuadExtension, data: dict) -> "FElement":
        return FElement(ext, Fraction(data["a"]), Fraction(data["b"]))

    def __repr__(self) -> str:
        return f"FElement({self.a!s} + {self.b!s}*pi)"


@dataclass(frozen=True)
class EisensteinParams:
    """Output of :func:`eisenstein_params`: the level data of a unit theta
    and the resulting extension presentation."""

    level: int
    i: int
    u: Fraction
    t: Fraction
    pi0: Fraction
    ord_t: Fraction
    pi_description: str
    extension: QuadExtension


def eisenstein_params(theta: Rat, base: BaseFieldSpec = Q2) -> EisensteinParams:
    """Presentation data of the RU extension generated by sqrt(theta).

    Writing ``theta = 1 + 2**level * u`` with u a unit and odd level
    ``2*i - 1``, the uniformizer is ``pi = (1 - sqrt(theta)) / 2**(i-1)``
    with ``t = 2**(2-i)`` and ``pi0 = -2*u`` over Q2 (e = 1 forces i = 1).

    >>> p = eisenstein_params(3)
    >>> (p.t, p.pi0, p.pi_description)
    (Fraction(2, 1), Fraction(-2, 1), '(1 - sqrt(3))')
    """
    if base.mode != "concrete-Q2":
        raise NotImplementedError("eisenstein_params handles the concrete base Q2")
    theta = Fraction(theta)
    if val2(theta) != 0:
        raise ValueError("theta must be a 2-adic unit")
    if is_square_q2(theta):
        raise ValueError("square class trivial: theta is a 2-adic square")
    e = base.e
    level_f = val2(theta - 1)
    level = int(level_f)
    if level >= 2 * e + 1:
        # theta = 1 mod 2^{2e+1} is a square (covered above), defensive only.
        raise ValueError("square class trivial: theta is a 2-adic square")
    if level % 2 == 0:
        raise ValueError("even level: sqrt(theta) generates the unramified extension")
    i = (level + 1) // 2
    u = (theta - 1) / Fraction(2) ** level
    t = Fraction(2) ** (2 - i)
    pi0 = -2 * u
    ext = QuadExtension.ru(t, pi0, base)
    if i == 1:
        desc = f"(1 - sqrt({theta}))"
    else:
        desc = f"(1 - sqrt({theta}))/2^{i - 1}"
    return EisensteinParams(
        level=level, i=i, u=u, t=t, pi0=pi0,
        ord_t=Fraction(e + 1 - i), pi_description=desc, extension=ext,
    )


@dataclass(frozen=True)
class InverseDifferent:
    """The inverse different of F/F0 as a principal fractional ideal:
    generator description and its valuation exponent (w-normalized)."""

    generator: str
    exponent: Fraction


def inverse_different(ext: QuadExtension) -> InverseDifferent:
    """Inverse different: (1/t) O_F for RU, (1/(2 pi)) O_F for RP.

    >>> inverse_different(eisenstein_params(3).extension).exponent
    Fraction(-1, 1)
    >>> inverse_different(QuadExtension.rp_from_sqrt(2)).exponent
    Fraction(-3, 2)
    """
    if ext.ext_type == "RU":
        return InverseDifferent("1/t", -val2(ext.t))
    e = val2(2) if ext.base.mode == "concrete-Q2" else Fraction(ext.base.e)
    return InverseDifferent("1/(2*pi)", -(Fraction(e) + Fraction(1, 2)))


@dataclass(frozen=True)
class LambdaDelta:
    """The balancing element lambda with lambda + conj(lambda) = 1, and its
    valuation delta = w(lambda)."""

    lam: FElement
    delta: Fraction


def lambda_delta(ext: QuadExtension) -> LambdaDelta:
    """lambda = conj(pi)/t for RU, 1/2 for RP; delta = w(lambda).

    >>> lambda_delta(eisenstein_params(3).extension).delta
    Fraction(-1, 2)
    >>> lambda_delta(QuadExtension.rp_from_sqrt(2)).delta
    Fraction(-1, 1)
    """
    if ext.ext_type == "RU":
        lam = ext.pibar() / ext.t
    else:
        lam = FElement(ext, Fraction(1, 2), 0)
    return LambdaDelta(lam=lam, delta=lam.valuation())
