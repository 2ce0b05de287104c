"""Diagonal lattices, apartment norms, and graded lattice chains for an odd
rank hermitian space over a ramified quadratic 2-adic extension.

The hermitian space of rank ``n = 2m+1`` carries the split form
``h(x, y) = sum_i x_i * conj(y_{n+1-i})`` on the basis ``e_1..e_n``.  The
preferred working frame is the split-standard one

    ``f_i = e_i`` for ``i <= m+1``, ``f_j = lambda * e_j`` for ``j >= m+2``,

where ``lambda + conj(lambda) = 1`` and ``delta = w(lambda)``.  A vertex norm
assigns value ``delta/2`` to every split-standard frame vector; that zero
deviation norm is the origin of the apartment coordinates used here.

Apartment norms are stored as a slot vector: side slots hold the deviation of
the norm value from ``delta/2`` (``alpha(f_i) = delta/2 + s_i``), the middle
slot holds the literal value ``alpha(f_{m+1})``.  With these coordinates the
plain dual reflects side slots (``s_i -> -s_{n+1-i}``) and negates the middle
value, so a norm is self-dual iff the sides are antisymmetric and the middle
value is 0; the building involution instead reflects the middle value around
``delta/2``, so its fixed maxi-minorant norms keep the middle at ``delta/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .qext import FElement, QuadExtension, Rat, lambda_delta, val2

Vec = tuple[FElement, ...]


def _frac(x: Rat) -> Fraction:
    return Fraction(x)


def _ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


@dataclass(frozen=True)
class HermitianSpace:
    """Odd rank split hermitian space with antidiagonal unit form."""

    m: int
    ext: QuadExtension

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ValueError("m must be nonnegative")

    @property
    def n(self) -> int:
        return 2 * self.m + 1

    @property
    def delta(self) -> Fraction:
        return lambda_delta(self.ext).delta

    def zero_vec(self) -> Vec:
        z = self.ext.from_base(0)
        return tuple(z for _ in range(self.n))

    def basis_vector(self, i: int, scale: Optional[FElement] = None) -> Vec:
        """e_i (1-indexed), optionally scaled."""
        one = self.ext.one() if scale is None else scale
        z = self.ext.from_base(0)
        return tuple(one if j == i - 1 else z for j in range(self.n))

    def h(self, x: Vec, y: Vec) -> FElement:
        """h(x, y) = sum_i x_i * conj(y_{n+1-i}); linear in x."""
        n = self.n
        acc = self.ext.from_base(0)
        for i in range(n):
            acc = acc + x[i] * y[n - 1 - i].conj()
        return acc

    def s(self, x: Vec, y: Vec) -> Fraction:
        """The trace pairing s(x, y) = epsilon^-1 * Tr h(x, y), valued in F0."""
        return self.h(x, y).trace() / self.ext.epsilon

    def split_frame(self) -> "Frame":
        lam = lambda_delta(self.ext).lam
        cols = []
        for i in range(1, self.n + 1):
            scale = None if i <= self.m + 1 else lam
            cols.append(self.basis_vector(i, scale))
        return Frame(self, "split-std", tuple(cols))

    def plain_frame(self) -> "Frame":
        cols = tuple(self.basis_vector(i) for i in range(1, self.n + 1))
        return Frame(self, "plain", cols)


@dataclass(frozen=True)
class Frame:
    """A basis of the hermitian space, columns given in e-coordinates."""

    space: HermitianSpace
    tag: str
    cols: tuple[Vec, ...]

    def __post_init__(self) -> None:
        if len(self.cols) != self.space.n:
            raise ValueError("frame must have n vectors")

    def gram(self) -> tuple[tuple[FElement, ...], ...]:
        return tuple(
            tuple(self.space.h(ci, cj) for cj in self.cols) for ci in self.cols
        )

    def partner_map(self) -> tuple[int, ...]:
        """For a monomial Gram, the unique pairing partner of each slot.

        Raises ValueError when some row has zero or several nonzero entries
        (the frame is not diagonal for the purposes of duality)."""
        g = self.gram()
        n = self.space.n
        partners = []
        for i in range(n):
            nz = [j for j in range(n) if not g[i][j].is_zero()]
            if len(nz) != 1:
                raise ValueError(
                    "non-diagonal frame: slot %d pairs with %d slots" % (i + 1, len(nz))
                )
            partners.append(nz[0])
        for i, j in enumerate(partners):
            if partners[j] != i:
                raise ValueError("non-diagonal frame: pairing is not involutive")
        return tuple(partners)


@dataclass(frozen=True)
class DiagonalLattice:
    """O_F-lattice spanned by pi^{exps[i]} * frame vector i.

    Exponents are integers; the w-valuation of the i-th generator scale is
    ``exps[i]/2``."""

    frame: Frame
    exps: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.exps) != self.frame.space.n:
            raise ValueError("need one exponent per frame slot")
        if not all(isinstance(k, int) for k in self.exps):
            raise ValueError("exponents must be integers (pi powers)")

    def generators(self) -> tuple[Vec, ...]:
        ext = self.frame.space.ext
        pi = ext.pi()
        out = []
        for k, col in zip(self.exps, self.frame.cols):
            sc = pi**k
            out.append(tuple(sc * c for c in col))
        return tuple(out)

    def scaled(self, j: int) -> "DiagonalLattice":
        return DiagonalLattice(self.frame, tuple(k + j for k in self.exps))

    def contains(self, other: "DiagonalLattice") -> bool:
        if self.frame is not other.frame and self.frame != other.frame:
            raise ValueError("lattices must share a frame")
        return all(a <= b for a, b in zip(self.exps, other.exps))


def standard_lattice(space: HermitianSpace, i: int, prime: bool = False) -> DiagonalLattice:
    """The i-th standard lattice (0 <= i <= m) in the split frame, or its
    companion (prime=True) differing in the last i slots by one pi power."""
    if not 0 <= i <= space.m:
        raise ValueError("index out of range")
    frame = space.split_frame()
    n = space.n
    if not prime:
        exps = tuple(-1 if j < i else 0 for j in range(n))
    else:
        exps = tuple(1 if j >= n - i else 0 for j in range(n))
    return DiagonalLattice(frame, exps)


def dual_lattice(lat: DiagonalLattice, pairing: str = "h") -> DiagonalLattice:
    """Dual lattice {x : pairing(x, L) integral}; pairing "h" or "s"."""
    if pairing not in ("h", "s"):
        raise ValueError("pairing must be 'h' or 's'")
    frame = lat.frame
    space = frame.space
    partners = frame.partner_map()
    g = frame.gram()
    exps = []
    for i in range(space.n):
        j = partners[i]
        gv = g[i][j].valuation()
        if gv == math.inf:
            raise ValueError("degenerate pairing slot")
        exps.append(-lat.exps[j] - int(2 * gv))
    out = DiagonalLattice(frame, tuple(exps))
    if pairing == "s" and space.ext.ext_type == "RP":
        out = out.scaled(-1)
    return out


def norm_ideal(lat: DiagonalLattice) -> Fraction:
    """Valuation of the ideal of O_F0 generated by h(x, x) for x in L.

    Generated by the diagonal Gram values together with the traces of the
    off-diagonal ones."""
    gens = lat.generators()
    space = lat.frame.space
    vals = []
    for i in range(len(gens)):
        d = space.h(gens[i], gens[i])
        # hermitian diagonal values are rational
        assert d.b == 0
        if d.a != 0:
            vals.append(val2(d.a))
        for j in range(i + 1, len(gens)):
            tr = space.h(gens[i], gens[j]).trace()
            if tr != 0:
                vals.append(val2(tr))
    if not vals:
        return math.inf  # type: ignore[return-value]
    return min(vals)


def hyperbolic_plane_norm_ideal(ext: QuadExtension, i: int = 0) -> Fraction:
    """Valuation of the norm ideal of the rank-2 hyperbolic plane with
    pairing value pi^i: the ideal generated by Tr(pi^i) and Tr(pi^{i+1})."""
    pi = ext.pi()
    vals = []
    for k in (i, i + 1):
        tr = (pi**k).trace()
        if tr != 0:
            vals.append(val2(tr))
    if not vals:
        return math.inf  # type: ignore[return-value]
    return min(vals)


@dataclass(frozen=True)
class HyperbolicCheck:
    modular: bool
    norm_ideal_valuation: Fraction
    target_valuation: Fraction

    @property
    def hyperbolic(self) -> bool:
        return self.modular and self.norm_ideal_valuation == self.target_valuation


def is_hyperbolic(
    gram: Sequence[Sequence[FElement]], ext: QuadExtension, i: int = 0
) -> HyperbolicCheck:
    """Whether a rank-2 lattice with the given h-Gram is the standard
    pi^i-modular hyperbolic plane: pi^i-modularity plus equality of norm
    ideals characterizes it."""
    if len(gram) != 2 or any(len(row) != 2 for row in gram):
        raise ValueError("expected a 2x2 Gram matrix")
    det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0]
    entry_ok = all(
        g.valuation() >= Fraction(i, 2) for row in gram for g in row if not g.is_zero()
    )
    modular = entry_ok and det.valuation() == Fraction(i, 1)
    vals = []
    for a in range(2):
        d = gram[a][a]
        assert d.b == 0
        if d.a != 0:
            vals.append(val2(d.a))
    tr = gram[0][1].trace()
    if tr != 0:
        vals.append(val2(tr))
    nval = min(vals) if vals else math.inf
    return HyperbolicCheck(
        modular=modular,
        norm_ideal_valuation=nval,  # type: ignore[arg-type]
        target_valuation=hyperbolic_plane_norm_ideal(ext, i),
    )


@dataclass(frozen=True)
class ApartmentNorm:
    """A norm split by a frame, stored as the slot vector described in the
    module docstring (side deviations from delta/2, literal middle value)."""

    frame: Frame
    slots: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "slots", tuple(Fraction(s) for s in self.slots))
        if len(self.slots) != self.frame.space.n:
            raise ValueError("need one slot per frame vector")

    @staticmethod
    def standard(space: HermitianSpace, sides: Sequence[Rat], middle: Optional[Rat] = None) -> "ApartmentNorm":
        """Norm on the split frame from side deviations (length n with the
        middle entry ignored, or length n-1 without it)."""
        n, m = space.n, space.m
        sides = [Fraction(s) for s in sides]
        if len(sides) == n - 1:
            sides = sides[:m] + [Fraction(0)] + sides[m:]
        if len(sides) != n:
            raise ValueError("expected n or n-1 side deviations")
        mid = space.delta / 2 if middle is None else Fraction(middle)
        slots = tuple(sides[:m]) + (mid,) + tuple(sides[m + 1:])
        return ApartmentNorm(space.split_frame(), slots)

    @staticmethod
    def from_values(frame: Frame, values: Sequence[Rat]) -> "ApartmentNorm":
        """Norm from explicit values alpha(f_i) on an arbitrary frame."""
        space = frame.space
        vals = [Fraction(v) for v in values]
        if frame.tag == "split-std":
            half = space.delta / 2
            m = space.m
            slots = tuple(
                v - half if i != m else v for i, v in enumerate(vals)
            )
            return ApartmentNorm(frame, slots)
        return ApartmentNorm(frame, tuple(vals))

    @property
    def is_standard_frame(self) -> bool:
        return self.frame.tag == "split-std"

    def values(self) -> tuple[Fraction, ...]:
        """Norm values alpha(f_i) on the frame vectors."""
        if not self.is_standard_frame:
            return self.slots
        half = self.frame.space.delta / 2
        m = self.frame.space.m
        return tuple(
            s + half if i != m else s for i, s in enumerate(self.slots)
        )

    def __call__(self, coeffs: Sequence[FElement]) -> Fraction:
        """alpha(sum x_i f_i) = min_i (w(x_i) + alpha(f_i))."""
        vals = self.values()
        best = math.inf
        for x, a in zip(coeffs, vals):
            if x.is_zero():
                continue
            best = min(best, x.valuation() + a)
        return best  # type: ignore[return-value]

    def dual(self) -> "ApartmentNorm":
        """Plain dual norm alpha^vee(f_i) = w(g_{i,p(i)}) - alpha(f_{p(i)})."""
        partners = self.frame.partner_map()
        g = self.frame.gram()
        vals = self.values()
        dual_vals = []
        for i in range(self.frame.space.n):
            j = partners[i]
            dual_vals.append(g[i][j].valuation() - vals[j])
        return ApartmentNorm.from_values(self.frame, dual_vals)

    def sigma(self) -> "ApartmentNorm":
        """Building involution on the standard apartment: side slots reflect,
        the middle value reflects around delta/2."""
        if not self.is_standard_frame:
            raise ValueError("sigma acts on standard-frame norms only")
        space = self.frame.space
        n, m = space.n, space.m
        out = [Fraction(0)] * n
        for i in range(n):
            if i == m:
                out[i] = space.delta - self.slots[i]
            else:
                out[i] = -self.slots[n - 1 - i]
        return ApartmentNorm(self.frame, tuple(out))

    def is_maximinorant(self) -> bool:
        """Antisymmetric side deviations with the middle pinned at delta/2
        (the sigma-fixed norms coming from the apartment construction)."""
        if not self.is_standard_frame:
            return False
        space = self.frame.space
        n, m = space.n, space.m
        if self.slots[m] != space.delta / 2:
            return False
        return all(
            self.slots[i] == -self.slots[n - 1 - i] for i in range(n) if i != m
        )

    def is_special(self) -> bool:
        """Maxi-minorant with all side deviations of one magnitude C in
        (1/4) Z."""
        if not self.is_maximinorant():
            return False
        m = self.frame.space.m
        mags = {abs(s) for i, s in enumerate(self.slots) if i != m}
        if len(mags) > 1:
            return False
        c = mags.pop() if mags else Fraction(0)
        return (4 * c).denominator == 1

    def is_selfdual(self) -> bool:
        return self.values() == self.dual().values()


@dataclass(frozen=True)
class GradedLatticeChain:
    """One period of a graded chain of lattices, members sorted by grading.

    Each member is (exponent vector, grading); gradings lie in [0, 1/2) up
    to the leading member and have denominator dividing 4.  Scaling by pi
    shifts exponents by 1 and gradings by 1/2."""

    frame: Frame
    members: tuple[tuple[tuple[int, ...], Fraction], ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("chain needs at least one member")
        for exps, c in self.members:
            if len(exps) != self.frame.space.n:
                raise ValueError("member exponent length mismatch")
            if Fraction(c).denominator not in (1, 2, 4):
                raise ValueError("grading denominators must divide 4")

    @property
    def rank(self) -> int:
        return len(self.members)

    def lattices(self) -> tuple[DiagonalLattice, ...]:
        return tuple(DiagonalLattice(self.frame, exps) for exps, _ in self.members)


def norm_to_chain(norm: ApartmentNorm) -> GradedLatticeChain:
    """The graded chain L_{alpha,r} = {x : alpha(x) >= r} with grading
    c(L) = inf alpha over L, one period, normalized to gradings in [0, 1/2)."""
    vals = norm.values()
    n = len(vals)
    residues = sorted({_mod_half(v) for v in vals})
    norm_members = []
    for rho in residues:
        exps = [_ceil_frac(2 * (rho - vals[i])) for i in range(n)]
        c = min(vals[i] + Fraction(exps[i], 2) for i in range(n))
        j = _shift_to_unit(c)
        norm_members.append((tuple(k + j for k in exps), c + Fraction(j, 2)))
    norm_members.sort(key=lambda mc: mc[1])
    return GradedLatticeChain(norm.frame, tuple(norm_members))


def _floor_half(x: Fraction) -> int:
    """floor(x / (1/2)) convenience."""
    y = 2 * x
    return y.numerator // y.denominator


def _mod_half(x: Fraction) -> Fraction:
    return x - Fraction(_floor_half(x), 2)


def _shift_to_unit(c: Fraction) -> int:
    """Integer j with c + j/2 in [0, 1/2)."""
    return -_floor_half(c)


def chain_to_norm(chain: GradedLatticeChain) -> ApartmentNorm:
    """Inverse dictionary: alpha(x) = sup {c(L) : x in L} over the chain."""
    n = chain.frame.space.n
    vals = []
    for i in range(n):
        vals.append(max(c - Fraction(exps[i], 2) for exps, c in chain.members))
    return ApartmentNorm.from_values(chain.frame, vals)


def chain_gradings_of_lattice(chain: GradedLatticeChain, lat: DiagonalLattice) -> Optional[Fraction]:
    """Grading of a lattice if it is a member of the chain (up to pi-scaling),
    else None."""
    for exps, c in chain.members:
        diffs = {a - b for a, b in zip(lat.exps, exps)}
        if len(diffs) == 1:
            j = diffs.pop()
            return c + Fraction(j, 2)
    return None


def chain_direct_sum(a: ApartmentNorm, b: ApartmentNorm, frame: Frame) -> GradedLatticeChain:
    """Chain of the direct sum norm; the frame must concatenate the inputs."""
    vals = a.values() + b.values()
    return norm_to_chain(ApartmentNorm.from_values(frame, vals))
