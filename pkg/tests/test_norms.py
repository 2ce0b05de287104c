"""Tests for lattices, apartment norms, and graded chains."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lmtool.qext import FElement, QuadExtension, eisenstein_params
from lmtool.norms import (
    ApartmentNorm,
    DiagonalLattice,
    Frame,
    HermitianSpace,
    chain_to_norm,
    chain_gradings_of_lattice,
    dual_lattice,
    hyperbolic_plane_norm_ideal,
    is_hyperbolic,
    norm_ideal,
    norm_to_chain,
    standard_lattice,
)

EXT_RU = eisenstein_params(3).extension            # t = 2, pi0 = -2
EXT_RU_PAPER = QuadExtension.ru(-2, -2)            # t = -2, pi0 = -2 (sqrt(3)-1)
EXT_RP = QuadExtension.rp_from_sqrt(2)             # pi^2 = 2

SP_RU = HermitianSpace(1, EXT_RU)
SP_RP = HermitianSpace(1, EXT_RP)


def test_h_is_hermitian_antidiagonal():
    sp = SP_RU
    e = [sp.basis_vector(i) for i in range(1, 4)]
    for i in range(3):
        for j in range(3):
            v = sp.h(e[i], e[j])
            if i + j == 2:
                assert v == EXT_RU.one()
            else:
                assert v.is_zero()
    x = tuple(FElement(EXT_RU, 1, 1) * c for c in e[0])
    assert sp.h(x, e[2]) == FElement(EXT_RU, 1, 1)
    assert sp.h(e[2], x) == FElement(EXT_RU, 1, 1).conj()


def test_split_frame_gram_monomial():
    for sp in (SP_RU, SP_RP):
        fr = sp.split_frame()
        assert fr.partner_map() == (2, 1, 0)
        g = fr.gram()
        assert g[1][1] == sp.ext.one()
        assert g[0][2].valuation() == sp.delta
        assert g[2][0].valuation() == sp.delta


def test_standard_lattices_and_duals_ru():
    sp = SP_RU
    lam0 = standard_lattice(sp, 0)
    lam1 = standard_lattice(sp, 1)
    lam1p = standard_lattice(sp, 1, prime=True)
    assert lam0.exps == (0, 0, 0)
    assert lam1.exps == (-1, 0, 0)
    assert lam1p.exps == (0, 0, 1)
    # h-dual of the base vertex lattice sits strictly inside it
    d0 = dual_lattice(lam0, "h")
    assert d0.exps == (1, 0, 1)
    assert lam0.contains(d0)
    # trace dual agrees with the h-dual for RU
    assert dual_lattice(lam0, "s").exps == d0.exps
    # self-dual sandwich: Lambda_0^s < Lambda_0 < (pibar/t) Lambda_0^s
    assert DiagonalLattice(lam0.frame, (0, -1, 0)).contains(lam0)
    # Lambda_m sandwich: Lambda_m^s < Lambda_m < (1/t) Lambda_m^s
    dm = dual_lattice(lam1, "s")
    assert dm.exps == (1, 0, 2)
    assert lam1.contains(dm)
    assert DiagonalLattice(lam1.frame, (-1, -2, 0)).contains(lam1)


def test_standard_lattices_and_duals_rp():
    sp = SP_RP
    lam0 = standard_lattice(sp, 0)
    lam1 = standard_lattice(sp, 1)
    s0 = dual_lattice(lam0, "s")
    s1 = dual_lattice(lam1, "s")
    assert s0.exps == (1, -1, 1)
    assert s1.exps == (1, -1, 2)
    # pi * Lambda_0^s < Lambda_0 < (pi/2) Lambda_0^s
    assert lam0.contains(s0.scaled(1))
    assert DiagonalLattice(lam0.frame, tuple(k - 1 for k in s0.exps)).contains(lam0)
    # pi * Lambda_m^s < Lambda_m < (1/2) Lambda_m^s
    assert lam1.contains(s1.scaled(1))
    assert DiagonalLattice(lam1.frame, tuple(k - 2 for k in s1.exps)).contains(lam1)


def test_dual_requires_monomial_gram():
    sp = SP_RU
    e1 = sp.basis_vector(1)
    e2 = sp.basis_vector(2)
    mix = tuple(a + b for a, b in zip(sp.basis_vector(1), sp.basis_vector(3)))
    bad = Frame(sp, "custom", (e1, e2, mix))
    with pytest.raises(ValueError, match="non-diagonal"):
        dual_lattice(DiagonalLattice(bad, (0, 0, 0)))


def nonsplit_frame(sp: HermitianSpace) -> Frame:
    """f1 = pi^-1 (e1 + e3), f2 = e2, f3 = pi^-1 (e1 - e3)."""
    ext = sp.ext
    ipi = ext.pi().inverse()
    e1, e2, e3 = (sp.basis_vector(i) for i in range(1, 4))
    f1 = tuple(ipi * (a + b) for a, b in zip(e1, e3))
    f3 = tuple(ipi * (a - b) for a, b in zip(e1, e3))
    return Frame(sp, "nonsplit", (f1, e2, f3))


def test_nonsplit_frame_gram_values():
    sp = HermitianSpace(1, EXT_RU_PAPER)
    fr = nonsplit_frame(sp)
    g = fr.gram()
    assert g[0][0] == EXT_RU_PAPER.from_base(-1)
    assert g[2][2] == EXT_RU_PAPER.one()
    assert g[1][1] == EXT_RU_PAPER.one()
    assert g[0][2].is_zero() and g[2][0].is_zero()


def test_nonsplit_plane_selfdual_but_not_hyperbolic():
    sp = HermitianSpace(1, EXT_RU_PAPER)
    fr = nonsplit_frame(sp)
    g = fr.gram()
    plane = [[g[0][0], g[0][2]], [g[2][0], g[2][2]]]
    chk = is_hyperbolic(plane, EXT_RU_PAPER, 0)
    assert chk.modular
    assert chk.norm_ideal_valuation == 0
    assert chk.target_valuation == 1
    assert not chk.hyperbolic
    # the rank-3 lattice on this frame has norm ideal O as well
    lat = DiagonalLattice(fr, (0, 0, 0))
    assert norm_ideal(lat) == 0
    assert dual_lattice(lat, "h").exps == (0, 0, 0)


def test_hyperbolic_plane_detected():
    ext = EXT_RU
    zero = ext.from_base(0)
    one = ext.one()
    plane = [[zero, one], [one, zero]]
    chk = is_hyperbolic(plane, ext, 0)
    assert chk.modular and chk.hyperbolic
    assert hyperbolic_plane_norm_ideal(ext, 0) == 1


def test_vertex_norm_chain_v0():
    sp = SP_RU
    alpha = ApartmentNorm.standard(sp, [0, 0])
    assert alpha.is_maximinorant() and alpha.is_special()
    chain = norm_to_chain(alpha)
    assert chain.rank == 1
    lam0 = standard_lattice(sp, 0)
    assert chain_gradings_of_lattice(chain, lam0) == sp.delta / 2
    back = chain_to_norm(chain)
    assert back.values() == alpha.values()


def test_vertex_norm_chain_v1():
    sp = SP_RU
    alpha = ApartmentNorm.standard(sp, [Fraction(1, 4), Fraction(-1, 4)])
    assert alpha.is_maximinorant() and alpha.is_special()
    chain = norm_to_chain(alpha)
    assert chain.rank == 2
    lam1 = standard_lattice(sp, 1)
    lam1p = standard_lattice(sp, 1, prime=True)
    assert chain_gradings_of_lattice(chain, lam1) == sp.delta / 2 - Fraction(1, 4)
    assert chain_gradings_of_lattice(chain, lam1p) == sp.delta / 2
    # segment pi*Lambda_1 < Lambda_1' < Lambda_1
    assert lam1.contains(lam1p)
    assert lam1p.contains(lam1.scaled(1))
    back = chain_to_norm(chain)
    assert back.values() == alpha.values()


def test_nonsplit_norm_values_and_chain():
    sp = HermitianSpace(1, EXT_RU_PAPER)
    fr = nonsplit_frame(sp)
    q = Fraction(-1, 4)
    alpha = ApartmentNorm.from_values(fr, [q, q, q])
    assert not alpha.is_maximinorant()
    chain = norm_to_chain(alpha)
    assert chain.rank == 1
    lat = DiagonalLattice(fr, (0, 0, 0))
    assert chain_gradings_of_lattice(chain, lat) == Fraction(-1, 4)
    x = (EXT_RU_PAPER.one(), EXT_RU_PAPER.from_base(0), EXT_RU_PAPER.from_base(2))
    assert alpha(x) == Fraction(-1, 4)


def test_dual_and_sigma_norms():
    sp = SP_RU
    v0 = ApartmentNorm.standard(sp, [0, 0])
    assert v0.sigma().slots == v0.slots
    d = v0.dual()
    assert d.slots == (0, -sp.delta / 2, 0)
    assert not v0.is_selfdual()
    # plain self-duality holds iff sides antisymmetric and middle value 0
    flat = ApartmentNorm.standard(sp, [Fraction(1, 4), Fraction(-1, 4)], middle=0)
    assert flat.is_selfdual()
    assert not flat.is_maximinorant()
    # a sigma-fixed norm that is mm
    v1 = ApartmentNorm.standard(sp, [Fraction(1, 4), Fraction(-1, 4)])
    assert v1.sigma().slots == v1.slots
    # non-antisymmetric deviations are moved by sigma
    skew = ApartmentNorm.standard(sp, [Fraction(1, 4), Fraction(1, 4)])
    assert skew.sigma().slots != skew.slots
    assert not skew.is_maximinorant()


def test_special_requires_equal_magnitudes():
    sp = HermitianSpace(2, EXT_RU)
    a = ApartmentNorm.standard(sp, [Fraction(1, 4), Fraction(1, 2), Fraction(-1, 2), Fraction(-1, 4)])
    assert a.is_maximinorant()
    assert not a.is_special()
    b = ApartmentNorm.standard(sp, [Fraction(1, 4), Fraction(1, 4), Fraction(-1, 4), Fraction(-1, 4)])
    assert b.is_special()
    # denominators beyond 4 break the integrality condition
    c = ApartmentNorm.standard(SP_RU, [Fraction(1, 3), Fraction(-1, 3)])
    assert c.is_maximinorant()
    assert not c.is_special()


def chain_sup(chain, coeffs):
    """sup of c(L) + j/2 over members and integers j with x in pi^j L."""
    best = None
    for exps, c in chain.members:
        j = None
        for x, k in zip(coeffs, exps):
            if x.is_zero():
                continue
            room = int(2 * x.valuation()) - k
            j = room if j is None else min(j, room)
        if j is None:
            continue
        val = c + Fraction(j, 2)
        best = val if best is None else max(best, val)
    return best


def test_norm_evaluation_matches_chain_sup():
    sp = SP_RU
    alpha = ApartmentNorm.standard(sp, [Fraction(1, 4), Fraction(-1, 4)])
    chain = norm_to_chain(alpha)
    ext = sp.ext
    pts = [
        (ext.one(), ext.from_base(0), ext.from_base(0)),
        (ext.pi(), ext.one(), ext.from_base(2)),
        (ext.from_base(Fraction(1, 2)), ext.pi(), ext.one()),
        (ext.one(), ext.one(), ext.one()),
    ]
    for coeffs in pts:
        assert alpha(coeffs) == chain_sup(chain, coeffs)


quarter = st.integers(min_value=-6, max_value=6).map(lambda k: Fraction(k, 4))


@settings(max_examples=120, deadline=None)
@given(devs=st.lists(quarter, min_size=2, max_size=2))
def test_roundtrip_m1(devs):
    alpha = ApartmentNorm.standard(SP_RU, devs)
    back = chain_to_norm(norm_to_chain(alpha))
    assert back.values() == alpha.values()


@settings(max_examples=80, deadline=None)
@given(devs=st.lists(quarter, min_size=6, max_size=6))
def test_roundtrip_m3(devs):
    sp = HermitianSpace(3, EXT_RU)
    alpha = ApartmentNorm.standard(sp, devs)
    back = chain_to_norm(norm_to_chain(alpha))
    assert back.values() == alpha.values()
    assert norm_to_chain(alpha).rank == len({v % Fraction(1, 2) for v in alpha.values()})


@settings(max_examples=80, deadline=None)
@given(devs=st.lists(quarter, min_size=4, max_size=4))
def test_dual_is_involution_and_sigma_fixes_mm(devs):
    sp = HermitianSpace(2, EXT_RU)
    alpha = ApartmentNorm.standard(sp, devs)
    assert alpha.dual().dual().values() == alpha.values()
    assert alpha.sigma().sigma().slots == alpha.slots
    n = sp.n
    sym = [devs[0], devs[1], -devs[1], -devs[0]]
    beta = ApartmentNorm.standard(sp, sym)
    assert beta.is_maximinorant()
    assert beta.sigma().slots == beta.slots
    if beta.is_special():
        assert beta.is_maximinorant()


@settings(max_examples=60, deadline=None)
@given(devs=st.lists(quarter, min_size=2, max_size=2), shift=st.integers(-3, 3))
def test_chain_is_equivariant_under_global_shift(devs, shift):
    # raising every value by shift/2 rescales each member lattice by
    # pi^-shift and keeps the normalized gradings fixed
    sp = SP_RU
    alpha = ApartmentNorm.standard(sp, devs)
    chain = norm_to_chain(alpha)
    shifted_vals = [v + Fraction(shift, 2) for v in alpha.values()]
    beta = ApartmentNorm.from_values(sp.split_frame(), shifted_vals)
    chain2 = norm_to_chain(beta)
    assert [c for _, c in chain.members] == [c for _, c in chain2.members]
    for (e1, _), (e2, _) in zip(chain.members, chain2.members):
        assert tuple(a - shift for a in e1) == e2
