"""Tests for the vertex chart ideals, spin machinery, and fiber checks."""

from fractions import Fraction

import pytest

from lmtool.poly import GF2, BinaryField, Ideal, PolyRing, QuadraticField, evaluate
from lmtool.charts import (
    ChartError,
    ChartParams,
    ChartSpec,
    NotApplicable,
    chart_ideal,
    chart_ring,
    classify_points,
    combined_pairing_matrix,
    default_params,
    derive_spin_relations,
    dominance_pairs,
    fiber_dimensions,
    flat_chart_is_affine_space,
    flat_chart_localization,
    lm_generators,
    moduli_ideals_match,
    pi_action_matrix,
    quadratic_form_matrix,
    smooth_locus_jacobian,
    spin_basis,
    stalk_identity_check,
    verify_simplifications,
    worst_point_check,
)

CASES = (("0", "ru"), ("0", "rp"), ("m", "ru"), ("m", "rp"))

Q = Fraction


def spec_of(case, m=1):
    return ChartSpec(case[0], case[1], m)


# ---------------------------------------------------------------------------
# parameter atoms


def test_exact_ru_atoms():
    p = ChartParams.exact("ru")
    assert p.field.d == 3
    want = {
        "t": (Q(2), Q(0)),
        "p0": (Q(-2), Q(0)),
        "pi": (Q(1), Q(-1)),
        "pib": (Q(1), Q(1)),
        "sq": (Q(0), Q(1)),
        "t_over_p0": (Q(-1), Q(0)),
        "t_over_pi": (Q(-1), Q(-1)),
        "t_over_pib": (Q(-1), Q(1)),
        "pi_over_pib": (Q(-2), Q(1)),
        "pib_over_pi": (Q(-2), Q(-1)),
        "two_over_t": (Q(1), Q(0)),
        "twop0_over_t": (Q(-2), Q(0)),
    }
    assert {k: p.value(k) for k in p.atoms()} == want
    # the square root atom really squares to the unit it names
    f = p.field
    assert f.mul(p.value("sq"), p.value("sq")) == f.coerce(3)


def test_exact_rp_atoms():
    p = ChartParams.exact("rp")
    assert p.ext == "rp"
    assert p.atoms() == ("t", "p0", "pi", "pib")
    f = p.field
    assert p.value("t") == f.coerce(0)
    assert p.value("pib") == f.neg(p.value("pi"))
    assert p.value("p0") == f.coerce(2)


def test_example_atoms():
    p = ChartParams.example()
    want = {
        "t": 3, "p0": 2, "pi": 1, "pib": 2, "sq": 3336,
        "t_over_p0": 5005, "t_over_pi": 3, "t_over_pib": 5005,
        "pi_over_pib": 5004, "pib_over_pi": 2,
        "two_over_t": 6672, "twop0_over_t": 3337,
    }
    assert {k: p.value(k) for k in p.atoms()} == want


def test_residue_atoms():
    p = ChartParams.residue("ru")
    assert p.value("t_over_p0") == 1 and p.value("two_over_t") == 1
    assert p.value("sq") == 1 and p.value("t") == 0
    u = ChartParams.residue("ru", matched=False)
    assert u.value("t_over_p0") == 0
    assert u.label == "residue-unmatched-2^1"
    rp = ChartParams.residue("rp", bits=2)
    assert rp.field.k == 2
    assert all(rp.value(k) == 0 for k in rp.atoms())


def test_degenerate_parameters_rejected():
    from lmtool.poly import PrimeField
    # opposite roots fall through to the trace-zero branch
    p = ChartParams.from_roots(PrimeField(10007), 3, 10004, "opp")
    assert p.ext == "rp"
    # a vanishing root with nonzero trace is degenerate outright
    with pytest.raises(ChartError):
        ChartParams.from_roots(PrimeField(10007), 0, 5, "bad")


def test_spec_validation():
    with pytest.raises(ChartError):
        ChartSpec("1", "ru", 1)
    with pytest.raises(ChartError):
        ChartSpec("0", "uu", 1)
    with pytest.raises(ChartError):
        ChartSpec("0", "ru", 0)
    s = ChartSpec("m", "rp", 2)
    assert s.n == 5 and s.label == "(m,rp)"


# ---------------------------------------------------------------------------
# condition generators


def test_generator_counts():
    for case in CASES:
        spec = spec_of(case)
        counts = {}
        for cond in ("LM1", "LM2", "LM3", "LM4", "LM5"):
            counts[cond] = len(lm_generators(spec, cond))
        assert counts == {"LM1": 9, "LM2": 3, "LM3": 9, "LM4": 12, "LM5": 9}
    assert len(lm_generators(spec_of(("0", "ru")), "LM6")) == 3
    assert len(lm_generators(spec_of(("m", "rp")), "LM6")) == 6
    for case in (("0", "rp"), ("m", "ru")):
        with pytest.raises(NotApplicable):
            lm_generators(spec_of(case), "LM6")


def test_block_symmetry_generator_strings():
    gens = lm_generators(spec_of(("0", "ru")), "LM6")
    assert [str(g) for g in gens] == [
        "10005*x_1_1+x_2_2+10006",
        "x_1_3+5002*x_3_2",
        "x_2_3+10004*x_3_1",
    ]


def test_worst_point_vanishes_everywhere():
    for case in CASES:
        rep = worst_point_check(spec_of(case))
        assert rep["ok"] and rep["failures"] == []


def test_pi_action_matrix_shape():
    spec = spec_of(("0", "ru"))
    params = ChartParams.example()
    ring = chart_ring(spec, params)
    c = {k: params.const(ring, k) for k in params.atoms()}
    P = pi_action_matrix(spec, ring, c)
    n = spec.n
    assert len(P) == 2 * n and len(P[0]) == 2 * n
    # lower-left identity block and scaled upper-right block
    assert str(P[n][0]) == "1" and str(P[0][n]) == "10005"


def test_binary_matrices_have_prime_field_entries():
    # integer constants must land in the prime subfield of GF(4); a raw
    # label coercion would turn 2 into the generator
    for case in CASES:
        spec = spec_of(case)
        params = ChartParams.residue(case[1], bits=2)
        ring = PolyRing(params.field, ())
        c = {k: params.const(ring, k) for k in params.atoms()}
        for build in (pi_action_matrix, combined_pairing_matrix, quadratic_form_matrix):
            M = build(spec, ring, c)
            vals = {e.constant_term() for row in M for e in row}
            assert vals <= {0, 1}, (spec.label, build.__name__, vals)


# ---------------------------------------------------------------------------
# chart ideals


def test_reduced_contained_in_flat():
    for case in CASES:
        spec = spec_of(case)
        for params in (ChartParams.example(case[1]),
                       ChartParams.residue(case[1]),
                       ChartParams.exact(case[1])):
            red = chart_ideal(spec, "reduced", params)
            fl = chart_ideal(spec, "flat", params)
            assert fl.contains_ideal(red), (spec.label, params.label)


def test_flat_equals_reduced_truth_table():
    expected = {
        ("0", "ru"): {"example": True, "residue": True, "exact": True},
        ("0", "rp"): {"example": True, "residue": False, "exact": True},
        ("m", "ru"): {"example": False, "residue": False, "exact": False},
        ("m", "rp"): {"example": False, "residue": False, "exact": False},
    }
    for case in CASES:
        spec = spec_of(case)
        table = {
            "example": ChartParams.example(case[1]),
            "residue": ChartParams.residue(case[1]),
            "exact": ChartParams.exact(case[1]),
        }
        for name, params in table.items():
            red = chart_ideal(spec, "reduced", params)
            fl = chart_ideal(spec, "flat", params)
            assert red.contains_ideal(fl) is expected[case][name], \
                (spec.label, name)


def test_chart_ideal_kind_validation():
    with pytest.raises(ChartError):
        chart_ideal(spec_of(("0", "ru")), "smooth")


def test_full_ideal_uses_all_chart_variables():
    spec = spec_of(("0", "ru"))
    ideal = chart_ideal(spec, "full")
    assert ideal.ring.nvars == spec.n * spec.n


# ---------------------------------------------------------------------------
# structure reports


def test_flat_chart_is_affine_space():
    rep = flat_chart_is_affine_space(ChartSpec("m", "rp", 1))
    assert rep == {"case": "(m,rp)", "substitution_vanishes": True,
                   "upper_block_eliminated": True, "free_variables": 2,
                   "ok": True}
    rep2 = flat_chart_is_affine_space(ChartSpec("m", "rp", 2))
    assert rep2["ok"] and rep2["free_variables"] == 4
    with pytest.raises(NotApplicable):
        flat_chart_is_affine_space(ChartSpec("m", "ru", 1))


def test_flat_chart_localization():
    rep = flat_chart_localization(ChartSpec("m", "ru", 1))
    assert rep["ok"] and rep["failures"] == []
    with pytest.raises(NotApplicable):
        flat_chart_localization(ChartSpec("0", "ru", 1))


def test_moduli_ideals_match():
    rep = moduli_ideals_match(ChartSpec("0", "ru", 1))
    assert rep["ok"]
    assert rep["matches"] == {"residue-matched": True, "generic-field": True}


def test_verify_simplifications_statuses():
    want_quad = {
        ("0", "ru"): ("ok", 12, 0),
        ("0", "rp"): ("ok-with-trace", 0, 12),
        ("m", "ru"): ("ok", 12, 0),
        ("m", "rp"): ("ok", 12, 0),
    }
    want_containment = {
        ("0", "ru"): (True, True, False),
        ("0", "rp"): (True, True, True),
        ("m", "ru"): (True, True, True),
        ("m", "rp"): (True, False, False),
    }
    for case in CASES:
        rep = verify_simplifications(spec_of(case))
        assert rep["ok"], rep
        items = {i["item"]: i for i in rep["items"] if i["item"] != "square-trace-identity"}
        squares = [i for i in rep["items"] if i["item"] == "square-trace-identity"]
        assert [s["size"] for s in squares] == [2, 3, 4]
        assert all(s["status"] == "ok" for s in squares)
        assert items["stability-from-trace-and-minors"]["status"] == "ok"
        quad = items["quadratic-family-reduction"]
        assert (quad["status"], quad["direct"], quad["with_trace"]) == want_quad[case]
        cont = items["presentation-containment"]
        got = (cont["simplified_in_raw"], cont["raw_in_simplified"],
               cont["equality_expected"])
        assert got == want_containment[case], (case, got)
        assert cont["status"] == "ok"
        if case == ("0", "ru"):
            flats = [i for i in rep["items"] if i["item"] == "reduced-flat-match"]
            assert {f["specialization"]: f["status"] for f in flats} == \
                {"residue-matched": "ok", "generic-field": "ok"}


def test_stalk_identity_check():
    assert stalk_identity_check(1) == {"m": 1, "pairs": 4, "identity_ok": True,
                                       "membership_ok": True, "failures": []}
    assert stalk_identity_check(2) == {"m": 2, "pairs": 16, "identity_ok": True,
                                       "membership_ok": True, "failures": []}


# ---------------------------------------------------------------------------
# fiber dimensions and smoothness


def test_fiber_dimensions_rank_one():
    for case in (("0", "ru"), ("0", "rp"), ("m", "ru")):
        rep = fiber_dimensions(spec_of(case))
        assert rep["ok"], rep
        assert rep["special_stalk_dim"] == 4
        assert rep["special_fiber_krull_dim"] == 2
        assert rep["generic_stalk_dims"] == {0: 4, 1: 4, 2: 4}
    free = fiber_dimensions(spec_of(("m", "rp")))
    assert free["special_fiber_krull_dim"] == 2
    assert free["stalks"] is None


def test_fiber_dimensions_rank_two():
    rep = fiber_dimensions(ChartSpec("0", "ru", 2))
    assert rep["ok"]
    assert rep["special_stalk_dim"] == 16
    assert rep["special_fiber_krull_dim"] == 4
    assert rep["generic_stalk_dims"] == {0: 16, 1: 16, 2: 16}


def test_smooth_locus_jacobian():
    rep = smooth_locus_jacobian(ChartSpec("0", "ru", 1))
    assert rep["ok"] and rep["field_size"] == 4
    assert rep["rows"] == {1: {"points": 12, "singular": 0},
                           2: {"points": 12, "singular": 0}}
    with pytest.raises(NotApplicable):
        smooth_locus_jacobian(ChartSpec("0", "rp", 1))


# ---------------------------------------------------------------------------
# spin machinery


def _fpow(field, x, k):
    acc = field.coerce(1)
    base = x if k >= 0 else field.inv(x)
    for _ in range(abs(k)):
        acc = field.mul(acc, base)
    return acc


def expected_worst_terms(m, params):
    """Closed forms for the dominant wedge terms of the adjusted basis.

    Returns {(i, j): {subset: coefficient}} with subsets as sorted tuples.
    There are nine shapes depending on how the index pair sits relative
    to the middle index m + 1 and the antidiagonal.
    """
    f = params.field
    n = 2 * m + 1
    t, p0, sq = params.value("t"), params.value("p0"), params.value("sq")
    pi = params.value("pi")
    tail = tuple(range(n + 1, 2 * n + 1))
    mul, neg = f.mul, f.neg

    def coeff(tpow, pipow, p0pow=0, extra=None):
        val = mul(_fpow(f, t, tpow), _fpow(f, pi, -pipow))
        if p0pow:
            val = mul(val, _fpow(f, p0, p0pow))
        if extra is not None:
            val = mul(val, extra)
        return val

    def swap(base, out, inn):
        return tuple(sorted((set(base) - {out}) | {inn}))

    two = f.coerce(2)
    out = {}
    for (i, j) in dominance_pairs(m):
        jv = n + 1 - j
        istar = 2 * n + 1 - i
        terms = {}
        if i == j == m + 1:
            val = coeff(m - 1, 3 * m - 1, extra=two)
            terms[tail] = val if m % 2 == 0 else neg(val)
        elif i + j == n + 1 and i < m + 1:
            terms[swap(tail, istar, i)] = neg(mul(sq, coeff(m - 1, 3 * m - 2, extra=two)))
        elif i + j == n + 1 and i > m + 1:
            terms[swap(tail, istar, i)] = neg(mul(sq, coeff(m + 1, 3 * m - 2, -1, extra=two)))
        elif i == j and i < m + 1:
            # the adjusted vector carries two tied dominant terms
            terms[swap(tail, n + i, i)] = neg(mul(sq, coeff(m, 3 * m, 1, extra=two)))
            terms[swap(tail, istar, n + 1 - i)] = neg(mul(sq, coeff(m, 3 * m - 2, extra=two)))
        elif i < jv < m + 1:
            val = mul(sq, coeff(m - 1, 3 * m - 2))
            terms[swap(tail, n + j, i)] = neg(val)
            terms[swap(tail, istar, jv)] = val if (i + j + 1) % 2 == 0 else neg(val)
        elif j == m + 1 and i < m + 1:
            val = mul(sq, coeff(m - 1, 3 * m - 2))
            terms[swap(tail, istar, m + 1)] = val if (m + i) % 2 == 0 else neg(val)
        elif i < m + 1 < jv:
            terms[swap(tail, n + j, i)] = neg(mul(sq, coeff(m, 3 * m - 1)))
            val = mul(sq, coeff(m, 3 * m - 3, -1))
            terms[swap(tail, istar, jv)] = neg(val) if (i + j) % 2 == 0 else val
        elif i == m + 1 and jv > m + 1:
            terms[swap(tail, n + j, m + 1)] = neg(mul(sq, coeff(m, 3 * m - 1)))
        else:
            val = mul(sq, coeff(m + 1, 3 * m - 2, -1))
            terms[swap(tail, n + j, i)] = neg(val)
            terms[swap(tail, istar, jv)] = val if (i + j + 1) % 2 == 0 else neg(val)
        out[(i, j)] = terms
    return out


def test_dominance_pairs():
    assert dominance_pairs(1) == [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (3, 1)]
    assert len(dominance_pairs(2)) == 15


def test_spin_basis_rank_one_worst_terms():
    basis = spin_basis(1)
    want = {
        (1, 1): (4, {(1, 5, 6): (Q(-18), Q(-10)), (3, 4, 5): (Q(6), Q(2))}),
        (1, 2): (6, {(2, 4, 5): (Q(-3, 2), Q(-1, 2))}),
        (1, 3): (2, {(1, 4, 5): (Q(3), Q(1))}),
        (2, 1): (8, {(2, 5, 6): (Q(-3), Q(-2))}),
        (2, 2): (1, {(4, 5, 6): (Q(-2), Q(-1))}),
        (3, 1): (3, {(3, 5, 6): (Q(-6), Q(-2))}),
    }
    got = {e.pair: (e.kind, dict(e.worst)) for e in basis}
    assert got == want


@pytest.mark.parametrize("m", [1, 2])
def test_spin_basis_matches_closed_forms(m):
    params = ChartParams.exact("ru")
    table = expected_worst_terms(m, params)
    basis = spin_basis(m, params)
    assert len(basis) == len(dominance_pairs(m))
    for e in basis:
        assert dict(e.worst) == table[e.pair], e.pair


def test_spin_basis_signs_and_kinds():
    basis = spin_basis(2)
    kinds = {}
    for e in basis:
        i, j = e.pair
        assert e.sign == (-1) ** (i + j + 1)
        kinds[e.kind] = kinds.get(e.kind, 0) + 1
    assert kinds == {1: 1, 2: 2, 3: 2, 4: 2, 5: 1, 6: 2, 7: 2, 8: 2, 9: 1}


def test_derive_spin_relations_rank_one():
    for params in (None, ChartParams.random_fp(seed=0)):
        rep = derive_spin_relations(1, params)
        assert rep["relation_count"] == 14
        assert rep["block_symmetry_in_derived"] is True
        assert rep["matches_block_symmetry"] is True
        assert rep["bare_ideal_equality"] is False
    rep = derive_spin_relations(1)
    assert rep["block_symmetry_generators"] == [
        "10005*x_1_1+x_2_2+10006",
        "x_1_3+5002*x_3_2",
        "x_2_3+10004*x_3_1",
    ]


# ---------------------------------------------------------------------------
# point classification


def test_classify_points_residue_field():
    for case in CASES:
        rep = classify_points(spec_of(case), q=2)
        counts = rep["counts"]
        spin_cases = {("0", "ru"), ("m", "rp")}
        assert counts == {
            "total_subspaces": 1395, "survivors": 7, "worst": 1,
            "rank_one": 6, "violations": 0, "in_chart": 4, "out_chart": 3,
            "spin_unchecked": 3 if case in spin_cases else 0, "ok": True,
        }, (case, counts)


def test_classify_points_quartic_field():
    rep = classify_points(ChartSpec("m", "rp", 1), q=4)
    assert rep["counts"] == {
        "total_subspaces": 376805, "survivors": 21, "worst": 1,
        "rank_one": 20, "violations": 0, "in_chart": 16, "out_chart": 5,
        "spin_unchecked": 5, "ok": True,
    }


def test_classify_points_guards():
    with pytest.raises(ChartError):
        classify_points(ChartSpec("0", "ru", 2), q=2)
    with pytest.raises(ChartError):
        classify_points(ChartSpec("0", "ru", 1), q=3)
