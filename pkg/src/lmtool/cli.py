"""The ``lmtool`` command line front end.

Three entry points:

- ``lmtool run [--config cfg.toml] [--out DIR] [--checks a,b]`` executes
  the configured battery and writes a report bundle; exit 0 iff all pass.
- ``lmtool charts {gens,verify,dims,spin,classify}`` runs one chart check
  and prints its JSON record.
- ``lmtool hqm normal-form --in module.json`` reads a serialized module,
  carries it onto the split standard form, and prints the similitude.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from fractions import Fraction

from . import charts, hqm, norms, qext
from .config import (
    CHECKS,
    ConfigError,
    RunConfig,
    case_code,
    default_config,
    load_config,
    parse_case,
)
from .poly import BinaryField, BudgetExceeded
from .report import CheckRecord, ReportBundle


# ---------------------------------------------------------------------------
# single check units


def _unit(bundle, check, claim, fn, case=None, m=None):
    """Run one unit, timing it and folding outcomes into a record."""
    t0 = time.perf_counter()
    record = CheckRecord(check=check, status="error", claim=claim, case=case, m=m)
    try:
        ok, witnesses, detail = fn()
        record.status = "pass" if ok else "fail"
        record.witnesses = witnesses
        record.detail = detail
    except BudgetExceeded as exc:
        record.status = "budget-exceeded"
        record.witnesses = [str(exc)]
    except charts.NotApplicable as exc:
        record.status = "skipped"
        record.witnesses = [str(exc)]
    except Exception as exc:                               # pragma: no cover
        record.status = "error"
        record.witnesses = [f"{type(exc).__name__}: {exc}"]
    record.seconds = time.perf_counter() - t0
    return bundle.add(record)


def _fmt(value):
    if isinstance(value, Fraction):
        return str(value)
    return value


# -- classify-ext -----------------------------------------------------------


def _run_classify_ext(cfg, bundle):
    def census():
        c = qext.classify_extensions()
        got = {"total": c.total, "rp": c.rp, "ru": c.ru,
               "unramified": c.unramified, "ru_matched": c.ru_matched}
        want = {"total": 7, "rp": 4, "ru": 2, "unramified": 1, "ru_matched": 2}
        return got == want, [], {"counts": got}

    _unit(bundle, "classify-ext",
          "census of quadratic extensions of the 2-adic rationals", census)

    def balancing():
        out = {}
        ld_ru = qext.lambda_delta(qext.eisenstein_params(3).extension)
        out["ru_delta"] = str(ld_ru.delta)
        out["ru_trace_one"] = ld_ru.lam.trace() == 1
        ld_rp = qext.lambda_delta(qext.QuadExtension.rp_from_sqrt(2))
        out["rp_delta"] = str(ld_rp.delta)
        ok = (ld_ru.delta == Fraction(-1, 2) and out["ru_trace_one"]
              and ld_rp.delta == Fraction(-1))
        return ok, [], out

    _unit(bundle, "classify-ext",
          "balancing element valuations for the reference extensions",
          balancing)


# -- norms -------------------------------------------------------------------


def _nonsplit_plane(ext):
    """Gram of the unit-determinant plane spanned by pi^-1(e1 +/- e3)."""
    sp = norms.HermitianSpace(1, ext)
    ipi = ext.pi().inverse()
    e1, e3 = sp.basis_vector(1), sp.basis_vector(3)
    f1 = tuple(ipi * (a + b) for a, b in zip(e1, e3))
    f3 = tuple(ipi * (a - b) for a, b in zip(e1, e3))
    frame = norms.Frame(sp, "nonsplit", (f1, sp.basis_vector(2), f3))
    g = frame.gram()
    return [[g[0][0], g[0][2]], [g[2][0], g[2][2]]]


def _run_norms(cfg, bundle):
    ext_ru = qext.eisenstein_params(3).extension

    def self_dual_not_hyperbolic():
        plane = _nonsplit_plane(ext_ru)
        chk = norms.is_hyperbolic(plane, ext_ru, 0)
        detail = {"modular": chk.modular,
                  "norm_ideal_valuation": str(chk.norm_ideal_valuation),
                  "target_valuation": str(chk.target_valuation)}
        return (chk.modular and not chk.hyperbolic), [], detail

    _unit(bundle, "norms",
          "a self-dual plane with unit norm ideal is not hyperbolic",
          self_dual_not_hyperbolic)

    def split_plane_detected():
        zero, one = ext_ru.from_base(0), ext_ru.one()
        chk = norms.is_hyperbolic([[zero, one], [one, zero]], ext_ru, 0)
        return chk.hyperbolic, [], {}

    _unit(bundle, "norms", "the split plane is hyperbolic", split_plane_detected)

    for ext_type in cfg.extensions:
        ext = ext_ru if ext_type == "ru" else qext.QuadExtension.rp_from_sqrt(2)

        def standard_norm(ext=ext):
            sp = norms.HermitianSpace(1, ext)
            alpha = norms.ApartmentNorm.standard(sp, [0, 0])
            chain = norms.norm_to_chain(alpha)
            back = norms.chain_to_norm(chain)
            detail = {"rank": chain.rank,
                      "maximinorant": alpha.is_maximinorant(),
                      "special": alpha.is_special()}
            ok = (detail["maximinorant"] and detail["special"]
                  and back.slots == alpha.slots)
            return ok, [], detail

        _unit(bundle, "norms",
              "standard vertex norms are maximinorant and survive the "
              "chain round trip", standard_norm, case=ext_type)


# -- hqm ----------------------------------------------------------------------


def _run_hqm(cfg, bundle):
    R = hqm.TruncatedRing(cfg.precision)

    def reduce_batch():
        rng = random.Random(cfg.seeds[0])
        params = hqm.RingParams(R, 2, 2, 1)
        size = R.modulus
        done = 0
        while done < 25:
            qv, qw, fvw = (rng.randrange(size) for _ in range(3))
            b01 = rng.randrange(1, size, 2)
            mod = hqm.HermQuadModule(
                params, a=[[qv, fvw], [fvw, qw]],
                b=[[R.mul(2, qv), b01],
                   [R.sub(R.mul(2, fvw), b01), R.mul(2, qw)]])
            v = mod.basis_vec(0)
            w = tuple(R.mul(R.inv(b01), c) for c in mod.basis_vec(1))
            v2, w2 = hqm.hyperbolic_reduce(mod, v, w)
            if (mod.q_eval(v2) != 0 or mod.q_eval(w2) != 0
                    or mod.f_eval(v2, w2) != 0
                    or mod.f_eval(v2, mod.pi_coords(w2)) != 1):
                return False, [f"instance {done} failed"], {}
            done += 1
        return True, [], {"instances": done, "modulus": size}

    _unit(bundle, "hqm",
          "random planes reduce onto exact hyperbolic coordinates",
          reduce_batch)

    def disc_units():
        out = {}
        for ext_type in cfg.extensions:
            ext = (qext.eisenstein_params(3).extension if ext_type == "ru"
                   else qext.QuadExtension.rp_from_sqrt(2))
            params = hqm.RingParams.from_extension(ext, R)
            for n in (3, 5):
                for variant in ("lattice-0", "lattice-m"):
                    mod = hqm.standard_module(n, variant, params)
                    out[f"{ext_type}/{variant}/n{n}"] = R.is_unit(mod.divided_disc())
        return all(out.values()), [], out

    _unit(bundle, "hqm",
          "divided discriminants of the distinguished lattices are units",
          disc_units)

    def quartic_normal_form():
        ext = qext.eisenstein_params(3).extension
        params = hqm.RingParams.from_extension(ext, hqm.FieldRing(BinaryField(2)))
        mod = hqm.standard_module(3, "lattice-m", params)
        sim, gamma = hqm.normal_form(mod)
        std = hqm.standard_module(3, "std-q", params)
        ok = hqm.check_similitude(std, mod, sim)
        return ok and gamma == 1, [], {"gamma": _fmt(gamma)}

    _unit(bundle, "hqm",
          "the middle lattice over the quartic field carries onto the "
          "standard form", quartic_normal_form)


# -- chart checks --------------------------------------------------------------


def _spec_of(case):
    index, ext, m = case
    return charts.ChartSpec(index, ext, m)


def _run_simplify(cfg, bundle):
    for case in cfg.cases:
        spec = _spec_of(case)
        _unit(bundle, "simplify",
              "simplified chart presentations agree with the raw conditions",
              lambda spec=spec: _simplify_unit(spec),
              case=spec.label, m=spec.m)


def _simplify_unit(spec):
    rep = charts.verify_simplifications(spec)
    witnesses = [f"{i['item']}: {i['status']}" for i in rep["items"]]
    return rep["ok"], witnesses, {"items": len(rep["items"])}


def _run_dims(cfg, bundle):
    for case in cfg.cases:
        spec = _spec_of(case)
        _unit(bundle, "dims",
              "fiber stalk dimensions agree and the special fiber has the "
              "expected Krull dimension",
              lambda spec=spec, cfg=cfg: _dims_unit(spec, cfg),
              case=spec.label, m=spec.m)


def _dims_unit(spec, cfg):
    rep = charts.fiber_dimensions(spec, seeds=cfg.seeds)
    krull_ok = rep["special_fiber_krull_dim"] == 2 * spec.m
    ok = rep.get("ok", True) and krull_ok
    detail = {k: v for k, v in rep.items() if k not in ("case",)}
    if "generic_stalk_dims" in detail:
        detail["generic_stalk_dims"] = {
            str(k): v for k, v in detail["generic_stalk_dims"].items()}
    return ok, [], detail


def _run_spin(cfg, bundle):
    def basis_unit():
        basis = charts.spin_basis(1)
        return len(basis) == len(charts.dominance_pairs(1)), [], {
            "elements": len(basis)}

    _unit(bundle, "spin",
          "the adjusted wedge basis assembles with one element per "
          "dominance pair", basis_unit, case="(0,ru)", m=1)

    params_list = [None] + [charts.ChartParams.random_fp(seed=s)
                            for s in cfg.seeds]
    for params in params_list:
        label = params.label if params is not None else "example-f10007"

        def derived(params=params):
            rep = charts.derive_spin_relations(1, params)
            ok = (rep["block_symmetry_in_derived"]
                  and rep["matches_block_symmetry"])
            detail = {k: rep[k] for k in
                      ("relation_count", "block_symmetry_in_derived",
                       "matches_block_symmetry", "bare_ideal_equality")}
            detail["params"] = rep["params"]
            return ok, [], detail

        _unit(bundle, "spin",
              f"derived spin relations imply the block symmetry and match "
              f"it modulo the trace and rank conditions [{label}]",
              derived, case="(0,ru)", m=1)


def _run_classify_points(cfg, bundle):
    for case in cfg.cases:
        spec = _spec_of(case)
        if spec.m != 1:
            continue
        _unit(bundle, "classify-points",
              "the special fiber has a unique worst point and no rank "
              "violations",
              lambda spec=spec: _classify_unit(spec, 2),
              case=spec.label, m=spec.m)


def _classify_unit(spec, q):
    rep = charts.classify_points(spec, q=q)
    counts = rep["counts"]
    return counts["ok"], [], {"q": q, "counts": counts}


def _run_identities(cfg, bundle):
    for m in sorted({case[2] for case in cfg.cases}):
        _unit(bundle, "identities",
              "off-diagonal squares decompose over the minor and diagonal "
              "ideal", lambda m=m: _stalk_unit(m), m=m)
    for case in cfg.cases:
        spec = _spec_of(case)
        _unit(bundle, "identities",
              "the most degenerate point satisfies every chart ideal",
              lambda spec=spec: _worst_unit(spec), case=spec.label, m=spec.m)
    case_set = {(c[0], c[1]) for c in cfg.cases}
    if ("0", "ru") in case_set:
        m0 = min(c[2] for c in cfg.cases if (c[0], c[1]) == ("0", "ru"))
        _unit(bundle, "identities",
              "the reduced and flat ideals agree for matched valuations",
              lambda: _match_unit(charts.ChartSpec("0", "ru", m0)),
              case="(0,ru)", m=m0)
        _unit(bundle, "identities",
              "chart hypersurfaces are smooth away from the degenerate "
              "diagonal",
              lambda: _jacobian_unit(charts.ChartSpec("0", "ru", m0)),
              case="(0,ru)", m=m0)
    if ("m", "rp") in case_set:
        for m in sorted(c[2] for c in cfg.cases if (c[0], c[1]) == ("m", "rp")):
            _unit(bundle, "identities",
                  "the flat chart is an affine space",
                  lambda m=m: _affine_unit(charts.ChartSpec("m", "rp", m)),
                  case="(m,rp)", m=m)
    if ("m", "ru") in case_set:
        m0 = min(c[2] for c in cfg.cases if (c[0], c[1]) == ("m", "ru"))
        _unit(bundle, "identities",
              "the localized flat chart eliminates the symmetric block",
              lambda: _localization_unit(charts.ChartSpec("m", "ru", m0)),
              case="(m,ru)", m=m0)


def _stalk_unit(m):
    rep = charts.stalk_identity_check(m)
    ok = rep["identity_ok"] and rep["membership_ok"]
    return ok, [], {"pairs": rep["pairs"]}


def _worst_unit(spec):
    rep = charts.worst_point_check(spec)
    return rep["ok"], list(rep["failures"]), {}


def _match_unit(spec):
    rep = charts.moduli_ideals_match(spec)
    return rep["ok"], [], {"matches": rep["matches"]}


def _jacobian_unit(spec):
    rep = charts.smooth_locus_jacobian(spec)
    detail = {"rows": {str(k): v for k, v in rep["rows"].items()},
              "field_size": rep["field_size"]}
    return rep["ok"], [], detail


def _affine_unit(spec):
    rep = charts.flat_chart_is_affine_space(spec)
    return rep["ok"], [], {"free_variables": rep["free_variables"]}


def _localization_unit(spec):
    rep = charts.flat_chart_localization(spec)
    return rep["ok"], list(rep["failures"]), {}


CHECK_RUNNERS = {
    "classify-ext": _run_classify_ext,
    "norms": _run_norms,
    "hqm": _run_hqm,
    "simplify": _run_simplify,
    "dims": _run_dims,
    "spin": _run_spin,
    "classify-points": _run_classify_points,
    "identities": _run_identities,
}


def run_checks(cfg: RunConfig) -> ReportBundle:
    """Execute the configured battery and collect a bundle."""
    import os

    bundle = ReportBundle(cfg)
    env_key = "LMTOOL_BUDGET"
    prior = os.environ.get(env_key)
    os.environ[env_key] = str(cfg.effective_budget())
    try:
        for name in cfg.checks:
            CHECK_RUNNERS[name](cfg, bundle)
    finally:
        if prior is None:
            del os.environ[env_key]
        else:
            os.environ[env_key] = prior
    return bundle


# ---------------------------------------------------------------------------
# command line plumbing


def _record_json(record: CheckRecord) -> str:
    data = record.stable_dict()
    data["timings"] = {"seconds": round(record.seconds, 3)}
    return json.dumps(data, sort_keys=True, indent=2)


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config) if args.config else default_config()
        if args.checks:
            wanted = tuple(s.strip() for s in args.checks.split(",") if s.strip())
            cfg = RunConfig(extensions=cfg.extensions, cases=cfg.cases,
                            checks=wanted, precision=cfg.precision,
                            seeds=cfg.seeds,
                            groebner_budget=cfg.groebner_budget)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    bundle = run_checks(cfg)
    if args.out:
        paths = bundle.write(args.out)
        print(f"report written to {paths['report']}")
    print(bundle.summary_markdown())
    return 0 if bundle.ok else 1


def _cmd_charts(args) -> int:
    try:
        index, ext, m = parse_case(args.case, args.m)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    spec = charts.ChartSpec(index, ext, m)
    cfg = default_config()
    bundle = ReportBundle(cfg)
    if args.charts_command == "gens":
        _unit(bundle, "gens",
              "condition generators assemble and kill the degenerate point",
              lambda: _gens_unit(spec), case=spec.label, m=spec.m)
    elif args.charts_command == "verify":
        _unit(bundle, "verify",
              "simplified chart presentations agree with the raw conditions",
              lambda: _simplify_unit(spec), case=spec.label, m=spec.m)
    elif args.charts_command == "dims":
        _unit(bundle, "dims",
              "fiber stalk dimensions agree and the special fiber has the "
              "expected Krull dimension",
              lambda: _dims_unit(spec, cfg), case=spec.label, m=spec.m)
    elif args.charts_command == "spin":
        _unit(bundle, "spin",
              "derived spin relations imply the block symmetry and match "
              "it modulo the trace and rank conditions",
              lambda: _spin_cli_unit(spec), case=spec.label, m=spec.m)
    elif args.charts_command == "classify":
        _unit(bundle, "classify",
              "the special fiber has a unique worst point and no rank "
              "violations",
              lambda: _classify_unit(spec, args.q), case=spec.label, m=spec.m)
    for record in bundle.records:
        print(_record_json(record))
    if args.out:
        bundle.write(args.out)
    return 0 if bundle.ok else 1


def _gens_unit(spec):
    counts = {}
    for cond in ("LM1", "LM2", "LM3", "LM4", "LM5", "LM6"):
        try:
            counts[cond] = len(charts.lm_generators(spec, cond))
        except charts.NotApplicable:
            counts[cond] = None
    worst = charts.worst_point_check(spec)
    return worst["ok"], list(worst["failures"]), {"generators": counts}


def _spin_cli_unit(spec):
    if spec.case != ("0", "ru"):
        raise charts.NotApplicable(
            f"the spin machinery is recorded for the unit-class vertex "
            f"chart, not {spec.label}")
    basis = charts.spin_basis(spec.m)
    detail = {"basis_elements": len(basis)}
    if spec.m == 1:
        rep = charts.derive_spin_relations(1)
        detail.update({k: rep[k] for k in
                       ("relation_count", "block_symmetry_in_derived",
                        "matches_block_symmetry", "bare_ideal_equality")})
        ok = (rep["block_symmetry_in_derived"]
              and rep["matches_block_symmetry"])
    else:
        ok = len(basis) == len(charts.dominance_pairs(spec.m))
    return ok, [], detail


def _cmd_hqm(args) -> int:
    with open(args.infile) as fh:
        data = json.load(fh)
    mod = hqm.module_from_json(data)
    out = {"check": "hqm-normal-form", "rank": mod.d, "refined": mod.has_phi}
    try:
        sim, gamma = hqm.normal_form(mod)
    except (hqm.NotOfType, hqm.UnsupportedRing) as exc:
        out["status"] = "fail"
        out["witnesses"] = [f"{type(exc).__name__}: {exc}"]
        print(json.dumps(out, sort_keys=True, indent=2))
        return 1
    variant = "std-phi" if mod.has_phi else "std-q"
    std = hqm.standard_module(mod.d, variant, mod.params)
    ok = hqm.check_similitude(std, mod, sim)
    out["status"] = "pass" if ok else "fail"
    out["gamma"] = _fmt(gamma)
    out["matrix"] = [[_fmt(v) for v in row] for row in sim.matrix]
    print(json.dumps(out, sort_keys=True, indent=2))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lmtool",
        description="desk-scale verification of the vertex chart algebra")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the configured check battery")
    p_run.add_argument("--config", help="TOML configuration file")
    p_run.add_argument("--out", help="directory for the report bundle")
    p_run.add_argument("--checks", help="comma-separated check subset")
    p_run.set_defaults(func=_cmd_run)

    p_charts = sub.add_parser("charts", help="run a single chart check")
    charts_sub = p_charts.add_subparsers(dest="charts_command", required=True)
    for name, helptext in (
            ("gens", "generator families and the degenerate point"),
            ("verify", "simplified against raw presentations"),
            ("dims", "fiber dimensions"),
            ("spin", "wedge basis and derived relations"),
            ("classify", "point enumeration on the special fiber")):
        p = charts_sub.add_parser(name, help=helptext)
        p.add_argument("--case", default="0RU",
                       help="case code: 0RU, 0RP, MRU, or MRP")
        p.add_argument("--m", type=int, default=None, help="rank parameter")
        if name == "classify":
            p.add_argument("--q", type=int, default=2,
                           help="residue field size (2 or 4)")
        p.add_argument("--out", help="directory for the report bundle")
        p.set_defaults(func=_cmd_charts)

    p_hqm = sub.add_parser("hqm", help="hermitian quadratic module tools")
    hqm_sub = p_hqm.add_subparsers(dest="hqm_command", required=True)
    p_nf = hqm_sub.add_parser("normal-form",
                              help="carry a module onto the standard form")
    p_nf.add_argument("--in", dest="infile", required=True,
                      help="JSON file holding the serialized module")
    p_nf.set_defaults(func=_cmd_hqm)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":                                 # pragma: no cover
    sys.exit(main())
