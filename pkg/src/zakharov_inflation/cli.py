"""Command-line driver.

Exit codes: 0 success, 2 failed check, 3 configuration error, 4 resource overflow.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bounds, oracle, regions
from .experiments import (
    ConfigError,
    ExperimentConfig,
    ResourceOverflow,
    expected_exponent,
    fit_exponent,
    phase_margins,
    read_records_csv,
    run_sweep,
)
from .initdata import InitialDataSpec, build_initial_data, make_grid
from .picard import picard_terms, support_family
from .spectral import Region, l2_norm_region

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RESOURCE = 0, 2, 3, 4

_OVERRIDES = ("case", "d", "s", "l", "N_list", "M_terms", "M_time", "divisor", "C_surrogate",
              "safety", "T_policy", "T_scale", "T_fixed", "seed", "out_dir", "prefix")


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with ExperimentConfig keys")
    p.add_argument("--case")
    p.add_argument("--d", type=int)
    p.add_argument("--s", type=float)
    p.add_argument("--l", type=float)
    p.add_argument("--N", dest="N_list", type=int, nargs="*", help="one or more N values")
    p.add_argument("--terms", dest="M_terms", type=int)
    p.add_argument("--M-time", dest="M_time", type=int)
    p.add_argument("--divisor", type=int)
    p.add_argument("--C-surrogate", dest="C_surrogate", type=float)
    p.add_argument("--safety", type=float)
    p.add_argument("--T-policy", dest="T_policy", choices=("scaled", "ceiling", "fixed"))
    p.add_argument("--T-scale", dest="T_scale", type=float)
    p.add_argument("--T", dest="T_fixed", type=float, help="fixed T (implies --T-policy fixed)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--prefix")


def load_config(ns: argparse.Namespace) -> ExperimentConfig:
    data = {}
    if getattr(ns, "config", None):
        try:
            data = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    for key in _OVERRIDES:
        val = getattr(ns, key, None)
        if val is not None:
            data[key] = val
    if getattr(ns, "T_fixed", None) is not None and getattr(ns, "T_policy", None) is None:
        data["T_policy"] = "fixed"
    return ExperimentConfig.from_dict(data)


def _emit(payload: dict, ns) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)
    if getattr(ns, "json_out", None):
        Path(ns.json_out).write_text(text)
    print(text)


def _jsonable(x):
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (set, tuple)):
        return list(x)
    return str(x)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_inflate(ns) -> int:
    cfg = load_config(ns)
    records = run_sweep(cfg, write=True)
    fails = [{"N": r.N, "failure": r.failure} for r in records if r.failure]
    _emit({"records": len(records), "failures": fails, "out_dir": cfg.out_dir,
           "config_hash": cfg.digest()}, ns)
    return EXIT_CHECK if fails else EXIT_OK


def cmd_verify_supports(ns) -> int:
    cfg = load_config(ns)
    rows, failures = [], []
    for N in cfg.N_list:
        spec = InitialDataSpec.create(cfg.case, N, cfg.s, cfg.l, cfg.d, cfg.divisor)
        grid = make_grid(spec, cfg.M_terms)
        T = cfg.time_for(spec)
        terms = picard_terms(spec, grid, T, cfg.M_terms, cfg.M_time, store="final")
        for term in terms:
            fam = support_family(term.order, spec)
            cap = 81 * term.order**5
            row = {"N": N, "n": term.order, "card1": len(fam.sigma1), "card2": len(fam.sigma2),
                   "cap": cap}
            for comp in (1, 2):
                f = term.final(comp)
                total = l2_norm_region(f)
                outside = l2_norm_region(f, ~fam.region(comp))
                row[f"out_frac{comp}"] = 0.0 if total == 0 else outside / total
            rows.append(row)
            if max(row["card1"], row["card2"]) > cap:
                failures.append({"N": N, "n": term.order, "check": "cardinality"})
            if max(row["out_frac1"], row["out_frac2"]) > ns.tol:
                failures.append({"N": N, "n": term.order, "check": "containment"})
    _emit({"rows": rows, "failures": failures}, ns)
    return EXIT_CHECK if failures else EXIT_OK


def cmd_verify_bounds(ns) -> int:
    cfg = load_config(ns)
    payload = {"b_cap": bounds.check_b_bounds(ns.n_max), "gamma": bounds.check_gamma_bound(ns.n_max)}
    failures = [k for k in ("b_cap", "gamma") if not payload[k]["ok"]]
    C = cfg.C_surrogate if cfg.C_surrogate is not None else 4 * bounds.c_small(cfg.d)
    upper = []
    for N in cfg.N_list:
        spec = InitialDataSpec.create(cfg.case, N, cfg.s, cfg.l, cfg.d, cfg.divisor)
        grid = make_grid(spec, cfg.M_terms)
        T = cfg.time_for(spec)
        terms = picard_terms(spec, grid, T, cfg.M_terms, cfg.M_time, store=ns.stride)
        ledger = bounds.BoundLedger.for_spec(spec, cfg.M_terms, C)
        rep = bounds.verify_upper_bounds(terms, ledger, T, spec)
        upper.append({"N": N, "T": T, "max_ratio": rep.max_ratio, "rows": rep.rows})
        if not rep.ok:
            failures.append(f"upper:N={N}")
    payload["upper"] = upper
    payload["failures"] = failures
    _emit(payload, ns)
    return EXIT_CHECK if failures else EXIT_OK


def cmd_fit_exponent(ns) -> int:
    rows = read_records_csv(ns.csv)
    pairs = []
    for row in rows:
        if row.get("failure"):
            continue
        y = float(row[ns.column])
        if ns.normalize == "r2":
            y /= float(row["r"]) ** 2
        pairs.append((float(row["N"]), y))
    fit = fit_exponent(pairs)
    payload = {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual,
               "points": len(pairs)}
    failures = []
    if ns.expect is not None:
        payload["expected"] = ns.expect
        if abs(fit.slope - ns.expect) > ns.tol:
            failures.append("slope")
    payload["failures"] = failures
    _emit(payload, ns)
    return EXIT_CHECK if failures else EXIT_OK


def cmd_regions(ns) -> int:
    step = Fraction(str(ns.step))
    rows = regions.region_grid(ns.d, tuple(map(Fraction, ns.s_range)), tuple(map(Fraction, ns.l_range)), step)
    text = regions.verdicts_to_csv(rows)
    if ns.csv:
        Path(ns.csv).write_text(text)
    else:
        sys.stdout.write(text)
    both = [(float(v.s), float(v.l)) for v in rows if v.lwp and v.inflation]
    uncovered = [(float(v.s), float(v.l)) for v in rows if v.inflation and not v.covering_case]
    report = {"points": len(rows), "lwp_and_inflation": both, "uncovered": uncovered}
    print(json.dumps(report), file=sys.stderr)
    return EXIT_CHECK if both or uncovered else EXIT_OK


def cmd_oracle_compare(ns) -> int:
    cfg = load_config(ns)
    N = cfg.N_list[0] if cfg.N_list else 16
    spec = InitialDataSpec.create(cfg.case, N, cfg.s, cfg.l, cfg.d, cfg.divisor)
    grid = make_grid(spec, cfg.M_terms, margin_cells=4)
    u0, n0 = build_initial_data(spec, grid)
    T = cfg.time_for(spec)
    terms = picard_terms(spec, grid, T, cfg.M_terms, cfg.M_time, store="all", data=(u0, n0))
    series = oracle.Trajectory.from_terms(terms)
    ladder = oracle.convergence_order(u0, n0, T)
    fine = oracle.step_solver(u0, n0, T, T / 256)
    coarse = oracle.step_solver(u0, n0, T, T / 128)
    r_fine = oracle.phi_residual(u0, n0, fine)
    r_coarse = oracle.phi_residual(u0, n0, coarse)
    r_series = oracle.phi_residual(u0, n0, series)
    floor_series = series_tail_floor(terms)
    mass = [math.sqrt(grid.cell * float(np.sum(np.abs(x) ** 2))) for x in fine.u]
    payload = {
        "N": N, "T": T, "distance": oracle.relative_distance(ladder["finest"], series),
        "order": ladder["order"], "residual_solver": r_fine, "floor_solver": r_coarse / 4,
        "residual_series": r_series, "floor_series": floor_series,
        "mass_drift": max(mass) / min(mass) - 1.0,
    }
    checks = {
        "distance": payload["distance"] <= 1e-3,
        "order": 1.7 <= payload["order"] <= 2.3,
        "residual_solver": r_fine <= 3 * payload["floor_solver"],
        "residual_series": r_series <= 3 * floor_series,
        "mass": payload["mass_drift"] <= 1e-6,
    }
    payload["failures"] = [k for k, ok in checks.items() if not ok]
    _emit(payload, ns)
    return EXIT_CHECK if payload["failures"] else EXIT_OK


def series_tail_floor(terms) -> float:
    """Estimated relative size of the first two omitted orders (geometric extrapolation)."""
    M = len(terms)
    if M < 4:
        return math.inf
    est = 0.0
    for comp in (1, 2):
        norms = [float(np.linalg.norm(t.schrodinger[-1] if comp == 1 else t.wave[-1])) for t in terms]
        nz = [n for n in norms if n > 0]
        if len(nz) < 2:
            continue
        last = [k for k, v in enumerate(norms) if v > 0]
        q = norms[last[-1]] / norms[last[-2]]
        est = math.hypot(est, norms[last[-1]] * q)
    total = math.hypot(float(np.linalg.norm(sum(t.schrodinger[-1] for t in terms))),
                       float(np.linalg.norm(sum(t.wave[-1] for t in terms))))
    return max(est / total, 1e-14)


def cmd_phases(ns) -> int:
    cfg = load_config(ns)
    out = []
    for N in cfg.N_list:
        spec = InitialDataSpec.create(cfg.case, N, cfg.s, cfg.l, cfg.d, cfg.divisor)
        out.append(phase_margins(spec, cfg.time_for(spec), ns.samples, cfg.seed))
    failures = []
    if ns.max_margin is not None:
        failures = [r["N"] for r in out if r["max_T_phi"] > ns.max_margin]
    _emit({"phases": out, "failures": failures}, ns)
    return EXIT_CHECK if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zakharov-inflation", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, config=True, **kw):
        sp = sub.add_parser(name, **kw)
        if config:
            _config_args(sp)
        sp.add_argument("--json-out", dest="json_out")
        sp.set_defaults(func=fn)
        return sp

    add("inflate", cmd_inflate, help="run an N-sweep and write CSV/JSON/plot data")
    sp = add("verify-supports", cmd_verify_supports, help="support containment per order")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp = add("verify-bounds", cmd_verify_bounds, help="sequence caps and upper-bound ratios")
    sp.add_argument("--n-max", dest="n_max", type=int, default=60)
    sp.add_argument("--stride", default="8", help="store every k-th time node ('all', 'final' or k)")
    sp = add("fit-exponent", cmd_fit_exponent, config=False, help="log-log fit over a sweep CSV")
    sp.add_argument("csv")
    sp.add_argument("--column", default="A2_target")
    sp.add_argument("--normalize", choices=("none", "r2"), default="none")
    sp.add_argument("--expect", type=float)
    sp.add_argument("--tol", type=float, default=0.15)
    sp = add("regions", cmd_regions, config=False, help="regularity atlas as CSV")
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--step", default="0.1")
    sp.add_argument("--s-range", dest="s_range", nargs=2, default=("-4", "4"))
    sp.add_argument("--l-range", dest="l_range", nargs=2, default=("-4", "4"))
    sp.add_argument("--csv")
    add("oracle-compare", cmd_oracle_compare, help="time stepper against the truncated series")
    sp = add("phases", cmd_phases, help="max T|phi| over the resonance boxes")
    sp.add_argument("--samples", type=int, default=4096)
    sp.add_argument("--max-margin", dest="max_margin", type=float)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "detail": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except (ResourceOverflow, MemoryError) as exc:
        print(json.dumps({"error": "resource", "detail": str(exc)}), file=sys.stderr)
        return EXIT_RESOURCE
    except oracle.SolverBlowUp as exc:
        print(json.dumps({"error": "blowup", "detail": str(exc)}), file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
