"""Sweeps over ``N``, exponent fits and phase sampling."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .bounds import (
    choose_T,
    data_norms,
    predicted_lower_bound,
    rho_factor,
    target_component,
)
from .initdata import InitialDataSpec, build_initial_data, make_grid, normalize_case
from .picard import picard_terms, schrodinger_phase, wave_phase
from .regions import case_region
from .spectral import sobolev_norm

N_MIN = 16
MAX_GRID_POINTS = 10**7
T_POLICIES = ("scaled", "ceiling", "fixed")


class ConfigError(ValueError):
    pass


class ResourceOverflow(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    """Parameters of one sweep; ``T`` follows ``T_policy``.

    ``scaled``: ``T_scale`` times the proof recipe; ``ceiling``: ``safety`` times
    the case ceiling; ``fixed``: ``T_fixed`` for every ``N``.
    """

    case: str = "a"
    d: int = 1
    s: float = -1.0
    l: float = -1.0
    N_list: list = field(default_factory=lambda: [64, 128, 256, 512])
    M_terms: int = 6
    M_time: int = 128
    divisor: int = 16
    C_surrogate: Optional[float] = None
    safety: float = 0.01
    T_policy: str = "scaled"
    T_scale: float = 1e-4
    T_fixed: Optional[float] = None
    quad_tol: float = 0.05
    spill_tol: float = 1e-6
    seed: int = 0
    phase_samples: int = 4096
    out_dir: str = "results"
    prefix: str = "sweep"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        try:
            self.case = normalize_case(self.case)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self.N_list = [int(n) for n in self.N_list]
        if any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
            raise ConfigError("N_list must be strictly increasing")
        if self.N_list and self.N_list[0] < N_MIN:
            raise ConfigError(f"every N must be >= {N_MIN}")
        if self.divisor < 8 or self.divisor % 2:
            raise ConfigError("divisor must be an even integer >= 8")
        if self.M_time < 16 or self.M_time % 2:
            raise ConfigError("M_time must be an even integer >= 16")
        if not 1 <= self.M_terms <= 8:
            raise ConfigError("M_terms must lie in 1..8")
        if not 1 <= self.d <= 3:
            raise ConfigError("lattice computations support d = 1, 2, 3")
        if self.T_policy not in T_POLICIES:
            raise ConfigError(f"T_policy must be one of {T_POLICIES}")
        if self.T_policy == "fixed" and not (self.T_fixed and self.T_fixed > 0):
            raise ConfigError("T_policy 'fixed' needs a positive T_fixed")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def time_for(self, spec: InitialDataSpec) -> float:
        if self.T_policy == "fixed":
            return float(self.T_fixed)
        tc = choose_T(self.case, spec.N, self.s, self.l, self.d, A=spec.A, safety=self.safety,
                      check_region=False)
        if self.T_policy == "ceiling":
            return self.safety * tc.ceiling
        return self.T_scale * tc.T


RECORD_FIELDS = (
    "case", "d", "s", "l", "N", "A", "r", "T", "u0_Hs", "n0_Hl", "A2_target", "predicted",
    "ratio", "rho_N_factor", "tail_norm", "S_target", "spill", "quad_change", "T_over_ceiling",
    "h", "M_time", "M_terms", "config_hash", "failure",
)


@dataclass
class SweepRecord:
    case: str
    d: int
    s: float
    l: float
    N: int
    A: float = math.nan
    r: float = math.nan
    T: float = math.nan
    u0_Hs: float = math.nan
    n0_Hl: float = math.nan
    A2_target: float = math.nan
    predicted: float = math.nan
    ratio: float = math.nan
    rho_N_factor: float = math.nan
    tail_norm: float = math.nan
    S_target: float = math.nan
    spill: float = math.nan
    quad_change: float = math.nan
    T_over_ceiling: float = math.nan
    h: float = math.nan
    M_time: int = 0
    M_terms: int = 0
    config_hash: str = ""
    failure: str = ""
    term_norms: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failure


def _check_size(spec: InitialDataSpec, M_terms: int) -> None:
    grid = make_grid(spec, M_terms)
    if grid.size > MAX_GRID_POINTS:
        raise ResourceOverflow(f"lattice of {grid.size} points exceeds {MAX_GRID_POINTS}")


def run_point(config: ExperimentConfig, N: int) -> SweepRecord:
    """One sweep point; failures are recorded on the record instead of raised."""
    rec = SweepRecord(config.case, config.d, config.s, config.l, int(N), M_time=config.M_time,
                      M_terms=config.M_terms, config_hash=config.digest())
    problems = []
    if not case_region(config.case, config.s, config.l, config.d):
        problems.append("region")
    spec = InitialDataSpec.create(config.case, N, config.s, config.l, config.d, config.divisor)
    _check_size(spec, config.M_terms)
    grid = make_grid(spec, config.M_terms)
    u0, n0 = build_initial_data(spec, grid)
    T = config.time_for(spec)
    comp = target_component(config.case)
    reg = config.s if comp == 1 else config.l
    terms = picard_terms(spec, grid, T, config.M_terms, config.M_time, store="final", data=(u0, n0))
    norms = [sobolev_norm(t.final(comp), reg) for t in terms]
    S = terms[0].final(comp).with_values(sum(t.final(comp).values for t in terms))
    tc = choose_T(config.case, N, config.s, config.l, config.d, A=spec.A, check_region=False)
    rec.A, rec.r, rec.T, rec.h = spec.A, spec.r, T, spec.h[0]
    rec.u0_Hs = sobolev_norm(u0, config.s)
    rec.n0_Hl = sobolev_norm(n0, config.l)
    rec.A2_target = norms[1] if len(norms) > 1 else math.nan
    rec.predicted = predicted_lower_bound(config.case, N, T, config.s, config.l, config.d, A=spec.A)
    rec.ratio = rec.A2_target / rec.predicted
    rec.rho_N_factor = rho_factor(spec, T, config.C_surrogate, norms=data_norms(spec))[1]
    rec.tail_norm = float(sum(norms[2:]))
    rec.S_target = sobolev_norm(S, reg)
    rec.spill = max(t.spill for t in terms)
    rec.quad_change = max((max(t.quadrature_change) for t in terms[1:5]), default=0.0)
    rec.T_over_ceiling = T / tc.ceiling
    rec.term_norms = norms
    if rec.spill > config.spill_tol:
        problems.append("spill")
    if rec.quad_change > config.quad_tol:
        problems.append("quadrature")
    if not rec.ratio > 0:
        problems.append("ratio")
    rec.failure = ";".join(problems)
    return rec


def run_sweep(config: ExperimentConfig, write: bool = True) -> list[SweepRecord]:
    """Build data, choose ``T``, compute terms and tabulate norms for every ``N``."""
    records = []
    for N in config.N_list:
        try:
            records.append(run_point(config, N))
        except ResourceOverflow:
            raise
        except (ValueError, FloatingPointError) as exc:
            records.append(SweepRecord(config.case, config.d, config.s, config.l, int(N),
                                       M_time=config.M_time, M_terms=config.M_terms,
                                       config_hash=config.digest(), failure=f"error:{exc}"))
    if write:
        write_outputs(config, records)
    return records


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def records_to_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for rec in records:
        w.writerow([_fmt(getattr(rec, k)) for k in RECORD_FIELDS])
    return buf.getvalue()


def read_records_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, list):
        return [_json_safe(v) for v in x]
    return x


def write_outputs(config: ExperimentConfig, records: Sequence[SweepRecord]) -> dict:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / f"{config.prefix}.csv", "json": out / f"{config.prefix}.json"}
    paths["csv"].write_text(records_to_csv(records))
    payload = {
        "config": config.to_dict(),
        "config_hash": config.digest(),
        "records": [{k: _json_safe(v) for k, v in dataclasses.asdict(r).items()} for r in records],
        "failures": [{"N": r.N, "failure": r.failure} for r in records if r.failure],
    }
    paths["json"].write_text(json.dumps(payload, indent=2, sort_keys=True))
    for key in ("A2_target", "S_target", "ratio", "T", "predicted"):
        p = out / f"{config.prefix}_{key}.dat"
        p.write_text("".join(f"{r.N} {_fmt(float(getattr(r, key)))}\n" for r in records))
        paths[key] = p
    return {k: str(v) for k, v in paths.items()}


# ---------------------------------------------------------------------------
# regression
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    residual: float


def fit_exponent(pairs: Sequence[tuple[float, float]]) -> FitResult:
    """Least squares of ``log y`` on ``log N``; ``residual`` is the RMS misfit."""
    if len(pairs) < 3:
        raise ValueError("need at least three (N, y) pairs")
    x = np.array([p[0] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("N and y must be positive and finite")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    res = ly - (slope * lx + intercept)
    return FitResult(float(slope), float(intercept), float(np.sqrt(np.mean(res**2))))


def expected_exponent(case: str, s: float, l: float, d: int = 1) -> float:
    """Power of ``N`` in the lower bound at fixed ``T`` (logs and ``r`` dropped)."""
    case = normalize_case(case)
    if case == "a":
        return l - 2 * s + 1 + d / 2
    if case == "b":
        return l - 2 * s + 0.5
    if case == "c":
        return l - s + 1
    if case == "c'":
        return -2 * s
    if case == "d":
        return s - l
    if case == "e":
        k = d / 2 + s
        return -l - s + (k if k > 0 else 0.0)
    k = d - s
    return s - l + (d / 2 - s if k > 0 else -d / 2)


# ---------------------------------------------------------------------------
# phase sampling
# ---------------------------------------------------------------------------

# (component, center of the xi box, translate of the first factor, partner translate);
# centers are multiples of e_1 given as (coefficient of N, offset).
_PHASE_BOXES = {
    "a": (2, (2, 0), (1, 0), (-1, 0)),
    "b": (2, (2, 1), (1, 1), (-1, 0)),
    "c": (2, (-1, 0), (0, 0), (1, 0)),
    "c'": (2, (0, 0), (1, 0), (1, 0)),
    "d": (1, (1, 0), (0, 0), (1, 0)),
    "e": (1, (0, 0), (1, 0), (-1, 0)),
    "f": (1, (1, 0), (0, 0), (1, 0)),
}


def phase_margins(spec: InitialDataSpec, T: float, n_samples: int = 4096, seed: int = 0) -> dict:
    """Sample the resonance boxes of the lower-bound argument and report ``max T |phi|``.

    ``xi`` runs over ``xi_0 + Q/2`` and ``eta`` over the part of the first
    factor's box compatible with the partner factor.
    """
    comp, xc, e1, e2 = _PHASE_BOXES[spec.case]
    N, d = spec.N, spec.d
    half = np.asarray(spec.cuboid.half)
    unit = np.zeros(d)
    unit[0] = 1.0
    at = lambda c: (c[0] * N + c[1]) * unit  # noqa: E731
    rng = np.random.default_rng(seed)
    xi = at(xc) + rng.uniform(-0.5, 0.5, (n_samples, d)) * half
    # eta in (e1 + Q) intersected with (xi + e2 + Q) [wave] or (xi - e2 + Q) [Schrodinger]
    partner = xi + at(e2) if comp == 2 else xi - at(e2)
    lo = np.maximum(at(e1) - half, partner - half)
    hi = np.minimum(at(e1) + half, partner + half)
    eta = lo + rng.uniform(0, 1, (n_samples, d)) * (hi - lo)
    if comp == 2:
        phi = np.abs(wave_phase(xi, eta))
    else:
        phi = np.maximum(np.abs(schrodinger_phase(xi, eta, 1)), np.abs(schrodinger_phase(xi, eta, -1)))
    mx = float(np.max(phi))
    return {"case": spec.case, "N": N, "component": comp, "T": T, "seed": seed,
            "samples": n_samples, "max_abs_phi": mx, "max_T_phi": T * mx}
