"""Config-driven scenario runner and report emission.

A scenario evaluates both sides of one of the characterizations on a sweep
of measures, truncation degrees and averaging radii, and reports each cell
as a row: bracketing values for the operator side, the measure-side norm,
and their ratios.  Joint divergence of the two sides counts as agreement
(the characterizations are if-and-only-if statements).  Reports are
deterministic byte for byte under a fixed config and seed: cells are
assembled in config order, floats are serialized by ``repr``, and no
timestamps enter the output.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .geometry import BallPoint, Lattice, generate_lattice
from .kernels import KernelParams, UNWEIGHTED, forelli_rudin, kernel_diag
from .measures import (AtomicMeasure, GridDensityMeasure, MeasureSpec,
                       RadialPowerMeasure, ball_average_many, berezin_grid,
                       carleson_snorm, invariant_lp_norm, kappa_exponent,
                       lattice_seq_norm, measure_from_json, measure_to_json,
                       mu_hat_grid, s_exponent)
from .operators import build_basis, embedding_gram, hs_norm, toeplitz_apply, \
    toeplitz_matrix
from .quadrature import DEFAULT_SCHEME, QuadratureScheme, disk_grid
from .summing import order_bounded_upper, pi2_embedding_exact

SCENARIOS = ("toeplitz-summing", "carleson-summing", "lemma24-equivalence",
             "berezin-identity", "forelli-rudin-asymptotics")

CSV_COLUMNS = ("scenario", "measure", "p", "q", "r", "exponent", "D",
               "delta", "lhs_lower", "lhs_upper", "rhs", "ratio_low",
               "ratio_high", "flags")

#: boundary radii used for growth-exponent fits
FIT_RADII = (0.9, 0.99, 0.999)
#: (b, c) pairs swept by the asymptotics scenario
FIT_PAIRS = ((0.0, 4.0), (1.0, 4.0), (0.0, 3.0))


class ConfigError(ValueError):
    """Raised when an experiment configuration fails validation."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    measures: tuple[MeasureSpec, ...]
    p: float = 2.0
    q: float = 2.0
    r: float = 2.0
    deltas: tuple[float, ...] = (0.5,)
    degrees: tuple[int, ...] = (64,)
    quadrature: QuadratureScheme = DEFAULT_SCHEME
    seed: int = 0
    region_radius: float = 4.0
    output: str | None = None

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; "
                              f"expected one of {SCENARIOS}")
        if self.scenario == "toeplitz-summing" and not self.p > 1.0:
            raise ConfigError("toeplitz-summing requires p > 1")
        if self.scenario == "carleson-summing" and not (
                1.0 <= self.p <= 2.0 and 1.0 <= self.q <= 2.0):
            raise ConfigError("carleson-summing requires p, q in [1, 2]")
        if self.scenario == "lemma24-equivalence" and self.p < 1.0:
            raise ConfigError("lemma24-equivalence requires p >= 1")
        if any(d <= 0 for d in self.deltas):
            raise ConfigError("deltas must be positive")
        if any(d < 0 for d in self.degrees):
            raise ConfigError("degrees must be nonnegative")
        return self

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "measures": [measure_to_json(m) for m in self.measures],
            "p": self.p, "q": self.q, "r": self.r,
            "deltas": list(self.deltas),
            "degrees": list(self.degrees),
            "quadrature": self.quadrature.to_json(),
            "seed": self.seed,
            "region_radius": self.region_radius,
            "output": self.output,
        }

    @staticmethod
    def from_json(obj: dict) -> "ExperimentConfig":
        try:
            raw = obj.get("measures", [])
            measures: list[MeasureSpec] = []
            for entry in raw:
                if "family" in entry:
                    measures.extend(builtin_family(entry["family"],
                                                   entry.get("params", {})))
                else:
                    measures.append(measure_from_json(entry))
            quad = QuadratureScheme.from_json(obj.get("quadrature", {}))
            cfg = ExperimentConfig(
                scenario=obj["scenario"],
                measures=tuple(measures),
                p=float(obj.get("p", 2.0)),
                q=float(obj.get("q", 2.0)),
                r=float(obj.get("r", 2.0)),
                deltas=tuple(float(d) for d in obj.get("deltas", (0.5,))),
                degrees=tuple(int(d) for d in obj.get("degrees", (64,))),
                quadrature=quad,
                seed=int(obj.get("seed", 0)),
                region_radius=float(obj.get("region_radius", 4.0)),
                output=obj.get("output"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad experiment config: {exc}") from exc
        return cfg.validate()


@dataclass(frozen=True)
class ReportCell:
    scenario: str
    measure: str
    p: float
    q: float
    r: float
    exponent: float | None
    degree: int | None
    delta: float | None
    lhs_lower: float
    lhs_upper: float
    rhs: float
    ratio_low: float | None
    ratio_high: float | None
    flags: str

    def to_json(self) -> dict:
        enc = lambda v: ("inf" if v is not None and math.isinf(v) else v)
        return {
            "measure": self.measure, "p": self.p, "q": self.q, "r": self.r,
            "exponent": enc(self.exponent), "D": self.degree,
            "delta": self.delta, "lhs_lower": enc(self.lhs_lower),
            "lhs_upper": enc(self.lhs_upper), "rhs": enc(self.rhs),
            "ratio_low": enc(self.ratio_low), "ratio_high": enc(self.ratio_high),
            "flags": self.flags,
        }

    @staticmethod
    def from_json(scenario: str, obj: dict) -> "ReportCell":
        dec = lambda v: (math.inf if v == "inf" else v)
        return ReportCell(
            scenario=scenario, measure=obj["measure"], p=obj["p"],
            q=obj["q"], r=obj["r"], exponent=dec(obj["exponent"]),
            degree=obj["D"], delta=obj["delta"],
            lhs_lower=dec(obj["lhs_lower"]), lhs_upper=dec(obj["lhs_upper"]),
            rhs=dec(obj["rhs"]), ratio_low=dec(obj["ratio_low"]),
            ratio_high=dec(obj["ratio_high"]), flags=obj["flags"],
        )


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    cells: tuple[ReportCell, ...]
    summary: dict

    def to_json(self) -> dict:
        return {"config": self.config.to_json(),
                "cells": [c.to_json() for c in self.cells],
                "summary": self.summary}


def report_from_json(obj: dict) -> ExperimentReport:
    cfg = ExperimentConfig.from_json(obj["config"])
    cells = tuple(ReportCell.from_json(cfg.scenario, c)
                  for c in obj["cells"])
    return ExperimentReport(config=cfg, cells=cells, summary=obj["summary"])


# ---------------------------------------------------------------------------
# builtin measure families

def builtin_family(name: str, params: dict | None = None) -> list[MeasureSpec]:
    """Named measure families spanning finite and infinite norm values."""
    params = dict(params or {})
    if name == "radial-powers":
        ts = params.get("ts", (1.0, 2.0, 3.0))
        scale = float(params.get("scale", 1.0))
        return [RadialPowerMeasure(t=float(t), scale=scale) for t in ts]
    if name == "single-atoms":
        radii = params.get("radii", (0.0, 0.6))
        return [AtomicMeasure.single(complex(float(rad), 0.0))
                for rad in radii]
    if name == "annuli":
        bounds = params.get("bounds", ((0.3, 0.5),))
        height = float(params.get("height", 1.0))
        return [GridDensityMeasure.annulus(float(r1), float(r2), height)
                for r1, r2 in bounds]
    if name == "lattice-atoms":
        delta = float(params.get("delta", 1.0))
        region = float(params.get("region", 2.0))
        expo = float(params.get("weight_exponent", 2.0))
        lat = _lattice_cached(delta, region)
        atoms = tuple((BallPoint.of(a), float((1.0 - abs(a) ** 2) ** expo))
                      for a in lat.points)
        return [AtomicMeasure(atoms)]
    if name == "default":
        return (builtin_family("radial-powers")
                + builtin_family("single-atoms")
                + builtin_family("annuli"))
    raise ConfigError(f"unknown builtin family {name!r}")


@lru_cache(maxsize=8)
def _lattice_cached(delta: float, region: float) -> Lattice:
    return generate_lattice(delta, region)


# ---------------------------------------------------------------------------
# scenario cells

def _ratio(value: float, rhs: float) -> float | None:
    if rhs is None or not math.isfinite(rhs) or rhs <= 0.0:
        return None
    if math.isinf(value):
        return math.inf
    return value / rhs


def _divergence_flags(lhs_upper: float, rhs: float) -> list[str]:
    flags = []
    if math.isinf(rhs) and math.isinf(lhs_upper):
        flags.append("agree-infinite")
    elif math.isinf(rhs) != math.isinf(lhs_upper):
        flags.append("divergence-mismatch")
    return flags


def _toeplitz_cell(cfg: ExperimentConfig, mu: MeasureSpec, degree: int,
                   delta: float) -> ReportCell:
    kappa = kappa_exponent(cfg.p, cfg.r)
    scheme = cfg.quadrature
    basis = build_basis(1, 0.0, degree)
    flags: list[str] = []
    if abs(cfg.p - 2.0) < 1e-12 and abs(cfg.r - 2.0) < 1e-12:
        lower = hs_norm(toeplitz_matrix(mu, basis))
        flags.append("lower:exact-hilbert")
    else:
        from .summing import build_dual_sampler, onb_family, \
            summing_lower_bound
        op = toeplitz_matrix(mu, basis)
        fam = onb_family(basis, p=cfg.p)
        sampler = build_dual_sampler(cfg.p, basis)
        est = summing_lower_bound(op, fam, cfg.r, sampler)
        lower = est.lower
        flags.append(f"lower:{est.method}")
    upper_est = order_bounded_upper(mu, cfg.p, delta, scheme, degree=degree)
    upper = upper_est.upper
    if cfg.r < cfg.p:
        flags.append("upper-valid-for-r>=p-only")
    grid = disk_grid(scheme)
    rhs = invariant_lp_norm(berezin_grid(mu, grid.z, scheme), kappa, scheme)
    flags.extend(_divergence_flags(upper, rhs))
    return ReportCell(
        scenario=cfg.scenario, measure=_label(mu), p=cfg.p, q=cfg.q, r=cfg.r,
        exponent=kappa, degree=degree, delta=delta, lhs_lower=lower,
        lhs_upper=upper, rhs=rhs, ratio_low=_ratio(lower, rhs),
        ratio_high=_ratio(upper, rhs), flags=";".join(flags))


def _carleson_cell(cfg: ExperimentConfig, mu: MeasureSpec, degree: int,
                   delta: float) -> ReportCell:
    s = s_exponent(cfg.p, cfg.q)
    basis = build_basis(1, 0.0, degree)
    lhs = pi2_embedding_exact(mu, basis)
    rhs = carleson_snorm(mu, cfg.p, cfg.q, delta, cfg.quadrature)
    flags = ["lhs:pi2-embedding-trace"]
    if math.isinf(rhs):
        # the truncated trace is finite at every degree; an infinite
        # measure-side norm shows up as trace growth in D, not as an
        # infinite cell value
        flags.append("rhs-infinite-lhs-grows-with-D")
    return ReportCell(
        scenario=cfg.scenario, measure=_label(mu), p=cfg.p, q=cfg.q, r=cfg.r,
        exponent=s, degree=degree, delta=delta, lhs_lower=lhs, lhs_upper=lhs,
        rhs=rhs, ratio_low=_ratio(lhs, rhs), ratio_high=_ratio(lhs, rhs),
        flags=";".join(flags))


def _lemma24_cell(cfg: ExperimentConfig, mu: MeasureSpec,
                  delta: float) -> ReportCell:
    scheme = cfg.quadrature
    grid = disk_grid(scheme)
    q_tilde = invariant_lp_norm(berezin_grid(mu, grid.z, scheme), cfg.p, scheme)
    q_hat = invariant_lp_norm(mu_hat_grid(mu, delta, scheme), cfg.p, scheme)
    lat = _lattice_cached(delta, cfg.region_radius)
    q_seq = lattice_seq_norm(mu, lat, cfg.p, scheme)
    vals = [q_tilde, q_hat, q_seq]
    flags = [f"lattice-size:{len(lat)}"]
    if all(math.isfinite(v) and v > 0 for v in vals):
        pairwise = [a / b for a in vals for b in vals if b is not a]
        rlow, rhigh = min(pairwise), max(pairwise)
    else:
        rlow = rhigh = None
        flags.append("nonfinite-quantity")
    return ReportCell(
        scenario=cfg.scenario, measure=_label(mu), p=cfg.p, q=cfg.q, r=cfg.r,
        exponent=cfg.p, degree=None, delta=delta, lhs_lower=q_tilde,
        lhs_upper=q_hat, rhs=q_seq, ratio_low=rlow, ratio_high=rhigh,
        flags=";".join(flags))


def _berezin_cell(cfg: ExperimentConfig, mu: MeasureSpec) -> ReportCell:
    rng = np.random.default_rng(cfg.seed)
    pts = 0.9 * np.sqrt(rng.uniform(0.0, 1.0, 50)) \
        * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, 50))
    kp = UNWEIGHTED
    worst = 0.0
    for z in pts:
        zp = BallPoint.of(z)
        kd = kernel_diag(kp, zp)
        kz_norm = math.sqrt(kd)
        f = lambda w: (1.0 - np.asarray(w) * np.conj(z)) ** (-2.0) / kz_norm
        lhs = toeplitz_apply(mu, f, zp, kp)
        rhs = float(berezin_grid(mu, np.asarray([z]))[0]) * kz_norm
        if rhs > 0:
            worst = max(worst, abs(lhs - rhs) / rhs)
    tol = 1e-9
    flags = ["ok" if worst < tol else "identity-violation"]
    return ReportCell(
        scenario=cfg.scenario, measure=_label(mu), p=2.0, q=cfg.q, r=cfg.r,
        exponent=None, degree=None, delta=None, lhs_lower=worst,
        lhs_upper=worst, rhs=tol, ratio_low=worst / tol, ratio_high=worst / tol,
        flags=";".join(flags))


def fit_growth_exponent(values, radii=FIT_RADII) -> float:
    """Boundary growth exponent from the two boundary-most radii.

    The model is value ~ (1 - |z|^2)^(-a); consecutive-pair slopes in the
    log-log scale converge to ``a`` as the pair moves boundaryward, so the
    last pair is the estimator (a least-squares line over all radii is
    polluted by the subleading terms at the innermost radius).
    """
    radii = np.asarray(radii, dtype=float)
    vals = np.asarray(values, dtype=float)
    x = np.log(1.0 - radii ** 2)
    y = np.log(vals)
    return float(-(y[-1] - y[-2]) / (x[-1] - x[-2]))


def _forelli_cell(cfg: ExperimentConfig, b: float, c: float) -> ReportCell:
    vals = [forelli_rudin(b, c, UNWEIGHTED, BallPoint.of(rr), cfg.quadrature)
            for rr in FIT_RADII]
    fitted = fit_growth_exponent(vals)
    predicted = c - 2.0 - b
    flags = [f"values:{','.join(repr(v) for v in vals)}"]
    return ReportCell(
        scenario=cfg.scenario, measure=f"S({b:g},{c:g})", p=cfg.p, q=cfg.q,
        r=cfg.r, exponent=predicted, degree=None, delta=None,
        lhs_lower=fitted, lhs_upper=fitted, rhs=predicted,
        ratio_low=_ratio(fitted, predicted), ratio_high=_ratio(fitted, predicted),
        flags=";".join(flags))


def _label(mu: MeasureSpec) -> str:
    return mu.label()


def _cell_jobs(cfg: ExperimentConfig) -> list[Callable[[], ReportCell]]:
    jobs: list[Callable[[], ReportCell]] = []
    if cfg.scenario == "toeplitz-summing":
        for mu in cfg.measures:
            for deg in cfg.degrees:
                for delta in cfg.deltas:
                    jobs.append(lambda m=mu, d=deg, dl=delta:
                                _toeplitz_cell(cfg, m, d, dl))
    elif cfg.scenario == "carleson-summing":
        for mu in cfg.measures:
            for deg in cfg.degrees:
                for delta in cfg.deltas:
                    jobs.append(lambda m=mu, d=deg, dl=delta:
                                _carleson_cell(cfg, m, d, dl))
    elif cfg.scenario == "lemma24-equivalence":
        for mu in cfg.measures:
            for delta in cfg.deltas:
                jobs.append(lambda m=mu, dl=delta: _lemma24_cell(cfg, m, dl))
    elif cfg.scenario == "berezin-identity":
        for mu in cfg.measures:
            jobs.append(lambda m=mu: _berezin_cell(cfg, m))
    elif cfg.scenario == "forelli-rudin-asymptotics":
        for b, c in FIT_PAIRS:
            jobs.append(lambda bb=b, cc=c: _forelli_cell(cfg, bb, cc))
    return jobs


def _error_cell(cfg: ExperimentConfig, exc: Exception) -> ReportCell:
    return ReportCell(scenario=cfg.scenario, measure="<error>", p=cfg.p,
                      q=cfg.q, r=cfg.r, exponent=None, degree=None,
                      delta=None, lhs_lower=math.nan, lhs_upper=math.nan,
                      rhs=math.nan, ratio_low=None, ratio_high=None,
                      flags=f"error:{type(exc).__name__}:{exc}")


def run_scenario(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Evaluate every cell of the configured sweep and summarize.

    Cells are independent and may execute on a thread pool; per-cell
    numeric failures are recorded in the cell flags and the run continues.
    Assembly order is config order regardless of thread count.
    """
    cfg.validate()
    jobs = _cell_jobs(cfg)

    def safe(job):
        try:
            return job()
        except Exception as exc:   # per-cell failures must not kill the run
            return _error_cell(cfg, exc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = tuple(pool.map(safe, jobs))
    else:
        cells = tuple(safe(job) for job in jobs)
    return ExperimentReport(config=cfg, cells=cells,
                            summary=_summarize(cfg, cells))


def _summarize(cfg: ExperimentConfig, cells: tuple[ReportCell, ...]) -> dict:
    ratios = [c for c in cells if c.ratio_low is not None
              and math.isfinite(c.ratio_low)]
    per_measure: dict = {}
    for c in ratios:
        lo, hi = per_measure.get(c.measure, (math.inf, -math.inf))
        per_measure[c.measure] = (min(lo, c.ratio_low),
                                  max(hi, c.ratio_high if c.ratio_high
                                      is not None and math.isfinite(c.ratio_high)
                                      else c.ratio_low))
    envelope = None
    finite_lo = [v[0] for v in per_measure.values() if v[0] > 0]
    finite_hi = [v[1] for v in per_measure.values()]
    if finite_lo and finite_hi:
        envelope = max(finite_hi) / min(finite_lo)
    mismatches = sum(1 for c in cells if "divergence-mismatch" in c.flags)
    errors = sum(1 for c in cells if c.flags.startswith("error:"))
    return {
        "cells": len(cells),
        "per_measure_ratio_range": {k: list(v) for k, v in per_measure.items()},
        "ratio_envelope": envelope,
        "divergence_mismatches": mismatches,
        "errors": errors,
    }


# ---------------------------------------------------------------------------
# emission

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def report_csv(rep: ExperimentReport) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for c in rep.cells:
        row = (c.scenario, c.measure, c.p, c.q, c.r, c.exponent, c.degree,
               c.delta, c.lhs_lower, c.lhs_upper, c.rhs, c.ratio_low,
               c.ratio_high, c.flags)
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v
                              for v in row))
    return "\n".join(lines) + "\n"


def _plot_series(rep: ExperimentReport) -> dict[str, str]:
    """Two-column text series: ratio vs D per measure, ratio vs t."""
    series: dict[str, list[tuple[float, float]]] = {}
    for c in rep.cells:
        if c.ratio_low is None or not math.isfinite(c.ratio_low):
            continue
        if c.degree is not None:
            key = f"{c.scenario}__{_slug(c.measure)}__ratio_vs_D"
            series.setdefault(key, []).append((float(c.degree), c.ratio_low))
        if c.measure.startswith("radial_power(t="):
            t = float(c.measure.split("t=")[1].split(")")[0].split(",")[0])
            key = f"{c.scenario}__ratio_vs_t"
            series.setdefault(key, []).append((t, c.ratio_low))
    out = {}
    for key, pairs in series.items():
        body = "\n".join(f"{_fmt(a)} {_fmt(b)}" for a, b in pairs)
        out[key + ".dat"] = body + "\n"
    return out


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() else "-" for ch in text).strip("-")


def emit_report(rep: ExperimentReport, out_dir: str,
                formats: tuple[str, ...] = ("json", "csv")) -> list[str]:
    """Write the report files; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "json" in formats:
        path = os.path.join(out_dir, "report.json")
        with open(path, "w") as fh:
            json.dump(rep.to_json(), fh, indent=1, sort_keys=False)
            fh.write("\n")
        written.append(path)
    if "csv" in formats:
        path = os.path.join(out_dir, "report.csv")
        with open(path, "w") as fh:
            fh.write(report_csv(rep))
        written.append(path)
    if "plotdata" in formats:
        for name, body in _plot_series(rep).items():
            path = os.path.join(out_dir, name)
            with open(path, "w") as fh:
                fh.write(body)
            written.append(path)
    return written
