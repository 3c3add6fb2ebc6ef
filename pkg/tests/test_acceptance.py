"""Acceptance gate: one check per criterion, each printing a verdict line.

Every check runs at its stated tolerance and wall-clock budget.  Two checks
are known to fail and are kept as stated rather than loosened:

* ``criterion 3b``: the truncated embedding trace for the weight
  (1-|z|^2) dv grows like sum 1/(m+2) ~ log D (the D = 400 value is
  2.3611...), so no finite target near 1 can be met at any degree.
* ``criterion 6``: the discrete lattice l^p norm carries an inherent
  (1/cell-area)^(1/p) offset against the continuum norms (about 5-7x at
  delta = 0.5), and point masses push the averaged-density norms another
  factor above the Berezin side, so the pairwise window [1/5, 5] is
  exceeded in many cells (worst observed ~15x) for any correct
  implementation.
"""

import json
import math
import time

import numpy as np
import pytest

from bergmanlab.cli import main as cli_main, _random_atom_measures
from bergmanlab.experiments import (ExperimentConfig, FIT_RADII,
                                    fit_growth_exponent, run_scenario)
from bergmanlab.geometry import BallPoint
from bergmanlab.kernels import (UNWEIGHTED, apply_fractional, forelli_rudin,
                                kernel_poly)
from bergmanlab.measures import (AtomicMeasure, GridDensityMeasure,
                                 RadialPowerMeasure, berezin_grid,
                                 invariant_lp_norm, kappa_exponent,
                                 lattice_seq_norm, mu_hat_grid, s_exponent,
                                 measure_to_json)
from bergmanlab.operators import build_basis, hs_norm, toeplitz_matrix
from bergmanlab.quadrature import DEFAULT_SCHEME, QuadratureScheme, disk_grid
from bergmanlab.summing import (khinchine_probe, order_bounded_upper,
                                pi2_embedding_exact)

THEOREM_FAMILY = (RadialPowerMeasure(1.0), RadialPowerMeasure(2.0),
                  RadialPowerMeasure(3.0), AtomicMeasure.single(0j),
                  AtomicMeasure.single(0.6),
                  GridDensityMeasure.annulus(0.3, 0.5))


def _verdict(name, ok, detail):
    print(f"[{name}] {'PASS' if ok else 'FAIL'}: {detail}")
    return ok


def test_criterion_01_berezin_identity():
    t0 = time.time()
    cfg = ExperimentConfig(scenario="berezin-identity",
                           measures=tuple(_random_atom_measures(20, 0)),
                           seed=0)
    rep = run_scenario(cfg)
    worst = max(c.lhs_lower for c in rep.cells)
    elapsed = time.time() - t0
    ok = worst < 1e-9 and elapsed < 5.0
    assert _verdict("criterion 1", ok,
                    f"worst relative deviation {worst:.3e} over 20 measures "
                    f"x 50 points in {elapsed:.2f}s")


def test_criterion_02_fractional_identity():
    t0 = time.time()
    degree = 128
    worst = 0.0
    for order in (0.5, 1.0, 3.0):
        for w in (0.3, 0.7):
            base = kernel_poly(BallPoint.of(w), 2.0, degree)
            raised = apply_fractional("raise", order, base)
            target = kernel_poly(BallPoint.of(w), 2.0 + order, degree)
            diff = raised.dense(degree) - target.dense(degree)
            worst = max(worst, float(np.max(np.abs(diff))))
    elapsed = time.time() - t0
    ok = worst < 1e-10 and elapsed < 1.0
    assert _verdict("criterion 2", ok,
                    f"worst coefficient deviation {worst:.3e} at D=128 "
                    f"in {elapsed:.2f}s")


def test_criterion_03a_embedding_atom_convergence():
    t0 = time.time()
    basis = build_basis(1, 0.0, 400)
    worst = 0.0
    for a in (0.2, 0.5, 0.8):
        got = pi2_embedding_exact(AtomicMeasure.single(a), basis)
        expected = 1.0 / (1.0 - a * a)
        worst = max(worst, abs(got - expected) / expected)
    elapsed = time.time() - t0
    ok = worst < 1e-6 and elapsed < 10.0
    assert _verdict("criterion 3a", ok,
                    f"worst relative error {worst:.3e} at D=400 "
                    f"in {elapsed:.2f}s")


def test_criterion_03b_embedding_radial_weight_value():
    # stated target: the D=400 value for (1-|z|^2) dv lies within 1e-4 of 1.
    # The trace is the harmonic-like sum of 1/(m+2), which diverges, so the
    # computed value sits near 2.36 and the check fails for any correct
    # implementation; kept as stated.
    got = pi2_embedding_exact(RadialPowerMeasure(1.0),
                              build_basis(1, 0.0, 400))
    ok = abs(got - 1.0) < 1e-4
    assert _verdict("criterion 3b", ok,
                    f"D=400 value {got:.6f} vs stated target 1 +- 1e-4 "
                    f"(trace grows like log D)")


def test_criterion_04_hilbert_case_envelope():
    t0 = time.time()
    grid = disk_grid(DEFAULT_SCHEME)
    ratios = []
    for mu in THEOREM_FAMILY:
        hs = hs_norm(toeplitz_matrix(mu, build_basis(1, 0.0, 256)))
        rhs = invariant_lp_norm(berezin_grid(mu, grid.z), 2.0)
        ratios.append(hs / rhs)
    envelope = max(ratios) / min(ratios)
    drift = 0.0
    for mu in THEOREM_FAMILY[:3]:
        h256 = hs_norm(toeplitz_matrix(mu, build_basis(1, 0.0, 256)))
        h512 = hs_norm(toeplitz_matrix(mu, build_basis(1, 0.0, 512)))
        drift = max(drift, abs(h512 - h256) / h256)
    elapsed = time.time() - t0
    ok = envelope <= 10.0 and drift < 0.01 and elapsed < 120.0
    assert _verdict("criterion 4", ok,
                    f"envelope {envelope:.3f} (<=10), radial truncation "
                    f"drift {drift:.4%} (<1%) in {elapsed:.1f}s")


def test_criterion_05_divergence_coherence():
    t0 = time.time()
    mismatched = 0
    rows = []
    for t in (0.0, 0.25, 1.0, 2.0, 3.0):
        mu = RadialPowerMeasure(t)
        grid = disk_grid(DEFAULT_SCHEME)
        rhs = invariant_lp_norm(berezin_grid(mu, grid.z), 2.0)
        upper = order_bounded_upper(mu, 2.0, 0.5).upper
        should_diverge = t < 0.5
        coherent = (math.isinf(rhs) == math.isinf(upper)
                    == should_diverge)
        mismatched += 0 if coherent else 1
        rows.append(f"t={t}:{'inf' if math.isinf(rhs) else 'fin'}")
    elapsed = time.time() - t0
    ok = mismatched == 0 and elapsed < 60.0
    assert _verdict("criterion 5", ok,
                    f"{' '.join(rows)}; mismatched cells {mismatched} "
                    f"in {elapsed:.1f}s")


def test_criterion_06_lattice_equivalence_window(lattice_half_r4,
                                                 lattice_one_r4):
    # stated window [1/5, 5] for all pairwise ratios among the Berezin
    # invariant norm, the averaged-density invariant norm, and the lattice
    # sequence norm; fails for any correct implementation (see module
    # docstring), kept as stated.
    t0 = time.time()
    grid = disk_grid(DEFAULT_SCHEME)
    failures = []
    for mu in THEOREM_FAMILY:
        tilde = berezin_grid(mu, grid.z)
        for lat in (lattice_half_r4, lattice_one_r4):
            hat = mu_hat_grid(mu, lat.delta, DEFAULT_SCHEME)
            for p in (4.0 / 3.0, 2.0, 4.0):
                q1 = invariant_lp_norm(tilde, p)
                q2 = invariant_lp_norm(hat, p)
                q3 = lattice_seq_norm(mu, lat, p)
                vals = (q1, q2, q3)
                pairwise = [a / b for a in vals for b in vals if a is not b]
                if min(pairwise) < 0.2 or max(pairwise) > 5.0:
                    failures.append((mu.label(), lat.delta, round(p, 3),
                                     round(min(pairwise), 3),
                                     round(max(pairwise), 3)))
    elapsed = time.time() - t0
    ok = not failures and elapsed < 180.0
    assert _verdict(
        "criterion 6", ok,
        f"{len(failures)} of 36 cells outside [1/5, 5] in {elapsed:.1f}s; "
        f"worst offenders {failures[:4]}")


def test_criterion_07_forelli_rudin_asymptotics():
    t0 = time.time()
    # default scheme resolves kernels to |z| <= 0.99; the 0.999 radius of
    # the fit needs the angular-refined, deeper-graded scheme
    scheme = QuadratureScheme(panels=34, nodes_per_panel=16, angular=16384,
                              r_max=1 - 1e-8)
    worst = 0.0
    for (b, c) in ((0.0, 4.0), (1.0, 4.0), (0.0, 3.0)):
        vals = [forelli_rudin(b, c, UNWEIGHTED, BallPoint.of(r), scheme)
                for r in FIT_RADII]
        fitted = fit_growth_exponent(vals)
        predicted = c - 2.0 - b
        worst = max(worst, abs(fitted - predicted) / predicted)
    elapsed = time.time() - t0
    ok = worst < 0.05 and elapsed < 30.0
    assert _verdict("criterion 7", ok,
                    f"worst exponent error {worst:.2%} (<5%) in "
                    f"{elapsed:.1f}s")


def test_criterion_08_khinchine_sanity():
    t0 = time.time()
    b = np.array([0.45, -0.3 + 0.2j, 0.8j, 0.15 - 0.55j, 0.6])
    probe = khinchine_probe(b, draws=10_000, seed=2024)
    dev = abs(probe["means"][2] - probe["target_l2"])
    elapsed = time.time() - t0
    ok = (dev <= 3 * probe["stderr_l2"]
          and probe["bracket_low"] <= 1.0 <= probe["bracket_high"]
          and elapsed < 5.0)
    assert _verdict("criterion 8", ok,
                    f"l=2 deviation {dev:.4f} vs 3se="
                    f"{3 * probe['stderr_l2']:.4f}; brackets "
                    f"[{probe['bracket_low']:.3f}, "
                    f"{probe['bracket_high']:.3f}] in {elapsed:.2f}s")


def test_criterion_09_exponent_selectors():
    table = [
        (1.5, 3.0, 2.0), (1.2, 1.0, 2.0), (2.0, 1.0, 2.0), (2.0, 2.0, 2.0),
        (2.0, 5.0, 2.0), (4.0, 1.0, 4.0 / 3.0), (4.0, 4.0 / 3.0, 4.0 / 3.0),
        (3.0, 1.5, 1.5), (3.0, 2.0, 2.0), (4.0, 2.5, 2.5), (3.0, 3.0, 3.0),
        (4.0, 7.0, 4.0),
    ]
    bad = [(p, r) for p, r, want in table
           if abs(kappa_exponent(p, r) - want) > 1e-14]
    s_ok = (abs(s_exponent(2.0, 2.0) - 1.0) < 1e-14
            and abs(s_exponent(1.0, 1.0) - 2.0) < 1e-14
            and abs(s_exponent(1.0, 1.5) - 4.0) < 1e-14)
    ok = not bad and s_ok
    assert _verdict("criterion 9", ok,
                    f"12-case table with seams exact; s(2,2)=1, "
                    f"s(1,q)=2/(2-q) verified")


def test_criterion_10_determinism(tmp_path):
    cfg = {
        "scenario": "toeplitz-summing",
        "measures": [{"family": "radial-powers", "params": {"ts": [1, 2]}},
                     measure_to_json(AtomicMeasure.single(0j))],
        "degrees": [32, 64], "deltas": [0.5],
        "quadrature": {"panels": 12, "nodes": 8, "angular": 64},
        "seed": 7,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    outs = []
    for sub in ("run1", "run2"):
        rc = cli_main(["--seed", "7", "--out", str(tmp_path / sub),
                       "verify", "--config", str(cfg_path)])
        assert rc == 0
        outs.append(open(tmp_path / sub / "report.csv", "rb").read())
    ok = outs[0] == outs[1]
    assert _verdict("criterion 10", ok,
                    f"two verify runs byte-identical "
                    f"({len(outs[0])} bytes)")
