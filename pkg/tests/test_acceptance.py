"""Acceptance suite: one test per release criterion, each printing a verdict.

Every expected number here was produced by an independent computation
(closed forms where available, the density-matrix solver otherwise) before
being frozen into an assertion.  Each test also enforces its runtime budget.
"""
import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from chiralchain import (
    ChiralCoupling,
    FluctuationSpec,
    NoSteadyState,
    build_geometry,
    compare_with_amplitude_model,
    fluctuation_ensemble,
    transport_point,
    two_atom_transport,
)

GRID_401 = np.linspace(0.0, 2.0 * np.pi, 401)
CLI = [sys.executable, "-m", "chiralchain.cli"]


def tp(n, xi, d, delta, rabi=0.01):
    coupling = ChiralCoupling.from_directionality(d)
    return transport_point(n, xi, coupling, delta, rabi=rabi).imbalance


def transport_curve(n, d, delta):
    return np.array([tp(n, x, d, delta) for x in GRID_401])


def run_cli(*args):
    env = {k: v for k, v in os.environ.items() if not k.startswith("CHIRALCHAIN_")}
    return subprocess.run(CLI + list(args), capture_output=True, text=True, env=env)


def test_acceptance_1_two_atom_closed_form_equivalence():
    """10^3 random two-atom draws: pipeline equals the closed form to 1e-10."""
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    accepted = 0
    while accepted < 1000:
        d1, d2 = rng.uniform(-2.0, 2.0, 2)
        gl = rng.uniform(0.0, 1.0)
        xi = rng.uniform(0.1, 2.0 * np.pi - 0.1)
        denominator = (1j * d1 - 0.5) * (1j * d2 - 0.5) - (1 - gl) * gl * np.exp(-2j * xi)
        if abs(denominator) < 1e-2:
            continue
        closed = two_atom_transport(d1, d2, gl, xi)
        coupling = ChiralCoupling(gamma_left=gl, gamma_right=1.0 - gl)
        pipeline = transport_point(2, xi, coupling, np.array([d1, d2])).imbalance
        worst = max(worst, abs(pipeline - closed) / max(abs(closed), 1e-300))
        accepted += 1
    elapsed = time.perf_counter() - start
    assert worst < 1e-10
    assert elapsed < 1.0
    print(f"[acceptance 1] PASS worst relative deviation {worst:.2e} over 1000 draws, {elapsed:.2f}s")


def test_acceptance_2_resonant_first_atom_pins_full_imbalance():
    """Reciprocal pair at zero spacing: detuning only the second atom leaves
    it strictly dark, so the imbalance pins to exactly +1."""
    for delta_2 in (0.5, -0.5):
        value = tp(2, 0.0, 0.0, np.array([0.0, delta_2]))
        assert abs(value - 1.0) < 1e-9
    print("[acceptance 2] PASS imbalance pinned to 1 for both detuning signs")


def test_acceptance_3_cascaded_resonant_minimum_location_and_width():
    """Ten cascaded resonant atoms: deepest imbalance sits at half-wavelength
    spacing and the dip width is close to unity."""
    start = time.perf_counter()
    curve = transport_curve(10, 1.0, 0.0)
    i_min = int(np.argmin(curve))
    xi_min = GRID_401[i_min]
    step = GRID_401[1] - GRID_401[0]
    assert abs(xi_min - np.pi) <= step
    assert curve[i_min] == pytest.approx(-0.7518796992481201, rel=1e-9)

    half = curve[i_min] / 2.0
    below = np.where(curve <= half)[0]
    lo, hi = below[0], below[-1]
    x_lo = GRID_401[lo - 1] + (half - curve[lo - 1]) * step / (curve[lo] - curve[lo - 1])
    x_hi = GRID_401[hi] + (half - curve[hi]) * step / (curve[hi + 1] - curve[hi])
    width = x_hi - x_lo
    assert 0.8 <= width <= 1.2
    assert width == pytest.approx(0.9897686679931748, rel=1e-9)
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    print(f"[acceptance 3] PASS minimum at xi={xi_min:.6f} (grid step {step:.4f}), "
          f"depth {curve[i_min]:.6f}, width {width:.4f}, {elapsed:.2f}s")


def test_acceptance_4_uniform_detuning_shifts_minimum_past_pi():
    start = time.perf_counter()
    expected = {1.0: 5.340707511102649, 0.5: 5.152211951887261}
    for d, xi_expected in expected.items():
        curve = transport_curve(10, d, 1.0)
        xi_min = GRID_401[int(np.argmin(curve))]
        assert xi_min > np.pi
        assert xi_min == pytest.approx(xi_expected, rel=1e-12)
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    print(f"[acceptance 4] PASS detuned minima at xi={expected[1.0]:.4f} (D=1) "
          f"and xi={expected[0.5]:.4f} (D=0.5), both beyond pi, {elapsed:.2f}s")


def test_acceptance_5_phase_reflection_and_detuning_mirror_symmetries():
    start = time.perf_counter()
    xis = np.linspace(0.15, np.pi - 0.15, 25)
    worst_reflection = 0.0
    worst_mirror = 0.0
    for n in (2, 5, 10, 20):
        for d in (0.0, 0.5, 1.0):
            for x in xis:
                worst_reflection = max(
                    worst_reflection,
                    abs(tp(n, x, d, 0.0) - tp(n, 2.0 * np.pi - x, d, 0.0)))
            for delta in (0.5, 1.0):
                for x in xis:
                    worst_mirror = max(
                        worst_mirror,
                        abs(tp(n, x, d, delta) - tp(n, 2.0 * np.pi - x, d, -delta)))
    elapsed = time.perf_counter() - start
    assert worst_reflection < 1e-9
    assert worst_mirror < 1e-9
    assert elapsed < 30.0
    print(f"[acceptance 5] PASS reflection symmetry to {worst_reflection:.2e}, "
          f"detuning mirror to {worst_mirror:.2e}, {elapsed:.2f}s")


def test_acceptance_6_decoherence_free_point_is_detected_not_solved():
    start = time.perf_counter()
    for n in (2, 4, 10):
        with pytest.raises(NoSteadyState):
            tp(n, np.pi, 0.0, 0.0)
    # a hair off the singular point: solvable, but loudly strained
    coupling = ChiralCoupling.from_directionality(0.0)
    nearby = transport_point(10, np.pi, coupling, 1e-3)
    assert nearby.saturation.level == "error"
    assert nearby.condition_number > 1e3
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    print(f"[acceptance 6] PASS singular point raises for N=2,4,10; nearby point "
          f"flagged '{nearby.saturation.level}' with condition {nearby.condition_number:.0f}, "
          f"{elapsed:.2f}s")


def test_acceptance_7_density_matrix_oracle_agrees_quadratically():
    start = time.perf_counter()
    rng = np.random.default_rng(42)
    exponents = {}
    for n in (2, 3, 4):
        delta = rng.uniform(0.5, 1.5)
        d = rng.uniform(0.3, 0.9)
        xi = rng.uniform(0.8, 2.4)
        geometry = build_geometry(n, xi)
        coupling = ChiralCoupling.from_directionality(d)
        report = compare_with_amplitude_model(
            geometry, coupling, np.full(n, delta), (1e-3, 1e-2, 1e-1))
        assert report.exponent == pytest.approx(2.0, abs=0.3)
        mid = report.rows[1]  # the 1e-2 drive point
        assert abs(mid.imbalance_amplitude - mid.imbalance_lindblad) < 1e-3
        exponents[n] = report.exponent
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    summary = ", ".join(f"N={n}: {e:.3f}" for n, e in exponents.items())
    print(f"[acceptance 7] PASS discrepancy scales as drive^2 ({summary}), {elapsed:.2f}s")


def test_acceptance_8_disorder_sensitivity_pattern():
    start = time.perf_counter()
    noise = FluctuationSpec(0.01, 0)
    sigma = {}
    for d in (1.0, 0.5):
        for xi in (0.5 * np.pi, np.pi, 1.9 * np.pi):
            coupling = ChiralCoupling.from_directionality(d)
            stats = fluctuation_ensemble(10, xi, coupling, 0.0, noise,
                                         n_samples=200, base_seed=1234)
            assert stats.n_undefined == 0
            sigma[(d, xi)] = stats.std_imbalance

    # (i) sensitivity grows toward the wide-spacing end of the band
    assert sigma[(1.0, 1.9 * np.pi)] > sigma[(1.0, 0.5 * np.pi)]
    assert sigma[(0.5, 1.9 * np.pi)] > sigma[(0.5, 0.5 * np.pi)]
    # (ii) at half-wavelength spacing the cascaded chain shrugs off disorder
    # that the partially chiral chain cannot
    assert sigma[(1.0, np.pi)] < sigma[(0.5, np.pi)]
    # (iii) no disorder, no spread - exactly
    clean = fluctuation_ensemble(10, 0.5 * np.pi, ChiralCoupling.from_directionality(1.0),
                                 0.0, FluctuationSpec(0.0, 0), n_samples=10, base_seed=1234)
    assert clean.std_imbalance == 0.0

    elapsed = time.perf_counter() - start
    assert elapsed < 120.0
    print(f"[acceptance 8] PASS sigma(D=1): {sigma[(1.0, 0.5*np.pi)]:.2e} -> "
          f"{sigma[(1.0, 1.9*np.pi)]:.2e}; at pi D=1 {sigma[(1.0, np.pi)]:.2e} "
          f"< D=0.5 {sigma[(0.5, np.pi)]:.2e}; zero-noise spread exactly 0, {elapsed:.2f}s")


def test_acceptance_9_fixed_seed_output_is_byte_identical(tmp_path):
    start = time.perf_counter()
    base_args = ["--mode", "fluctuate", "--n-atoms", "10",
                 "--directionality", "1,0.5", "--delta", "0",
                 "--xi-grid", "1.0:6.0:3", "--fluctuation", "0.01",
                 "--samples", "60", "--seed", "1234"]
    outputs = []
    for tag, workers in (("a", "1"), ("b", "4"), ("c", "1")):
        out = tmp_path / f"run_{tag}.csv"
        proc = run_cli(*base_args, "--workers", workers, "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]  # thread count does not leak into results
    assert outputs[0] == outputs[2]  # and reruns reproduce exactly
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0
    print(f"[acceptance 9] PASS {len(outputs)} runs byte-identical "
          f"({len(outputs[0])} bytes each), {elapsed:.2f}s")
