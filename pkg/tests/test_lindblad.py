"""Full density-matrix oracle: generator structure and weak-drive agreement."""
import numpy as np
import pytest

from chiralchain import (
    ChiralCoupling,
    DensityMatrix,
    DriveParams,
    NoUniqueSteadyState,
    build_geometry,
    build_liouvillian,
    compare_with_amplitude_model,
    build_interaction_matrix,
    evolve_dm,
    excited_populations,
    steady_state_dm,
)
from chiralchain.lindblad import _steady_state_by_integration


def make_spec(n, xi, d, delta, rabi):
    geom = build_geometry(n, xi)
    coupling = ChiralCoupling.from_directionality(d)
    drive = DriveParams(detunings=np.full(n, float(delta)), rabi=rabi)
    return build_liouvillian(geom, coupling, drive)


def random_hermitian_unit_trace(dim, rng):
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    herm = raw + raw.conj().T
    return herm / np.trace(herm)


def test_density_matrix_validation():
    good = np.diag([0.5, 0.5]).astype(complex)
    DensityMatrix(good)
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.3], [0.1, 0.5]], dtype=complex))  # not Hermitian
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([0.9, 0.9]).astype(complex))  # trace 1.8
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]).astype(complex))  # negative eigenvalue


def test_excited_populations_basis_states():
    # two atoms: |eg><eg| is computational index 2 with the first atom
    # mapped to the most significant bit
    rho = np.zeros((4, 4), dtype=complex)
    rho[2, 2] = 1.0
    assert np.allclose(excited_populations(rho, 2), [1.0, 0.0])

    plus = np.zeros(4, dtype=complex)
    plus[1] = plus[2] = 1 / np.sqrt(2)
    rho = np.outer(plus, plus.conj())
    assert np.allclose(excited_populations(rho, 2), [0.5, 0.5])


def test_generator_action_matches_dense_matrix():
    rng = np.random.default_rng(17)
    for n, xi, d in ((2, 1.2, 1.0), (3, 2.1, 0.4)):
        spec = make_spec(n, xi, d, delta=0.3, rabi=0.02)
        dense = spec.matrix()
        for _ in range(4):
            rho = random_hermitian_unit_trace(2**n, rng)
            via_apply = spec.apply(rho)
            via_dense = (dense @ rho.reshape(-1)).reshape(rho.shape)
            assert np.max(np.abs(via_apply - via_dense)) < 1e-13


def test_generator_preserves_trace_and_hermiticity():
    rng = np.random.default_rng(23)
    spec = make_spec(3, 1.7, 0.6, delta=0.5, rabi=0.03)
    for _ in range(5):
        rho = random_hermitian_unit_trace(8, rng)
        drho = spec.apply(rho)
        assert abs(np.trace(drho)) < 1e-13
        assert np.max(np.abs(drho - drho.conj().T)) < 1e-13


def test_single_excitation_reduction_reproduces_amplitude_matrix():
    """Without drive, the excited-ground coherence block evolves under exactly
    the matrix the amplitude model uses."""
    for n, xi, d, delta in ((2, np.pi / 2, 1.0, 0.0), (3, 1.4, 0.4, 0.8), (4, 2.6, 0.0, -0.3)):
        geom = build_geometry(n, xi)
        coupling = ChiralCoupling.from_directionality(d)
        drive = DriveParams(detunings=np.full(n, float(delta)), rabi=0.0)
        spec = build_liouvillian(geom, coupling, drive)
        expected = build_interaction_matrix(geom, coupling, drive).entries

        dim = 2**n
        ground = 0
        block = np.zeros((n, n), dtype=complex)
        for nu in range(n):
            rho = np.zeros((dim, dim), dtype=complex)
            rho[2 ** (n - 1 - nu), ground] = 1.0
            image = spec.apply(rho)
            for mu in range(n):
                block[mu, nu] = image[2 ** (n - 1 - mu), ground]
        assert np.max(np.abs(block - expected)) < 1e-12


def test_single_atom_spontaneous_decay():
    spec = make_spec(1, 1.0, 0.0, delta=0.0, rabi=0.0)
    excited = DensityMatrix(np.diag([0.0, 1.0]).astype(complex))
    trajectory = evolve_dm(spec, excited, t_final=4.0, n_steps=8)
    for t, rho in trajectory:
        pop = excited_populations(rho.matrix, 1)[0]
        assert pop == pytest.approx(np.exp(-t), abs=1e-8)


def test_evolution_keeps_states_physical():
    spec = make_spec(2, 1.3, 0.8, delta=0.4, rabi=0.05)
    ground = np.zeros((4, 4), dtype=complex)
    ground[0, 0] = 1.0
    trajectory = evolve_dm(spec, DensityMatrix(ground), t_final=30.0, n_steps=6)
    for _, rho in trajectory:
        # DensityMatrix construction re-validates hermiticity/trace/positivity
        pops = excited_populations(rho.matrix, 2)
        assert np.all(pops >= -1e-12) and np.all(pops <= 1.0)


def test_steady_state_null_space_vs_integration():
    spec = make_spec(3, 1.1, 0.6, delta=0.4, rabi=0.02)
    dense = steady_state_dm(spec)
    integrated = _steady_state_by_integration(spec)
    assert np.max(np.abs(dense.matrix - integrated.matrix)) < 1e-7


def test_dark_subspace_blocks_unique_steady_state():
    # reciprocal, resonant, half-wavelength spacing, no drive: several
    # stationary states coexist and the solver must refuse to pick one
    spec = make_spec(2, np.pi, 0.0, delta=0.0, rabi=0.0)
    with pytest.raises(NoUniqueSteadyState):
        steady_state_dm(spec)


def test_driven_dark_point_saturates_to_quarter_populations():
    spec = make_spec(2, np.pi, 0.0, delta=0.0, rabi=0.01)
    rho = steady_state_dm(spec)
    pops = excited_populations(rho.matrix, 2)
    assert pops == pytest.approx([0.25, 0.25], abs=5e-3)


def test_atom_count_guard():
    with pytest.raises(ValueError, match="n_atoms=8"):
        make_spec(9, 1.0, 0.5, delta=0.0, rabi=0.01)


def test_weak_drive_agreement_three_atoms():
    geom = build_geometry(3, 1.0)
    coupling = ChiralCoupling.from_directionality(0.5)
    report = compare_with_amplitude_model(geom, coupling, np.full(3, 1.0), (0.01,))
    assert len(report.rows) == 1
    assert report.exponent is None  # one point cannot fix a power law
    assert report.rows[0].max_rel_population_gap < 5e-4
    assert report.rows[0].imbalance_amplitude == pytest.approx(
        report.rows[0].imbalance_lindblad, abs=1e-3)


def test_discrepancy_grows_quadratically_with_drive():
    geom = build_geometry(2, 1.8)
    coupling = ChiralCoupling.from_directionality(0.7)
    report = compare_with_amplitude_model(geom, coupling, np.full(2, 0.6), (1e-3, 1e-2, 1e-1))
    assert report.exponent == pytest.approx(2.0, abs=0.3)
    gaps = [row.max_rel_population_gap for row in report.rows]
    assert gaps[0] < gaps[1] < gaps[2]
