"""Directional excitation transport: the left/right population imbalance and
its behaviour over parameter sweeps and quenched-disorder ensembles.

The transport metric compares the steady-state excited population of the left
half of the chain with the right half:

    imbalance = (sum(left half) - sum(right half)) / sum(all atoms)

For an odd atom count the central atom is excluded from the numerator but
*is* counted in the denominator, so a chain with all excitation parked on the
central atom has imbalance 0, not an undefined value.  +1 means all excitation
sits in the left half, -1 in the right half.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    NoSteadyState,
    SaturationReport,
    steady_state,
    two_atom_steady,
    validity_check,
)
from .model import (
    ChiralCoupling,
    DriveParams,
    FluctuationSpec,
    build_geometry,
    build_interaction_matrix,
)

__all__ = [
    "TransportResult",
    "SweepGrid",
    "SweepRow",
    "EnsembleStats",
    "UndefinedTransportError",
    "transport_metric",
    "two_atom_transport",
    "transport_point",
    "sweep",
    "fluctuation_ensemble",
    "derive_sample_seed",
]


class UndefinedTransportError(Exception):
    """The transport metric is not defined (no excited population at all)."""


@dataclass(frozen=True)
class TransportResult:
    """Steady-state transport at a single parameter point."""

    imbalance: float
    populations: np.ndarray
    saturation: SaturationReport
    condition_number: float


@dataclass(frozen=True)
class SweepGrid:
    """Cartesian parameter grid: atom counts x directionalities x uniform
    detunings x neighbour phases, iterated in exactly that nesting order."""

    n_values: tuple[int, ...]
    d_values: tuple[float, ...]
    delta_values: tuple[float, ...]
    xi_values: tuple[float, ...]

    def __post_init__(self) -> None:
        for name in ("n_values", "d_values", "delta_values", "xi_values"):
            values = getattr(self, name)
            if len(values) == 0:
                raise ValueError(f"{name} must not be empty")
        if any(n < 1 for n in self.n_values):
            raise ValueError("atom counts must be >= 1")
        if any(not -1.0 <= d <= 1.0 for d in self.d_values):
            raise ValueError("directionality values must lie in [-1, 1]")

    def points(self):
        for n in self.n_values:
            for d in self.d_values:
                for delta in self.delta_values:
                    for xi in self.xi_values:
                        yield (n, d, delta, xi)

    def size(self) -> int:
        return (len(self.n_values) * len(self.d_values)
                * len(self.delta_values) * len(self.xi_values))


@dataclass(frozen=True)
class SweepRow:
    """One grid point of a sweep; ``result`` is None at undefined points."""

    n_atoms: int
    directionality: float
    detuning: float
    spacing: float
    result: TransportResult | None
    error: str | None = None

    @property
    def flag(self) -> str:
        if self.result is None:
            return "undefined"
        return self.result.saturation.level


@dataclass(frozen=True)
class EnsembleStats:
    """Disorder-ensemble moments of the transport imbalance.

    Undefined samples (no steady state for that disorder draw) are excluded
    from the moments and counted in ``n_undefined``.
    """

    mean_imbalance: float
    std_imbalance: float
    n_samples: int
    n_undefined: int
    base_seed: int


def transport_metric(populations: np.ndarray) -> float:
    """Left/right population imbalance of the chain (see module docstring)."""
    pops = np.asarray(populations, dtype=float)
    if pops.ndim != 1 or pops.size < 2:
        raise ValueError(f"need a 1-D population vector of at least 2 atoms, got shape {pops.shape}")
    if np.any(pops < 0):
        raise ValueError("populations must be non-negative")
    total = float(np.sum(pops))
    if total <= 0.0:
        raise UndefinedTransportError("all populations are zero; imbalance is undefined")
    n = pops.size
    half = n // 2
    left = float(np.sum(pops[:half]))
    # odd chain: skip the central atom in the numerator only
    right = float(np.sum(pops[n - half:]))
    return (left - right) / total


def two_atom_transport(
    delta_1: float,
    delta_2: float,
    gamma_left: float,
    spacing: float,
) -> float:
    """Closed-form two-atom imbalance.

    Drive strength cancels in the ratio; only the numerators of the two
    steady-state amplitudes survive:

        p1 ~ |i*delta_2 - 1/2 + g*exp(-i*xi)|^2
        p2 ~ |i*delta_1 - 1/2 + (1-g)*exp(-i*xi)|^2
        imbalance = (p1 - p2) / (p1 + p2)
    """
    if not 0.0 <= gamma_left <= 1.0:
        raise ValueError(f"gamma_left must lie in [0, 1], got {gamma_left}")
    g = gamma_left
    phase = np.exp(-1j * spacing)
    p1 = abs(1j * delta_2 - 0.5 + g * phase) ** 2
    p2 = abs(1j * delta_1 - 0.5 + (1.0 - g) * phase) ** 2
    if p1 + p2 <= 0.0:
        raise UndefinedTransportError(
            "both steady-state amplitudes vanish; imbalance is undefined"
        )
    return (p1 - p2) / (p1 + p2)


def transport_point(
    n_atoms: int,
    spacing: float,
    coupling: ChiralCoupling,
    detunings: float | np.ndarray,
    rabi: float = 0.01,
    fluctuation: FluctuationSpec | None = None,
) -> TransportResult:
    """Full pipeline at one parameter point: geometry -> interaction matrix ->
    steady state -> populations -> imbalance."""
    if np.isscalar(detunings):
        drive = DriveParams.uniform(n_atoms, float(detunings), rabi=rabi)
    else:
        drive = DriveParams(detunings=np.asarray(detunings, dtype=float), rabi=rabi)
    geometry = build_geometry(n_atoms, spacing, fluctuation)
    matrix = build_interaction_matrix(geometry, coupling, drive)
    solution = steady_state(matrix, rabi)
    pops = solution.populations()
    return TransportResult(
        imbalance=transport_metric(pops),
        populations=pops,
        saturation=validity_check(solution),
        condition_number=solution.condition_number,
    )


def _sweep_row(point: tuple[int, float, float, float], rabi: float) -> SweepRow:
    n, d, delta, xi = point
    try:
        result = transport_point(
            n_atoms=n,
            spacing=xi,
            coupling=ChiralCoupling.from_directionality(d),
            detunings=delta,
            rabi=rabi,
        )
        return SweepRow(n_atoms=n, directionality=d, detuning=delta, spacing=xi,
                        result=result)
    except NoSteadyState as exc:
        return SweepRow(n_atoms=n, directionality=d, detuning=delta, spacing=xi,
                        result=None, error=str(exc))


def sweep(grid: SweepGrid, rabi: float = 0.01, max_workers: int = 1) -> list[SweepRow]:
    """Evaluate the transport imbalance over a parameter grid.

    Rows come back in grid iteration order regardless of ``max_workers``;
    singular points are recorded as undefined rows, never dropped.
    """
    points = list(grid.points())
    if max_workers <= 1:
        return [_sweep_row(p, rabi) for p in points]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda p: _sweep_row(p, rabi), points))


_MASK64 = (1 << 64) - 1


def _splitmix64(value: int) -> int:
    # standard splitmix64 finalizer; spreads consecutive indices over 64 bits
    value = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = value
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_sample_seed(base_seed: int, sample_index: int) -> int:
    """Seed for one ensemble member, independent of execution order."""
    if sample_index < 0:
        raise ValueError(f"sample index must be >= 0, got {sample_index}")
    return (int(base_seed) & _MASK64) ^ _splitmix64(int(sample_index))


def fluctuation_ensemble(
    n_atoms: int,
    spacing: float,
    coupling: ChiralCoupling,
    detunings: float | np.ndarray,
    fluctuation: FluctuationSpec,
    n_samples: int,
    base_seed: int = 0,
    rabi: float = 0.01,
) -> EnsembleStats:
    """Mean and sample standard deviation of the imbalance over quenched
    position disorder.

    Each sample uses an independently derived seed, so the ensemble is
    reproducible for a fixed ``base_seed`` and independent of evaluation
    order.  The seed stored on ``fluctuation`` itself is ignored here; only
    its fraction matters.
    """
    if n_samples < 2:
        raise ValueError(f"need at least 2 samples for a standard deviation, got {n_samples}")
    values = []
    n_undefined = 0
    for index in range(n_samples):
        sample_spec = FluctuationSpec(
            fraction=fluctuation.fraction,
            seed=derive_sample_seed(base_seed, index),
        )
        try:
            result = transport_point(
                n_atoms=n_atoms,
                spacing=spacing,
                coupling=coupling,
                detunings=detunings,
                rabi=rabi,
                fluctuation=sample_spec,
            )
        except NoSteadyState:
            n_undefined += 1
            continue
        values.append(result.imbalance)
    if len(values) < 2:
        raise UndefinedTransportError(
            f"only {len(values)} of {n_samples} disorder samples have a steady "
            f"state; ensemble moments are undefined"
        )
    arr = np.asarray(values)
    return EnsembleStats(
        mean_imbalance=float(np.mean(arr)),
        std_imbalance=float(np.std(arr, ddof=1)),
        n_samples=n_samples,
        n_undefined=n_undefined,
        base_seed=int(base_seed),
    )
