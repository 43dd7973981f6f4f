"""Weak-drive amplitude dynamics of the chain.

In the weak-drive regime the chain is described by one complex amplitude per
atom obeying the linear system ``dA/dt = i*rabi*1 + V A`` with ``A(0) = 0``,
where ``V`` comes from :func:`chiralchain.model.build_interaction_matrix`.
Excited-state populations are ``|A_mu|**2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .model import InteractionMatrix

__all__ = [
    "AmplitudeState",
    "SteadyStateSolution",
    "SaturationReport",
    "NoSteadyState",
    "IntegrationError",
    "evolve",
    "steady_state",
    "two_atom_steady",
    "validity_check",
]

#: relative smallest-singular-value cutoff below which V is treated as singular
SINGULARITY_CUTOFF = 1e-10

#: populations above these levels mean the linear model is strained / invalid
SATURATION_WARN = 0.1
SATURATION_ERROR = 0.5


class NoSteadyState(Exception):
    """The amplitude dynamics has no (unique) steady state for these inputs."""


class IntegrationError(RuntimeError):
    """Time integration failed (step-size underflow or non-finite values)."""


@dataclass(frozen=True)
class AmplitudeState:
    """Snapshot of the per-atom amplitudes at one instant."""

    time: float
    amplitudes: np.ndarray

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class SteadyStateSolution:
    """Long-time amplitudes together with solve diagnostics."""

    amplitudes: np.ndarray
    residual: float
    smallest_singular_value: float
    condition_number: float

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class SaturationReport:
    """Validity summary of a weak-drive solution.

    ``level`` is "ok", "warn" (max population above 0.1) or "error" (above
    0.5, the linear model is not meaningful there).
    """

    max_population: float
    total_population: float
    level: str


def evolve(
    matrix: InteractionMatrix,
    rabi: float,
    t_final: float,
    n_steps: int,
) -> list[AmplitudeState]:
    """Integrate ``dA/dt = i*rabi*1 + V A`` from ``A(0) = 0``.

    Returns ``n_steps + 1`` equally spaced snapshots covering ``[0, t_final]``.
    Uses adaptive Runge-Kutta stepping; the reported times are exact sample
    points, not solver steps.
    """
    if t_final <= 0:
        raise ValueError(f"t_final must be > 0, got {t_final}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    v = matrix.entries
    n = matrix.n_atoms
    source = 1j * rabi * np.ones(n, dtype=complex)

    def rhs(_t: float, amps: np.ndarray) -> np.ndarray:
        return source + v @ amps

    times = np.linspace(0.0, t_final, n_steps + 1)
    sol = solve_ivp(
        rhs,
        (0.0, t_final),
        np.zeros(n, dtype=complex),
        t_eval=times,
        method="RK45",
        rtol=1e-10,
        atol=1e-12,
    )
    if not sol.success:
        raise IntegrationError(f"amplitude integration failed: {sol.message}")
    if not np.all(np.isfinite(sol.y.real)) or not np.all(np.isfinite(sol.y.imag)):
        raise IntegrationError("amplitude integration produced non-finite values")
    return [AmplitudeState(time=float(t), amplitudes=sol.y[:, k].copy())
            for k, t in enumerate(sol.t)]


def steady_state(
    matrix: InteractionMatrix,
    rabi: float,
    singularity_cutoff: float = SINGULARITY_CUTOFF,
) -> SteadyStateSolution:
    """Solve ``V A = -i*rabi*1`` directly.

    The generator is non-normal whenever the two emission rates differ, so no
    eigen-decomposition is used: the steady state comes from a dense linear
    solve, guarded by a singular-value check.  Raises :class:`NoSteadyState`
    when the smallest singular value falls below
    ``singularity_cutoff * largest``; that happens at decoherence-free
    parameter points (reciprocal coupling, uniform resonance, neighbour phase
    pi) where the drive pumps the chain without any balancing decay.
    """
    v = matrix.entries
    n = matrix.n_atoms
    svals = np.linalg.svd(v, compute_uv=False)
    smax, smin = float(svals[0]), float(svals[-1])
    if smax == 0.0 or smin < singularity_cutoff * smax:
        raise NoSteadyState(
            f"interaction matrix is singular to working precision "
            f"(smallest singular value {smin:.3e} vs largest {smax:.3e}): "
            f"the drive pumps the chain without reaching a steady state. "
            f"This occurs at decoherence-free points such as reciprocal "
            f"coupling with zero detuning and neighbour phase pi."
        )
    rhs = -1j * rabi * np.ones(n, dtype=complex)
    amps = np.linalg.solve(v, rhs)
    residual = float(np.linalg.norm(v @ amps - rhs))
    scale = max(1.0, float(np.linalg.norm(amps)))
    if residual > 1e-8 * smax * scale:
        raise RuntimeError(
            f"steady-state solve did not meet the residual tolerance: "
            f"|V A + i*rabi*1| = {residual:.3e}"
        )
    return SteadyStateSolution(
        amplitudes=amps,
        residual=residual,
        smallest_singular_value=smin,
        condition_number=smax / smin,
    )


def two_atom_steady(
    delta_1: float,
    delta_2: float,
    gamma_left: float,
    spacing: float,
    rabi: float = 0.01,
) -> tuple[complex, complex]:
    """Closed-form steady-state amplitudes of a two-atom chain.

    With the total rate normalized to 1 and ``g = gamma_left``:

        A_1 = -i*rabi * (i*delta_2 - 1/2 + g*exp(-i*xi)) / den
        A_2 = -i*rabi * (i*delta_1 - 1/2 + (1-g)*exp(-i*xi)) / den
        den = (i*delta_1 - 1/2)*(i*delta_2 - 1/2) - (1-g)*g*exp(-2i*xi)

    Raises :class:`NoSteadyState` when the denominator vanishes.
    """
    if not 0.0 <= gamma_left <= 1.0:
        raise ValueError(f"gamma_left must lie in [0, 1], got {gamma_left}")
    if spacing < 0:
        raise ValueError(f"spacing must be >= 0, got {spacing}")
    g = gamma_left
    phase = np.exp(-1j * spacing)
    den = (1j * delta_1 - 0.5) * (1j * delta_2 - 0.5) - (1.0 - g) * g * phase**2
    if abs(den) < 1e-12:
        raise NoSteadyState(
            f"two-atom steady-state denominator vanishes (|den| = {abs(den):.3e}) "
            f"at delta=({delta_1}, {delta_2}), gamma_left={gamma_left}, "
            f"spacing={spacing}; the pair is decoherence-free there."
        )
    a1 = -1j * rabi * (1j * delta_2 - 0.5 + g * phase) / den
    a2 = -1j * rabi * (1j * delta_1 - 0.5 + (1.0 - g) * phase) / den
    return complex(a1), complex(a2)


def validity_check(amplitudes: np.ndarray | AmplitudeState | SteadyStateSolution) -> SaturationReport:
    """Check that populations stay small enough for the linear model to hold."""
    if isinstance(amplitudes, (AmplitudeState, SteadyStateSolution)):
        amps = amplitudes.amplitudes
    else:
        amps = np.asarray(amplitudes)
    pops = np.abs(amps) ** 2
    max_pop = float(np.max(pops)) if pops.size else 0.0
    total = float(np.sum(pops))
    if max_pop > SATURATION_ERROR:
        level = "error"
    elif max_pop > SATURATION_WARN:
        level = "warn"
    else:
        level = "ok"
    return SaturationReport(max_population=max_pop, total_population=total, level=level)
