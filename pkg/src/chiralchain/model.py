"""Core model: chain geometry, direction-resolved coupling, and the matrix
that generates the weak-drive amplitude dynamics.

Conventions used throughout the package:

* rates are expressed in units of the total guided emission rate, so
  ``gamma_left + gamma_right = 1``;
* positions along the channel are dimensionless phases ``k * x`` (the nominal
  lattice spacing is the phase ``xi`` accumulated between neighbours);
* atoms are indexed in order of increasing position.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChainGeometry",
    "ChiralCoupling",
    "DriveParams",
    "FluctuationSpec",
    "InteractionMatrix",
    "build_geometry",
    "chiral_kernel_1d",
    "build_interaction_matrix",
    "rddi_1d",
    "rddi_3d",
]

_WEAK_DRIVE_WARN = 0.1  # |rabi| above this is unlikely to stay in the linear regime
_MAX_RESAMPLE_TRIES = 100


@dataclass(frozen=True)
class ChiralCoupling:
    """Emission rates into the left- and right-propagating channel modes.

    The rates are normalized: ``gamma_left + gamma_right`` must equal 1 (the
    code's rate unit).  The directionality ``d = gamma_right - gamma_left``
    runs from -1 (purely left-emitting) through 0 (reciprocal) to +1 (purely
    right-emitting, i.e. a cascaded chain).
    """

    gamma_left: float
    gamma_right: float

    def __post_init__(self) -> None:
        if self.gamma_left < 0.0 or self.gamma_right < 0.0:
            raise ValueError(
                f"emission rates must be non-negative, got "
                f"gamma_left={self.gamma_left}, gamma_right={self.gamma_right}"
            )
        total = self.gamma_left + self.gamma_right
        if abs(total - 1.0) > 1e-12:
            raise ValueError(
                f"rates are expressed in units of the total rate; "
                f"gamma_left + gamma_right must equal 1, got {total}"
            )

    @classmethod
    def from_directionality(cls, directionality: float) -> "ChiralCoupling":
        """Build the coupling from d = gamma_right - gamma_left in [-1, 1]."""
        if not -1.0 <= directionality <= 1.0:
            raise ValueError(f"directionality must lie in [-1, 1], got {directionality}")
        return cls(
            gamma_left=(1.0 - directionality) / 2.0,
            gamma_right=(1.0 + directionality) / 2.0,
        )

    @property
    def directionality(self) -> float:
        return self.gamma_right - self.gamma_left

    @property
    def total(self) -> float:
        return self.gamma_left + self.gamma_right


@dataclass(frozen=True)
class FluctuationSpec:
    """Quenched Gaussian position disorder.

    Each atom is displaced independently by a normal deviate with standard
    deviation ``fraction * spacing`` (spacing = the nominal neighbour phase).
    ``fraction = 0`` reproduces the noiseless geometry exactly.
    """

    fraction: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.fraction < 0.0:
            raise ValueError(f"fluctuation fraction must be >= 0, got {self.fraction}")
        if not np.isfinite(self.fraction):
            raise ValueError("fluctuation fraction must be finite")


@dataclass(frozen=True)
class ChainGeometry:
    """Positions (phase coordinates k*x) of the atoms along the channel."""

    n_atoms: int
    spacing: float
    positions: np.ndarray

    def __post_init__(self) -> None:
        if self.n_atoms < 1:
            raise ValueError(f"need at least one atom, got {self.n_atoms}")
        pos = np.asarray(self.positions, dtype=float)
        if pos.shape != (self.n_atoms,):
            raise ValueError(
                f"expected {self.n_atoms} positions, got shape {pos.shape}"
            )
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        diffs = np.diff(pos)
        if np.any(diffs < 0):
            raise ValueError("positions must be sorted in increasing order")
        # co-located atoms are only meaningful in the degenerate zero-spacing
        # chain; anywhere else a tie signals a bad disorder draw
        if self.spacing > 0 and np.any(diffs == 0):
            raise ValueError("atom positions must be strictly increasing")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    def separations(self) -> np.ndarray:
        """Pairwise phase distances |k x_mu - k x_nu| as an (n, n) array."""
        return np.abs(self.positions[:, None] - self.positions[None, :])


@dataclass(frozen=True)
class DriveParams:
    """Coherent drive amplitude and per-atom detunings (drive minus atom)."""

    detunings: np.ndarray
    rabi: float = 0.01

    def __post_init__(self) -> None:
        det = np.atleast_1d(np.asarray(self.detunings, dtype=float))
        if det.ndim != 1 or det.size < 1:
            raise ValueError("detunings must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(det)):
            raise ValueError("detunings must be finite")
        if not np.isfinite(self.rabi):
            raise ValueError("rabi must be finite")
        if abs(self.rabi) > _WEAK_DRIVE_WARN:
            warnings.warn(
                f"drive rabi={self.rabi} is not small compared with the decay "
                f"rate; the linear amplitude model may not be trustworthy",
                stacklevel=2,
            )
        det.setflags(write=False)
        object.__setattr__(self, "detunings", det)

    @classmethod
    def uniform(cls, n_atoms: int, delta: float, rabi: float = 0.01) -> "DriveParams":
        return cls(detunings=np.full(n_atoms, float(delta)), rabi=rabi)


@dataclass(frozen=True)
class InteractionMatrix:
    """Generator of the linear amplitude dynamics dA/dt = i*rabi*1 + V A."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.entries, dtype=complex)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"interaction matrix must be square, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "entries", v)

    @property
    def n_atoms(self) -> int:
        return self.entries.shape[0]


def build_geometry(
    n_atoms: int,
    spacing: float,
    fluctuation: FluctuationSpec | None = None,
) -> ChainGeometry:
    """Place ``n_atoms`` equidistantly at phase spacing ``spacing``, optionally
    with quenched Gaussian position disorder.

    Disordered positions are re-sorted so atom indices remain ordered along
    the channel.  Exact position collisions (probability zero, but possible
    with floats) are resolved by redrawing the colliding atoms a bounded
    number of times.
    """
    if n_atoms < 1:
        raise ValueError(f"need at least one atom, got {n_atoms}")
    if not np.isfinite(spacing) or spacing < 0:
        raise ValueError(f"spacing must be a finite phase >= 0, got {spacing}")
    nominal = np.arange(n_atoms, dtype=float) * spacing
    if fluctuation is None or fluctuation.fraction == 0.0 or spacing == 0.0:
        return ChainGeometry(n_atoms=n_atoms, spacing=spacing, positions=nominal)

    rng = np.random.default_rng(fluctuation.seed)
    sigma = fluctuation.fraction * spacing
    positions = nominal + rng.normal(0.0, sigma, size=n_atoms)
    for _ in range(_MAX_RESAMPLE_TRIES):
        positions = np.sort(positions)
        if np.all(np.diff(positions) > 0):
            return ChainGeometry(n_atoms=n_atoms, spacing=spacing, positions=positions)
        tied = np.flatnonzero(np.diff(positions) == 0) + 1
        positions[tied] = nominal[tied] + rng.normal(0.0, sigma, size=tied.size)
    raise RuntimeError(
        f"could not draw strictly ordered positions after {_MAX_RESAMPLE_TRIES} tries"
    )


def chiral_kernel_1d(
    separation: float,
    coupling: ChiralCoupling,
) -> tuple[complex, complex]:
    """Direction-resolved channel-mediated coupling between two atoms a phase
    distance ``separation`` apart.

    Returns the pair ``(-gamma_left * exp(-i*separation),
    -gamma_right * exp(-i*separation))``: the first entry couples an atom to
    partners further right via the left-propagating mode, the second couples
    to partners further left via the right-propagating mode.
    """
    if separation < 0:
        raise ValueError(f"separation is a phase distance and must be >= 0, got {separation}")
    phase = np.exp(-1j * separation)
    return (-coupling.gamma_left * phase, -coupling.gamma_right * phase)


def build_interaction_matrix(
    geometry: ChainGeometry,
    coupling: ChiralCoupling,
    drive: DriveParams,
) -> InteractionMatrix:
    """Assemble the amplitude-dynamics generator V.

    Diagonal: ``i*delta_mu - (gamma_left + gamma_right)/2``.  Above the
    diagonal (partner to the right) the coupling travels through the
    left-propagating mode, below it through the right-propagating mode; both
    carry retardation phases ``exp(-i |k x_mu - k x_nu|)``.  For
    ``gamma_left != gamma_right`` the matrix is neither symmetric nor normal,
    so spectral shortcuts are avoided downstream.
    """
    n = geometry.n_atoms
    if drive.detunings.size != n:
        raise ValueError(
            f"got {drive.detunings.size} detunings for {n} atoms"
        )
    phases = np.exp(-1j * geometry.separations())
    v = np.zeros((n, n), dtype=complex)
    upper = np.triu_indices(n, k=1)
    lower = np.tril_indices(n, k=-1)
    v[upper] = -coupling.gamma_left * phases[upper]
    v[lower] = -coupling.gamma_right * phases[lower]
    v[np.diag_indices(n)] = 1j * drive.detunings - 0.5 * coupling.total
    return InteractionMatrix(entries=v)


def rddi_1d(separation: float) -> complex:
    """Reference dipole-dipole kernel of a reciprocal single-mode channel,
    ``(cos(separation) + i*sin(|separation|)) / 2`` in units of the channel
    emission rate.  Used to cross-check the reciprocal limit of
    :func:`chiral_kernel_1d`.
    """
    s = float(separation)
    return 0.5 * (np.cos(s) + 1j * np.sin(abs(s)))


def rddi_3d(xi: float, alignment: float) -> complex:
    """Free-space (3-D) resonant dipole-dipole kernel at phase distance ``xi``.

    ``alignment`` is the cosine of the angle between the transition dipole and
    the interatomic axis.  The real part of the returned value is the
    collective decay contribution (twice the real part of the kernel), the
    imaginary part is the coherent shift contribution, both in units of the
    free-space single-atom rate.  This short-range kernel is the physics the
    guided 1-D channel replaces; it is kept as a reference only.
    """
    if xi <= 0:
        raise ValueError(f"phase distance must be > 0, got {xi}")
    if not -1.0 <= alignment <= 1.0:
        raise ValueError(f"alignment is a direction cosine, must be in [-1, 1], got {alignment}")
    perp = 1.0 - alignment**2
    axial = 1.0 - 3.0 * alignment**2
    sin_xi, cos_xi = np.sin(xi), np.cos(xi)
    decay = 1.5 * (perp * sin_xi / xi + axial * (cos_xi / xi**2 - sin_xi / xi**3))
    shift = 0.75 * (-perp * cos_xi / xi + axial * (sin_xi / xi**2 + cos_xi / xi**3))
    return complex(decay, shift)
