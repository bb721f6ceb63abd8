"""Grids, fields, configuration and diagnostics shared by every solver."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

MODELS = (
    "halfline-simple",
    "halfline-exchange",
    "periodic1d",
    "annulus-transversal",
    "annulus-potential",
    "annulus-transversal-exchange",
    "annulus-potential-exchange",
    "hilbert",
)

INITIAL_KINDS = ("auto", "random", "exponential", "bump")


class ConfigError(ValueError):
    """Raised for an invalid or malformed simulation configuration."""


@dataclass(frozen=True)
class SimConfig:
    """Flat simulation configuration; field names double as config-file keys."""

    model: str = "annulus-potential"
    D: float = 1.0
    chi: float = 1.0
    S: float = 1.0
    alpha: float = 1.0
    k_on: float = 1.0
    k_off: float = 1.0
    M: float = 10.0
    dt: float = 1e-3
    t_max: float = 50.0
    snapshot_every: int = 1000
    seed: int = 1
    N_x: int = 400
    L: float = 20.0
    N_r: int = 46
    N_theta: int = 128
    R_min: float = 0.2
    R_max: float = 2.5
    blowup_factor: float = 10.0
    # not part of the physical model: initial data and driver controls
    initial: str = "auto"
    init_width: float = 0.0  # 0 selects the model default
    mu0: float = 0.0
    steady_tol: float = 1e-8
    solver_tol: float = 1e-10

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.initial not in INITIAL_KINDS:
            raise ConfigError(f"unknown initial kind {self.initial!r}")
        positive = ("D", "chi", "S", "alpha", "k_on", "k_off", "dt", "t_max", "L",
                    "R_min", "R_max", "blowup_factor", "steady_tol",
                    "solver_tol")
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {value!r}")
        for name in ("snapshot_every", "N_x", "N_r", "N_theta"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not (self.M >= 0 and math.isfinite(self.M)):
            raise ConfigError("M must be finite and >= 0")
        if self.mu0 < 0:
            raise ConfigError("mu0 must be >= 0")
        if self.init_width < 0:
            raise ConfigError("init_width must be >= 0")
        if self.R_min >= self.R_max:
            raise ConfigError("R_min must be < R_max")

    @property
    def has_exchange(self) -> bool:
        return self.model.endswith("exchange")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, mapping) -> "SimConfig":
        """Build a config from string or typed values, coercing to field types."""
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, types[key], raw)
        return cls(**kwargs)


def _coerce(key, type_name, raw):
    try:
        if type_name == "int":
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            return int(float(raw)) if isinstance(raw, str) else int(raw)
        if type_name == "float":
            return float(raw)
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid: the truncated half-line (0, L) or the circle R/2piZ."""

    kind: str
    N: int
    delta: float
    centers: np.ndarray = field(repr=False)

    @classmethod
    def half_line(cls, N: int, L: float) -> "Grid1D":
        dx = L / N
        return cls("half-line-truncated", N, dx, _frozen((np.arange(N) + 0.5) * dx))

    @classmethod
    def periodic(cls, N: int) -> "Grid1D":
        dtheta = 2 * np.pi / N
        # theta_k = k * dtheta for k = 1..N
        return cls("periodic", N, dtheta, _frozen(np.arange(1, N + 1) * dtheta))

    @property
    def length(self) -> float:
        return self.N * self.delta


@dataclass(frozen=True)
class AnnulusGrid:
    """Polar control volumes on [R_min, R_max] x R/2piZ.

    Faces sit exactly at R_min and R_max; radial centers are midway between
    adjacent faces.
    """

    R_min: float
    R_max: float
    N_r: int
    N_theta: int

    def __post_init__(self):
        if not self.R_min < self.R_max:
            raise ValueError("R_min must be < R_max")
        if self.N_r < 2 or self.N_theta < 3:
            raise ValueError("annulus grid needs N_r >= 2 and N_theta >= 3")

    @property
    def dr(self) -> float:
        return (self.R_max - self.R_min) / self.N_r

    @property
    def dtheta(self) -> float:
        return 2 * np.pi / self.N_theta

    @property
    def r_faces(self) -> np.ndarray:
        return self.R_min + self.dr * np.arange(self.N_r + 1)

    @property
    def r_centers(self) -> np.ndarray:
        return self.R_min + self.dr * (np.arange(self.N_r) + 0.5)

    @property
    def theta_centers(self) -> np.ndarray:
        return self.dtheta * np.arange(1, self.N_theta + 1)

    @property
    def shape(self) -> tuple:
        return (self.N_r, self.N_theta)

    @property
    def size(self) -> int:
        return self.N_r * self.N_theta


Grid = Union[Grid1D, AnnulusGrid]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Field:
    """Cell-centred values on a grid.

    On an annulus the stored values are the scaled density r * rho with shape
    (N_r, N_theta) and ``scaled`` is True; 1D fields hold rho directly.
    """

    grid: Grid
    values: np.ndarray
    scaled: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        expected = self.grid.shape if isinstance(self.grid, AnnulusGrid) else (self.grid.N,)
        if self.values.shape != expected:
            raise ValueError(f"field shape {self.values.shape} != grid shape {expected}")

    def density(self) -> np.ndarray:
        """Plain density rho (divides out r on the annulus)."""
        if self.scaled:
            return self.values / self.grid.r_centers[:, None]
        return np.array(self.values)


@dataclass(frozen=True)
class BoundaryState:
    """Membrane-bound density mu: a scalar on the half-line, one value per angular cell on the annulus."""

    values: Union[float, np.ndarray]

    def __post_init__(self):
        v = self.values
        if np.ndim(v) == 0:
            object.__setattr__(self, "values", float(v))
        else:
            object.__setattr__(self, "values", _frozen(v))


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    total_mass: float
    interior_mass: float
    boundary_mass: float
    sup_norm: float
    mode_amplitudes: tuple
    blown_up: bool

    HEADER = ("t", "total_mass", "interior_mass", "boundary_mass", "sup_norm",
              "mode0", "mode1", "mode2", "blown_up")

    def row(self) -> list:
        return [self.t, self.total_mass, self.interior_mass, self.boundary_mass,
                self.sup_norm, *self.mode_amplitudes, int(self.blown_up)]


def cell_measure(grid: Grid) -> Union[float, np.ndarray]:
    """Integration weight per stored value (dr*dtheta on the annulus since values are r*rho)."""
    if isinstance(grid, AnnulusGrid):
        return grid.dr * grid.dtheta
    return grid.delta


def random_initial_density(grid: Grid, M: float, seed: int) -> Field:
    """I.i.d. uniform [0.5, 1.5) density from a seeded PCG64 generator, rescaled to mass M."""
    if M < 0:
        raise ValueError("M must be >= 0")
    rng = np.random.default_rng(seed)
    if isinstance(grid, AnnulusGrid):
        rho = rng.uniform(0.5, 1.5, size=grid.shape)
        values = rho * grid.r_centers[:, None]
        scaled = True
    else:
        values = rng.uniform(0.5, 1.5, size=grid.N)
        scaled = False
    mass = values.sum() * cell_measure(grid)
    return Field(grid, values * (M / mass), scaled)


def total_mass(field: Field, boundary: Optional[BoundaryState] = None) -> float:
    """Interior mass plus membrane mass when ``boundary`` is given."""
    return interior_mass(field) + (boundary_mass(field.grid, boundary) if boundary is not None else 0.0)


def interior_mass(field: Field) -> float:
    if field.scaled != isinstance(field.grid, AnnulusGrid):
        raise ValueError("annulus fields must be stored scaled (r*rho), 1D fields plain")
    return float(field.values.sum() * cell_measure(field.grid))


def boundary_mass(grid: Grid, boundary: BoundaryState) -> float:
    if isinstance(grid, AnnulusGrid):
        return float(np.sum(boundary.values) * grid.R_max * grid.dtheta)
    return float(boundary.values)


def boundary_fourier_mode(trace, m: int) -> float:
    """Amplitude |(1/N) sum_k trace_k exp(-i m theta_k)| with theta_k = 2 pi k / N."""
    if m < 0:
        raise ValueError("mode index must be >= 0")
    trace = np.asarray(trace, dtype=float)
    n = trace.size
    if n < 2 * m + 1:
        raise ValueError(f"need at least {2 * m + 1} samples for mode {m}")
    theta = 2 * np.pi * np.arange(1, n + 1) / n
    return float(abs(np.sum(trace * np.exp(-1j * m * theta))) / n)


def mode_amplitudes(trace, modes=(0, 1, 2)) -> tuple:
    return tuple(boundary_fourier_mode(trace, m) for m in modes)


def blowup_indicator(values, initial_sup: float, blowup_factor: float,
                     solve_failed: bool = False) -> bool:
    if initial_sup <= 0:
        raise ValueError("initial_sup must be > 0")
    values = np.asarray(values)
    if solve_failed or not np.all(np.isfinite(values)):
        return True
    return bool(np.max(np.abs(values)) > blowup_factor * initial_sup)
