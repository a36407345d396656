"""Potential-flow pressure field of a sphere oscillating in still water.

The sphere of radius ``a`` vibrates with displacement ``A sin(wt)`` along a
unit axis. Outside the sphere the flow equals that of a point dipole, so the
pressure is

    p(r, t) = -P0 * G(r) * sin(wt),   P0 = rho A w^2 a^3 / 2,
    G(r)    = (delta . axis) / |delta|^3,   delta = r - r0.

All evaluation is closed form. Points on or inside the sphere are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid, EmptyGrid, PointInsideSource

__all__ = [
    "FluidMedium",
    "DipoleSource",
    "GridSpec",
    "FieldGrid",
    "WATER",
    "dipole_geometric_factor",
    "geometric_factor_array",
    "source_strength_amplitude",
    "pressure_at",
    "velocity_potential",
    "pressure_field_grid",
]

_AXIS_TOL = 1e-12


def _vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise ConfigInvalid(f"{name} must be a finite 3-vector, got {value!r}", field=name)
    return arr


@dataclass(frozen=True)
class FluidMedium:
    """Incompressible, inviscid fluid. ``density`` in kg/m^3."""

    density: float = 1000.0

    def __post_init__(self):
        if not (self.density > 0 and math.isfinite(self.density)):
            raise ConfigInvalid(f"density must be > 0, got {self.density}", field="density")


WATER = FluidMedium(1000.0)


@dataclass(frozen=True)
class DipoleSource:
    """Rigid sphere oscillating along ``vibration_axis``.

    Parameters
    ----------
    radius : float
        Sphere radius ``a`` in m.
    amplitude : float
        Displacement amplitude ``A`` in m. Zero is allowed (silent source).
    carrier_frequency : float
        Vibration frequency in Hz.
    position : array_like
        Sphere centre in m.
    vibration_axis : array_like
        Unit vector of the oscillation direction.
    """

    radius: float = 0.125
    amplitude: float = 0.015
    carrier_frequency: float = 40.0
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    vibration_axis: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ConfigInvalid(f"radius must be > 0, got {self.radius}", field="radius")
        if not (self.amplitude >= 0 and math.isfinite(self.amplitude)):
            raise ConfigInvalid(f"amplitude must be >= 0, got {self.amplitude}", field="amplitude")
        if not (self.carrier_frequency > 0 and math.isfinite(self.carrier_frequency)):
            raise ConfigInvalid(
                f"carrier_frequency must be > 0, got {self.carrier_frequency}",
                field="carrier_frequency",
            )
        pos = _vec3(self.position, "position")
        axis = _vec3(self.vibration_axis, "vibration_axis")
        if abs(np.linalg.norm(axis) - 1.0) > _AXIS_TOL:
            raise ConfigInvalid(
                f"vibration_axis must have unit norm, got |axis| = {np.linalg.norm(axis)!r}",
                field="vibration_axis",
            )
        pos.setflags(write=False)
        axis.setflags(write=False)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "vibration_axis", axis)

    @property
    def angular_frequency(self) -> float:
        return 2.0 * math.pi * self.carrier_frequency

    def moved_to(self, position) -> "DipoleSource":
        return DipoleSource(
            self.radius, self.amplitude, self.carrier_frequency, position, self.vibration_axis
        )

    def with_amplitude(self, amplitude: float) -> "DipoleSource":
        return DipoleSource(
            self.radius, amplitude, self.carrier_frequency, self.position, self.vibration_axis
        )

    def with_frequency(self, carrier_frequency: float) -> "DipoleSource":
        return DipoleSource(
            self.radius, self.amplitude, carrier_frequency, self.position, self.vibration_axis
        )


def geometric_factor_array(source_position, axis, points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``G`` over ``points`` of shape (..., 3).

    Returns ``(G, distance)``. No interior check is done here; callers decide
    how to treat points closer than the radius.
    """
    delta = np.asarray(points, dtype=float) - np.asarray(source_position, dtype=float)
    dist = np.sqrt(np.sum(delta * delta, axis=-1))
    proj = delta @ np.asarray(axis, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = proj / dist**3
    return g, dist


def _delta(source: DipoleSource, point) -> tuple[np.ndarray, float]:
    delta = _vec3(point, "point") - source.position
    dist = float(np.linalg.norm(delta))
    if dist <= source.radius:
        raise PointInsideSource(
            f"point {tuple(np.asarray(point, dtype=float))} is {dist:.6g} m from the source centre, "
            f"not outside radius {source.radius:.6g} m"
        )
    return delta, dist


def dipole_geometric_factor(source: DipoleSource, point) -> float:
    """Spatial term ``G = (delta . axis) / |delta|^3`` in 1/m^2."""
    delta, dist = _delta(source, point)
    return float(delta @ source.vibration_axis) / dist**3


def source_strength_amplitude(medium: FluidMedium, source: DipoleSource) -> float:
    """Prefactor ``P0 = rho A w^2 a^3 / 2`` in Pa m^2."""
    w = source.angular_frequency
    return medium.density * source.amplitude * w * w * source.radius**3 / 2.0


def pressure_at(medium: FluidMedium, source: DipoleSource, point, time: float) -> float:
    """Dynamic pressure in Pa at ``point`` and ``time``."""
    g = dipole_geometric_factor(source, point)
    p0 = source_strength_amplitude(medium, source)
    return -p0 * g * math.sin(source.angular_frequency * time)


def velocity_potential(source: DipoleSource, point, time: float) -> float:
    """Dipole velocity potential in m^2/s.

    ``phi = -(a^3 / 2 r^2) U(t) cos(theta)`` with sphere velocity
    ``U = A w cos(wt)`` (the time derivative of the displacement).
    """
    delta, dist = _delta(source, point)
    cos_theta = float(delta @ source.vibration_axis) / dist
    w = source.angular_frequency
    velocity = source.amplitude * w * math.cos(w * time)
    return -(source.radius**3) / (2.0 * dist * dist) * velocity * cos_theta


def _symmetric_axis(center: float, half_width: float, n: int) -> np.ndarray:
    if n == 1:
        return np.array([float(center)])
    # integer numerator keeps the samples exactly mirror-symmetric about centre
    k = np.arange(n, dtype=float)
    return center + half_width * (2.0 * k - (n - 1)) / (n - 1)


@dataclass(frozen=True)
class GridSpec:
    """Regular grid given by its three coordinate axes (m).

    An axis of length one gives a planar slice.
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @classmethod
    def cube(cls, extent: float, resolution: int, center=(0.0, 0.0, 0.0)) -> "GridSpec":
        """Cube of half-width ``extent`` sampled ``resolution`` times per axis."""
        _check_grid_args(extent, resolution)
        c = _vec3(center, "center")
        return cls(*(_symmetric_axis(c[i], extent, resolution) for i in range(3)))

    @classmethod
    def plane(cls, axis: str, value: float, extent: float, resolution: int,
              center=(0.0, 0.0, 0.0)) -> "GridSpec":
        """Square slice at ``axis = value`` (axis one of x, y, z)."""
        _check_grid_args(extent, resolution)
        if axis not in ("x", "y", "z"):
            raise ConfigInvalid(f"plane axis must be x, y or z, got {axis!r}", field="plane")
        c = _vec3(center, "center")
        axes = {}
        for i, name in enumerate("xyz"):
            if name == axis:
                axes[name] = np.array([float(value)])
            else:
                axes[name] = _symmetric_axis(c[i], extent, resolution)
        return cls(axes["x"], axes["y"], axes["z"])

    @property
    def shape(self) -> tuple[int, int, int]:
        return (len(self.x), len(self.y), len(self.z))

    def points(self) -> np.ndarray:
        """Grid points with shape (nx, ny, nz, 3)."""
        xx, yy, zz = np.meshgrid(self.x, self.y, self.z, indexing="ij")
        return np.stack([xx, yy, zz], axis=-1)

    def spacing(self) -> list[float]:
        return [float(a[1] - a[0]) if len(a) > 1 else 0.0 for a in (self.x, self.y, self.z)]

    def extents(self) -> list[list[float]]:
        return [[float(a[0]), float(a[-1])] for a in (self.x, self.y, self.z)]


def _check_grid_args(extent: float, resolution: int) -> None:
    if not (extent > 0 and math.isfinite(extent)):
        raise ConfigInvalid(f"extent must be > 0, got {extent}", field="extent")
    if int(resolution) != resolution or resolution < 1:
        raise ConfigInvalid(f"resolution must be a positive integer, got {resolution}",
                            field="resolution")


@dataclass
class FieldGrid:
    """Sampled field on a :class:`GridSpec`.

    ``values`` are normalised by ``normalization`` (max absolute raw value over
    valid points); invalid (interior) points hold NaN.
    """

    grid: GridSpec
    values: np.ndarray
    valid: np.ndarray
    normalization: float
    quantity: str

    @property
    def raw(self) -> np.ndarray:
        return self.values * self.normalization


def pressure_field_grid(medium: FluidMedium, source: DipoleSource, grid: GridSpec,
                        time: float | None = None) -> FieldGrid:
    """Sample the field on ``grid`` for export.

    With ``time=None`` the normalised geometric factor ``G`` is returned
    (the figure-8 fingerprint); otherwise the pressure at that instant.
    Points on or inside the sphere are marked invalid.
    """
    g, dist = geometric_factor_array(source.position, source.vibration_axis, grid.points())
    valid = dist > source.radius
    if not np.any(valid):
        raise EmptyGrid("every grid point lies inside the source sphere")
    if time is None:
        raw, quantity = g, "geometric_factor"
    else:
        p0 = source_strength_amplitude(medium, source)
        raw, quantity = -p0 * g * math.sin(source.angular_frequency * time), "pressure"
    raw = np.where(valid, raw, np.nan)
    norm = float(np.max(np.abs(raw[valid])))
    values = raw / norm if norm > 0 else raw
    return FieldGrid(grid, values, valid, norm, quantity)
