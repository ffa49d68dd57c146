"""Element patterns, uniform planar array beamforming and field patterns.

Angles are in degrees throughout. ``theta`` is the vertical angle measured
from zenith (90 is the horizontal plane) and ``phi`` is the horizontal
angle measured from the array boresight.

All pattern functions are vectorized over ``theta``/``phi`` arrays; the
``Direction`` dataclass is the scalar convenience form.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

__all__ = [
    "Direction",
    "Isotropic",
    "ParametricPatch",
    "Tabulated",
    "ArrayConfig",
    "AmplitudeProfile",
    "BeamWeights",
    "PatternDomainError",
    "PatternFileError",
    "wrap_deg",
    "element_gain_db",
    "make_weights",
    "array_factor_db",
    "array_gain_db",
    "field_amplitude",
    "export_pattern_cut",
    "write_pattern_cut",
    "load_tabulated",
    "save_tabulated",
    "measured_patch_pattern",
]

# |a.w|^2 below this is treated as an exact null.
NULL_POWER = 1e-20


class PatternDomainError(ValueError):
    """Direction lies outside the angular coverage of a pattern."""


class PatternFileError(ValueError):
    """Malformed tabulated pattern file."""


def wrap_deg(angle):
    """Wrap an angle (or array of angles) to [-180, 180)."""
    return (np.asarray(angle, dtype=float) + 180.0) % 360.0 - 180.0


@dataclass(frozen=True)
class Direction:
    theta: float = 90.0
    phi: float = 0.0

    def normalized(self) -> "Direction":
        """Map onto theta in [0, 180] and phi in [-180, 180).

        A theta past a pole is reflected back and phi is turned by 180.
        """
        theta = float(self.theta) % 360.0
        phi = float(self.phi)
        if theta > 180.0:
            theta = 360.0 - theta
            phi += 180.0
        return Direction(theta, float(wrap_deg(phi)))


# --------------------------------------------------------------------------
# element patterns


@dataclass(frozen=True)
class Isotropic:
    def gain_db(self, theta, phi):
        return np.zeros(np.broadcast(np.asarray(theta), np.asarray(phi)).shape)

    @property
    def g_max(self) -> float:
        return 0.0


@dataclass(frozen=True)
class ParametricPatch:
    """3GPP-style directional patch: parabolic cuts in dB with floors."""

    theta_3db: float = 65.0
    phi_3db: float = 65.0
    sla_v: float = 30.0
    a_m: float = 30.0
    g_max: float = 8.0

    def vertical_db(self, theta):
        theta = np.asarray(theta, dtype=float)
        return -np.minimum(12.0 * ((theta - 90.0) / self.theta_3db) ** 2, self.sla_v)

    def horizontal_db(self, phi):
        phi = np.asarray(phi, dtype=float)
        return -np.minimum(12.0 * (phi / self.phi_3db) ** 2, self.a_m)

    def gain_db(self, theta, phi):
        total = self.vertical_db(theta) + self.horizontal_db(phi)
        return self.g_max - np.minimum(-total, self.a_m)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Gain sampled on a regular (theta, phi) grid, bilinearly interpolated.

    ``gain`` has shape ``(len(theta_grid), len(phi_grid))``. The grids must
    be strictly increasing; phi must span [-180, 180]. Theta queries past
    the grid edges are clamped to the nearest edge row.
    """

    theta_grid: np.ndarray
    phi_grid: np.ndarray
    gain: np.ndarray
    _interp: RegularGridInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        th = np.asarray(self.theta_grid, dtype=float)
        ph = np.asarray(self.phi_grid, dtype=float)
        g = np.asarray(self.gain, dtype=float)
        if th.ndim != 1 or ph.ndim != 1 or len(th) < 2 or len(ph) < 2:
            raise PatternFileError("theta and phi grids need at least two points each")
        if np.any(np.diff(th) <= 0) or np.any(np.diff(ph) <= 0):
            raise PatternFileError("grids must be strictly increasing")
        if g.shape != (len(th), len(ph)):
            raise PatternFileError(f"gain shape {g.shape} does not match grids ({len(th)}, {len(ph)})")
        if th[0] < 0.0 or th[-1] > 180.0:
            raise PatternFileError("theta grid must lie within [0, 180]")
        if ph[0] > -180.0 or ph[-1] < 180.0:
            raise PatternFileError("phi grid must cover [-180, 180]")
        if not np.all(np.isfinite(g)):
            raise PatternFileError("gain values must be finite")
        for name, val in (("theta_grid", th), ("phi_grid", ph), ("gain", g)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "_interp", RegularGridInterpolator((th, ph), g, method="linear"))

    @property
    def g_max(self) -> float:
        return float(self.gain.max())

    def gain_db(self, theta, phi):
        theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
        if np.any((theta < 0.0) | (theta > 180.0)) or np.any((phi < -180.0) | (phi > 180.0)):
            raise PatternDomainError("direction outside [0,180] x [-180,180]; normalize it first")
        theta = np.clip(theta, self.theta_grid[0], self.theta_grid[-1])
        pts = np.stack([theta.ravel(), phi.ravel()], axis=-1)
        return self._interp(pts).reshape(theta.shape)


ElementPatternModel = Union[Isotropic, ParametricPatch, Tabulated]


def element_gain_db(model: ElementPatternModel, direction: Direction) -> float:
    """Gain of a single element towards ``direction`` in dBi."""
    d = direction.normalized()
    return float(model.gain_db(d.theta, d.phi))


# --------------------------------------------------------------------------
# tabulated pattern files


def load_tabulated(path) -> Tabulated:
    """Read a ``theta_deg,phi_deg,gain_dbi`` CSV laid out row-major on a grid."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise PatternFileError(f"{path}: {exc.strerror or exc}") from exc
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header is None or [h.strip() for h in header] != ["theta_deg", "phi_deg", "gain_dbi"]:
        raise PatternFileError(f"{path}:1: expected header 'theta_deg,phi_deg,gain_dbi'")
    data = []
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise PatternFileError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        try:
            data.append([float(c) for c in row])
        except ValueError:
            raise PatternFileError(f"{path}:{lineno}: non-numeric value in {row!r}") from None
    if not data:
        raise PatternFileError(f"{path}: no data rows")
    arr = np.array(data)
    th = np.unique(arr[:, 0])
    ph = np.unique(arr[:, 1])
    if len(arr) != len(th) * len(ph):
        raise PatternFileError(f"{path}: {len(arr)} rows do not form a regular {len(th)}x{len(ph)} grid")
    expect_th = np.repeat(th, len(ph))
    expect_ph = np.tile(ph, len(th))
    bad = np.flatnonzero((arr[:, 0] != expect_th) | (arr[:, 1] != expect_ph))
    if bad.size:
        raise PatternFileError(f"{path}:{int(bad[0]) + 2}: row out of row-major grid order")
    return Tabulated(th, ph, arr[:, 2].reshape(len(th), len(ph)))


def save_tabulated(model: Tabulated, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta_deg", "phi_deg", "gain_dbi"])
        for i, th in enumerate(model.theta_grid):
            for j, ph in enumerate(model.phi_grid):
                w.writerow([f"{th:g}", f"{ph:g}", f"{model.gain[i, j]:.6f}"])


def measured_patch_pattern(
    g_max: float = 5.71,
    attenuation_60_db: float = 6.0,
    front_back_db: float = 25.0,
    step: float = 1.0,
) -> Tabulated:
    """Synthetic stand-in for a simulated patch element, on a regular grid.

    Power pattern ``((1 + cos psi) / 2) ** q`` where ``psi`` is the angle off
    boresight; ``q`` is set so the horizontal cut is ``attenuation_60_db``
    down at 60 degrees. The back hemisphere is floored at ``-front_back_db``.
    """
    q = attenuation_60_db / (-10.0 * math.log10(0.75))
    theta = np.arange(0.0, 180.0 + step / 2, step)
    phi = np.arange(-180.0, 180.0 + step / 2, step)
    T, P = np.meshgrid(np.radians(theta), np.radians(phi), indexing="ij")
    cos_psi = np.sin(T) * np.cos(P)
    with np.errstate(divide="ignore"):
        rel = 10.0 * q * np.log10((1.0 + cos_psi) / 2.0)
    gain = g_max + np.maximum(rel, -front_back_db)
    return Tabulated(theta, phi, gain)


# --------------------------------------------------------------------------
# arrays and beamforming


@dataclass(frozen=True)
class ArrayConfig:
    rows: int = 8
    cols: int = 8
    dv: float = 0.5
    dh: float = 0.5

    def __post_init__(self):
        if int(self.rows) < 1 or int(self.cols) < 1:
            raise ValueError("array needs at least one row and one column")
        if not (self.dv > 0 and self.dh > 0):
            raise ValueError("element spacing must be positive")

    @property
    def n(self) -> int:
        return self.rows * self.cols

    def element_indices(self):
        """Row-major (p - 1, r - 1) index pairs, length ``n``."""
        p, r = np.meshgrid(np.arange(self.rows), np.arange(self.cols), indexing="ij")
        return p.ravel(), r.ravel()

    def phase(self, theta, phi):
        """Per-element propagation phase in radians.

        Output shape is ``theta.shape + (n,)``.
        """
        p, r = self.element_indices()
        t = np.radians(np.asarray(theta, dtype=float))[..., None]
        f = np.radians(np.asarray(phi, dtype=float))[..., None]
        return 2.0 * np.pi * (p * self.dv * np.cos(t) + r * self.dh * np.sin(t) * np.sin(f))


@dataclass(frozen=True, eq=False)
class AmplitudeProfile:
    amplitudes: np.ndarray
    rho: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=float)
        if a.ndim != 1 or np.any(a < 0):
            raise ValueError("amplitudes must be a non-negative vector")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def uniform(cls, n: int, rho: float = 1.0) -> "AmplitudeProfile":
        return cls(np.full(n, 1.0 / math.sqrt(n)), rho)


@dataclass(frozen=True, eq=False)
class BeamWeights:
    """Phase-only beamformer.

    ``steering_phase`` holds the per-element phase that the shifters
    compensate; the applied weight is ``exp(-1j * steering_phase)``.
    ``bits`` is None for unbounded resolution.
    """

    steering_phase: np.ndarray
    steering: Direction
    bits: int | None = None

    @property
    def weights(self) -> np.ndarray:
        return np.exp(-1j * self.steering_phase)

    def __len__(self):
        return len(self.steering_phase)


def quantize_phase(phase, bits: int | None):
    """Round phases to the nearest of ``2**bits`` levels in [0, 2*pi)."""
    if bits is None:
        return np.asarray(phase, dtype=float)
    if bits < 1:
        raise ValueError("bits must be a positive count or None")
    levels = 2**bits
    step = 2.0 * np.pi / levels
    k = np.rint(np.asarray(phase) / step).astype(np.int64) % levels
    return k * step


def make_weights(cfg: ArrayConfig, steering: Direction, bits: int | None = None) -> BeamWeights:
    s = steering.normalized()
    phase = quantize_phase(cfg.phase(s.theta, s.phi), bits)
    phase.setflags(write=False)
    return BeamWeights(phase, s, bits)


def _coherent_sum(cfg, amp, w, theta, phi):
    if len(amp.amplitudes) != cfg.n or len(w) != cfg.n:
        raise ValueError(f"amplitude/weight length must equal rows*cols = {cfg.n}")
    arg = cfg.phase(theta, phi) - w.steering_phase
    return np.exp(1j * arg) @ amp.amplitudes


def array_response(cfg: ArrayConfig, amp: AmplitudeProfile, w: BeamWeights, theta, phi):
    """Complex ``a . w^T`` evaluated towards (theta, phi); vectorized."""
    return _coherent_sum(cfg, amp, w, theta, phi)


def array_factor_linear(cfg, amp, w, theta, phi):
    power = np.abs(_coherent_sum(cfg, amp, w, theta, phi)) ** 2
    power = np.where(power < NULL_POWER, 0.0, power)
    return 1.0 + amp.rho * (power - 1.0)


def _to_db(lin):
    lin = np.asarray(lin, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(lin > 0.0, 10.0 * np.log10(np.where(lin > 0.0, lin, 1.0)), -np.inf)


def array_factor_db(cfg: ArrayConfig, amp: AmplitudeProfile, w: BeamWeights, direction: Direction) -> float:
    """Array factor in dB; an exact null returns ``-inf``."""
    d = direction.normalized()
    return float(_to_db(array_factor_linear(cfg, amp, w, d.theta, d.phi)))


def array_gain_db(model, cfg, amp, w, direction: Direction) -> float:
    d = direction.normalized()
    return float(model.gain_db(d.theta, d.phi)) + array_factor_db(cfg, amp, w, d)


def field_amplitude(model, cfg, amp, w, direction: Direction) -> float:
    """Vertically polarized field amplitude ``sqrt(10 ** (A_A / 10))``.

    The horizontal polarization component is identically zero and is not
    returned.
    """
    gain = array_gain_db(model, cfg, amp, w, direction)
    if gain == -np.inf:
        return 0.0
    return 10.0 ** (gain / 20.0)


def export_pattern_cut(model, cfg, amp, w, theta: float = 90.0, phi_step: float = 1.0) -> np.ndarray:
    """Horizontal cut of the array pattern at fixed ``theta``.

    Returns a structured array with fields ``phi_deg``, ``element_db``,
    ``af_db`` and ``array_db`` over phi in [-180, 180].
    """
    if not phi_step > 0:
        raise ValueError("phi_step must be positive")
    n_steps = int(math.floor(360.0 / phi_step + 1e-9))
    phi = -180.0 + phi_step * np.arange(n_steps + 1)
    th = np.full_like(phi, theta)
    el = model.gain_db(th, phi)
    af = _to_db(array_factor_linear(cfg, amp, w, th, phi))
    out = np.zeros(len(phi), dtype=[("phi_deg", float), ("element_db", float), ("af_db", float), ("array_db", float)])
    out["phi_deg"] = phi
    out["element_db"] = el
    out["af_db"] = af
    out["array_db"] = el + af
    return out


def write_pattern_cut(table: np.ndarray, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["phi_deg", "element_db", "af_db", "array_db"])
    for row in table:
        w.writerow([f"{row['phi_deg']:.6g}"] + [f"{row[k]:.6f}" for k in ("element_db", "af_db", "array_db")])
