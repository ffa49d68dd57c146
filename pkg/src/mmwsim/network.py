"""Deployment, sectorization, association and SINR/INR bookkeeping."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .antenna import AmplitudeProfile, ArrayConfig, NULL_POWER, quantize_phase, wrap_deg

__all__ = [
    "RadioConstants",
    "Site",
    "Deployment",
    "LinkBudget",
    "drop_deployment",
    "mean_cell_radius_m",
    "select_sector",
    "associate",
    "received_power_mw",
    "compute_sinr",
    "compute_inr",
    "BeamSet",
    "beam_gains",
    "SECTOR_HALF_WIDTH",
]

SECTOR_HALF_WIDTH = 60.0
THERMAL_NOISE_DBM_HZ = -174.0


@dataclass(frozen=True)
class RadioConstants:
    tx_power_dbm: float = 30.0
    bandwidth_hz: float = 500e6
    noise_figure_db: float = 7.0
    carrier_hz: float = 28e9

    @property
    def noise_dbm(self) -> float:
        return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db

    @property
    def noise_mw(self) -> float:
        return 10.0 ** (self.noise_dbm / 10.0)

    @property
    def tx_power_mw(self) -> float:
        return 10.0 ** (self.tx_power_dbm / 10.0)


@dataclass(frozen=True, eq=False)
class Site:
    position: np.ndarray
    sector_boresights: np.ndarray

    @property
    def n_sectors(self) -> int:
        return len(self.sector_boresights)


@dataclass(frozen=True, eq=False)
class Deployment:
    positions: np.ndarray  # (N, 2) meters
    rotations: np.ndarray  # (N,) degrees, common to all sectors of a site
    n_sectors: int
    ue: np.ndarray

    def __len__(self):
        return len(self.positions)

    def boresights(self) -> np.ndarray:
        """Global sector boresight azimuths, shape ``(N, n_sectors)``."""
        offsets = 360.0 / self.n_sectors * np.arange(self.n_sectors)
        return wrap_deg(self.rotations[:, None] + offsets[None, :])

    def site(self, i: int) -> Site:
        return Site(self.positions[i], self.boresights()[i])

    def distances(self) -> np.ndarray:
        return np.hypot(*(self.positions - self.ue).T)


def mean_cell_radius_m(density_per_km2: float) -> float:
    """Radius of a disc whose area is the mean cell area."""
    return math.sqrt(1e6 / (math.pi * density_per_km2))


def drop_deployment(
    density: float, region_side: float, rng: np.random.Generator, n_sectors: int = 3
) -> Deployment:
    """Poisson sites in a square of side ``region_side`` m, UE at the center.

    Draws are repeated until at least one site lands in the region.
    """
    if not density > 0:
        raise ValueError("density must be positive")
    if not region_side > 0:
        raise ValueError("region side must be positive")
    mean = density * (region_side / 1000.0) ** 2
    n = 0
    while n == 0:
        n = int(rng.poisson(mean))
    pos = rng.uniform(0.0, region_side, size=(n, 2))
    rot = rng.uniform(-180.0, 180.0, size=n)
    ue = np.array([region_side / 2.0, region_side / 2.0])
    return Deployment(pos, rot, n_sectors, ue)


def select_sector(boresights, azimuth: float) -> int:
    """Sector whose +-60 degree window contains ``azimuth``.

    On a window boundary the lower index wins, which makes the windows
    half-open and every azimuth owned by exactly one sector of a
    three-sector site.
    """
    rel = np.abs(wrap_deg(azimuth - np.asarray(boresights, dtype=float)))
    # wrap_deg maps +180 to -180; a 180-degree offset is never inside a window
    return int(np.argmin(np.round(rel, 12)))


def associate(path_losses_db) -> int | None:
    """Index of the minimum path loss link, or None if every link is in outage."""
    pl = np.asarray(path_losses_db, dtype=float)
    if pl.size == 0 or not np.any(np.isfinite(pl)):
        return None
    return int(np.argmin(pl))


def received_power_mw(constants: RadioConstants, path_loss_db, gain):
    pl = np.asarray(path_loss_db, dtype=float)
    return constants.tx_power_mw * np.asarray(gain, dtype=float) * np.where(np.isfinite(pl), 10.0 ** (-pl / 10.0), 0.0)


@dataclass(frozen=True)
class LinkBudget:
    serving_bs: int
    signal_mw: float
    interference_mw: float
    noise_mw: float

    def __post_init__(self):
        if min(self.signal_mw, self.interference_mw, self.noise_mw) < 0:
            raise ValueError("powers must be non-negative")

    @property
    def sinr_db(self) -> float:
        return _db(self.signal_mw / (self.interference_mw + self.noise_mw))

    @property
    def snr_db(self) -> float:
        return _db(self.signal_mw / self.noise_mw)

    @property
    def inr_db(self) -> float:
        return _db(self.interference_mw / self.noise_mw)


def _db(x: float) -> float:
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def compute_sinr(signal_mw: float, interferers_mw, noise_mw: float) -> float:
    return _db(signal_mw / (math.fsum(np.ravel(interferers_mw)) + noise_mw))


def compute_inr(interferers_mw, noise_mw: float) -> float:
    return _db(math.fsum(np.ravel(interferers_mw)) / noise_mw)


# --------------------------------------------------------------------------
# batched beam gains


@dataclass(frozen=True, eq=False)
class BeamSet:
    """Transmit beams, each tied to a link.

    ``link`` indexes the link whose subpaths the beam sees; ``orientation``
    is the sector boresight and ``steer`` the local steering azimuth.
    """

    link: np.ndarray
    orientation: np.ndarray
    steer: np.ndarray

    def __len__(self):
        return len(self.link)


def _response(cfg: ArrayConfig, amp: AmplitudeProfile, local_phi, steer_phase):
    arg = cfg.phase(np.full_like(local_phi, 90.0), local_phi) - steer_phase
    return np.exp(1j * arg) @ amp.amplitudes


def _field(model, local_phi, resp, rho, composition):
    el = 10.0 ** (model.gain_db(np.full_like(local_phi, 90.0), local_phi) / 10.0)
    if composition == "element-only":
        return np.sqrt(el)
    af = np.abs(resp) ** 2
    af = np.where(af < NULL_POWER, 0.0, 1.0 + rho * (af - 1.0))
    return np.sqrt(el * af)


def beam_gains(
    subpaths,
    beams: BeamSet,
    bs_model,
    bs_cfg: ArrayConfig,
    ue_model,
    ue_cfg: ArrayConfig,
    ue_orientation: float,
    ue_steer: float,
    bits: int | None,
    composition: str = "literal",
    bs_amp: AmplitudeProfile | None = None,
    ue_amp: AmplitudeProfile | None = None,
) -> np.ndarray:
    """Aligned gain of every beam towards the UE.

    ``subpaths`` is ``(link, g, aod, aoa)``: flat arrays over all links'
    subpaths with complex small-scale gains ``g`` and global azimuths.
    Equivalent to summing the per-link channel matrix, without forming it.
    """
    link, g, aod, aoa = subpaths
    bs_amp = bs_amp or AmplitudeProfile.uniform(bs_cfg.n)
    ue_amp = ue_amp or AmplitudeProfile.uniform(ue_cfg.n)

    ue_phase = quantize_phase(ue_cfg.phase(90.0, ue_steer), bits)
    phi_r = wrap_deg(aoa - ue_orientation)
    resp_r = _response(ue_cfg, ue_amp, phi_r, ue_phase)
    rx = g * _field(ue_model, phi_r, resp_r, ue_amp.rho, composition) * resp_r

    steer_phase = quantize_phase(bs_cfg.phase(np.full(len(beams), 90.0), beams.steer), bits)
    order = np.argsort(link, kind="stable")
    starts = np.searchsorted(link[order], np.arange(link.max() + 2 if len(link) else 1))
    counts = np.diff(starts)
    pair_beam = np.repeat(np.arange(len(beams)), counts[beams.link])
    pair_sub = np.concatenate([order[starts[l]:starts[l + 1]] for l in beams.link]) if len(beams) else np.zeros(0, int)
    phi_t = wrap_deg(aod[pair_sub] - beams.orientation[pair_beam])
    resp_t = _response(bs_cfg, bs_amp, phi_t, steer_phase[pair_beam])
    f_t = _field(bs_model, phi_t, resp_t, bs_amp.rho, composition)
    amp = rx[pair_sub] * f_t * np.conj(resp_t)
    total = np.bincount(pair_beam, weights=amp.real, minlength=len(beams)) + 1j * np.bincount(
        pair_beam, weights=amp.imag, minlength=len(beams)
    )
    return np.abs(total) ** 2
