"""Cluster/subpath channel at 28 GHz, three-state path loss and aligned gain.

Subpath azimuths are stored in degrees, wrapped to [-180, 180), in the
global frame of each link end. Vertical angles are fixed at 90 degrees.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .antenna import AmplitudeProfile, ArrayConfig, BeamWeights, wrap_deg

__all__ = [
    "LinkState",
    "StateParams",
    "PathLossParams",
    "Subpath",
    "Clusters",
    "ClusterBatch",
    "sample_cluster_batch",
    "ChannelRealization",
    "ArrayContext",
    "ConfigurationError",
    "sample_clusters",
    "state_probabilities",
    "sample_link_state",
    "sample_link_states",
    "path_loss_db",
    "channel_matrix",
    "aligned_gain",
    "subpath_terms",
]

CLUSTER_RATE = 1.8
MAX_SUBPATHS = 10
POWER_DECAY = 2.8
CLUSTER_SHADOW_STD_DB = 4.0
SUBPATH_SPREAD = 0.6
ANGULAR_SPREAD_MEAN = 0.178  # rad
ANGULAR_SPREAD_MIN = 0.0122  # rad


class ConfigurationError(ValueError):
    pass


class LinkState(enum.IntEnum):
    LOS = 0
    NLOS = 1
    OUTAGE = 2


@dataclass(frozen=True)
class StateParams:
    intercept_db: float
    exponent: float
    shadowing_sigma_db: float

    def __post_init__(self):
        if not self.exponent > 0:
            raise ValueError("path loss exponent must be positive")
        if self.shadowing_sigma_db < 0:
            raise ValueError("shadowing sigma must be non-negative")


@dataclass(frozen=True)
class PathLossParams:
    """Three-state distance-dependent path loss.

    p_out(d) = max(0, 1 - exp(-outage_slope * d + outage_offset))
    p_los(d) = (1 - p_out(d)) * exp(-d / los_scale_m)
    """

    los: StateParams = StateParams(61.4, 2.0, 5.8)
    nlos: StateParams = StateParams(72.0, 2.92, 8.7)
    outage_slope: float = 1.0 / 30.0
    outage_offset: float = 5.2
    los_scale_m: float = 67.1

    def state(self, state: LinkState) -> StateParams:
        if state == LinkState.LOS:
            return self.los
        if state == LinkState.NLOS:
            return self.nlos
        raise ValueError("outage has no path loss parameters")


def state_probabilities(d, params: PathLossParams = PathLossParams()):
    """Return ``(p_los, p_nlos, p_out)`` at distance(s) ``d`` in meters."""
    d = np.asarray(d, dtype=float)
    p_out = np.clip(1.0 - np.exp(-params.outage_slope * d + params.outage_offset), 0.0, 1.0)
    p_los = (1.0 - p_out) * np.exp(-d / params.los_scale_m)
    p_nlos = np.clip(1.0 - p_out - p_los, 0.0, 1.0)
    return p_los, p_nlos, p_out


def sample_link_states(d, params: PathLossParams, rng: np.random.Generator) -> np.ndarray:
    p_los, p_nlos, _ = state_probabilities(d, params)
    u = rng.random(np.shape(d))
    out = np.full(np.shape(d), LinkState.OUTAGE, dtype=np.int8)
    out[u < p_los + p_nlos] = LinkState.NLOS
    out[u < p_los] = LinkState.LOS
    return out


def sample_link_state(d: float, params: PathLossParams, rng: np.random.Generator) -> LinkState:
    if d < 0:
        raise ValueError("distance must be non-negative")
    return LinkState(int(sample_link_states(np.asarray(float(d)), params, rng)))


def path_loss_db(d, state, params: PathLossParams, rng: np.random.Generator | None = None):
    """Path loss in dB with lognormal shadowing; ``inf`` for outage.

    Accepts scalars or matching arrays of distances and states. Passing
    ``rng=None`` disables shadowing.
    """
    d = np.asarray(d, dtype=float)
    state = np.asarray(state)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    d, state = np.broadcast_arrays(d, state)
    intercept = np.where(state == LinkState.LOS, params.los.intercept_db, params.nlos.intercept_db)
    exponent = np.where(state == LinkState.LOS, params.los.exponent, params.nlos.exponent)
    sigma = np.where(state == LinkState.LOS, params.los.shadowing_sigma_db, params.nlos.shadowing_sigma_db)
    pl = intercept + 10.0 * exponent * np.log10(d)
    if rng is not None:
        pl = pl + sigma * rng.standard_normal(d.shape)
    pl = np.where(state == LinkState.OUTAGE, np.inf, pl)
    return float(pl) if pl.ndim == 0 else pl


# --------------------------------------------------------------------------
# small-scale clusters


@dataclass(frozen=True)
class Subpath:
    power_frac: float
    phase: float
    aod_phi: float
    aoa_phi: float


@dataclass(frozen=True, eq=False)
class Clusters:
    """Flat per-subpath arrays; ``cluster`` maps each subpath to its cluster."""

    power: np.ndarray
    phase: np.ndarray
    aod: np.ndarray
    aoa: np.ndarray
    cluster: np.ndarray
    center_aod: np.ndarray
    center_aoa: np.ndarray

    @property
    def n_clusters(self) -> int:
        return len(self.center_aod)

    def cluster_powers(self) -> np.ndarray:
        return np.bincount(self.cluster, weights=self.power, minlength=self.n_clusters)

    @property
    def dominant(self) -> int:
        return int(np.argmax(self.cluster_powers()))

    def groups(self) -> list[list[Subpath]]:
        out: list[list[Subpath]] = [[] for _ in range(self.n_clusters)]
        for i, k in enumerate(self.cluster):
            out[k].append(Subpath(float(self.power[i]), float(self.phase[i]), float(self.aod[i]), float(self.aoa[i])))
        return out


@dataclass(frozen=True, eq=False)
class ClusterBatch:
    """Clusters of several links drawn together, flattened.

    ``link`` maps each subpath to its link and ``cluster_link`` maps each
    cluster to its link; cluster ids in ``cluster`` are global.
    """

    power: np.ndarray
    phase: np.ndarray
    aod: np.ndarray
    aoa: np.ndarray
    cluster: np.ndarray
    link: np.ndarray
    center_aod: np.ndarray
    center_aoa: np.ndarray
    cluster_link: np.ndarray

    def cluster_powers(self) -> np.ndarray:
        return np.bincount(self.cluster, weights=self.power, minlength=len(self.center_aod))

    def dominant(self, link: int) -> int:
        """Global id of the strongest cluster of ``link``."""
        ids = np.flatnonzero(self.cluster_link == link)
        return int(ids[np.argmax(self.cluster_powers()[ids])])

    def for_link(self, link: int) -> Clusters:
        sel = self.link == link
        ids = np.flatnonzero(self.cluster_link == link)
        return Clusters(
            self.power[sel], self.phase[sel], self.aod[sel], self.aoa[sel],
            self.cluster[sel] - ids[0], self.center_aod[ids], self.center_aoa[ids],
        )


def _azimuths(rng, cid, n_clusters, parity):
    center = rng.uniform(0.0, 2.0 * np.pi, n_clusters)
    spread = np.maximum(rng.exponential(ANGULAR_SPREAD_MEAN, len(cid)), ANGULAR_SPREAD_MIN)
    az = center[cid] + parity * spread / 2.0
    return wrap_deg(np.degrees(center)), wrap_deg(np.degrees(az))


def sample_cluster_batch(rng: np.random.Generator, n_links: int) -> ClusterBatch:
    """Independent cluster sets for ``n_links`` links from one stream."""
    k = np.maximum(rng.poisson(CLUSTER_RATE, n_links), 1)
    n_clusters = int(k.sum())
    sizes = rng.integers(1, MAX_SUBPATHS + 1, size=n_clusters)
    u = rng.random(n_clusters)
    z = rng.normal(0.0, CLUSTER_SHADOW_STD_DB, n_clusters)
    n_sub = int(sizes.sum())
    v = rng.uniform(0.0, SUBPATH_SPREAD, n_sub)
    cluster_link = np.repeat(np.arange(n_links), k)
    cid = np.repeat(np.arange(n_clusters), sizes)
    link = cluster_link[cid]
    # 1-based subpath index within its cluster decides the side of the spread
    first = np.cumsum(sizes) - sizes
    l = np.arange(n_sub) - first[cid] + 1
    parity = np.where(l % 2 == 1, -1.0, 1.0)
    raw = (u[cid] ** (POWER_DECAY - 1.0)) * 10.0 ** (-0.1 * z[cid] + v) / sizes[cid]
    power = raw / np.bincount(link, weights=raw, minlength=n_links)[link]
    c_aod, aod = _azimuths(rng, cid, n_clusters, parity)
    c_aoa, aoa = _azimuths(rng, cid, n_clusters, parity)
    phase = rng.uniform(0.0, 2.0 * np.pi, n_sub)
    return ClusterBatch(power, phase, aod, aoa, cid, link, c_aod, c_aoa, cluster_link)


def sample_clusters(rng: np.random.Generator) -> Clusters:
    return sample_cluster_batch(rng, 1).for_link(0)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    clusters: Clusters
    state: LinkState
    path_loss_db: float

    def __post_init__(self):
        if self.state == LinkState.OUTAGE and self.path_loss_db != np.inf:
            raise ValueError("outage links carry infinite path loss")

    @property
    def in_outage(self) -> bool:
        return self.state == LinkState.OUTAGE


# --------------------------------------------------------------------------
# channel matrix


@dataclass(frozen=True, eq=False)
class ArrayContext:
    """One end of a link: element pattern, geometry, beam and mounting.

    ``orientation`` is the global azimuth of the array boresight.
    """

    model: object
    cfg: ArrayConfig
    weights: BeamWeights
    amp: AmplitudeProfile = None
    orientation: float = 0.0

    def __post_init__(self):
        if self.amp is None:
            object.__setattr__(self, "amp", AmplitudeProfile.uniform(self.cfg.n))
        if len(self.weights) != self.cfg.n or len(self.amp.amplitudes) != self.cfg.n:
            raise ConfigurationError(
                f"context has {len(self.weights)} weights and {len(self.amp.amplitudes)} amplitudes "
                f"for a {self.cfg.rows}x{self.cfg.cols} array"
            )

    def local(self, azimuth):
        return wrap_deg(np.asarray(azimuth) - self.orientation)

    def element_terms(self, azimuth):
        """Per-element ``a_e * exp(j(phase_e - steer_e))``, shape ``(..., n)``."""
        phi = self.local(azimuth)
        arg = self.cfg.phase(np.full_like(phi, 90.0), phi) - self.weights.steering_phase
        return self.amp.amplitudes * np.exp(1j * arg)

    def field(self, azimuth, composition: str, response=None):
        """Field amplitude towards ``azimuth``.

        ``literal`` uses the full array pattern, ``element-only`` the bare
        element pattern. ``response`` is the complex ``a . w^T`` if already
        computed.
        """
        phi = self.local(azimuth)
        el = 10.0 ** (self.model.gain_db(np.full_like(phi, 90.0), phi) / 10.0)
        if composition == "element-only":
            return np.sqrt(el)
        if composition != "literal":
            raise ConfigurationError(f"unknown gain composition {composition!r}")
        if response is None:
            response = self.element_terms(azimuth).sum(axis=-1)
        af = np.abs(response) ** 2
        af = np.where(af < 1e-20, 0.0, 1.0 + self.amp.rho * (af - 1.0))
        return np.sqrt(el * af)


def _g(real):
    c = real.clusters
    return np.sqrt(c.power) * np.exp(1j * c.phase)


def channel_matrix(
    real: ChannelRealization, tx: ArrayContext, rx: ArrayContext, composition: str = "literal"
) -> np.ndarray:
    """Per-element channel, shape ``(n_tx, n_rx)``; zero for outage links.

    The element signatures include the beamforming weights and amplitude
    taper, so summing every entry yields the beamformed link amplitude.
    """
    if real.in_outage:
        return np.zeros((tx.cfg.n, rx.cfg.n), dtype=complex)
    c = real.clusters
    u_t = tx.element_terms(c.aod)  # (S, n_tx)
    u_r = rx.element_terms(c.aoa)  # (S, n_rx)
    f_t = tx.field(c.aod, composition, u_t.sum(axis=-1))
    f_r = rx.field(c.aoa, composition, u_r.sum(axis=-1))
    coef = _g(real) * f_t * f_r
    return np.einsum("s,st,sr->tr", coef, np.conj(u_t), u_r)


def subpath_terms(real: ChannelRealization, tx: ArrayContext, rx: ArrayContext, composition: str = "literal"):
    """Per-subpath contributions to the summed channel, without forming H."""
    c = real.clusters
    resp_t = tx.element_terms(c.aod).sum(axis=-1)
    resp_r = rx.element_terms(c.aoa).sum(axis=-1)
    f_t = tx.field(c.aod, composition, resp_t)
    f_r = rx.field(c.aoa, composition, resp_r)
    return _g(real) * f_t * f_r * np.conj(resp_t) * resp_r


def aligned_gain(h) -> float:
    """``|sum_r sum_t h[r, t]|**2``."""
    return float(np.abs(np.sum(h)) ** 2)
