"""Monte Carlo drops, empirical CDFs and parameter sweeps."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import rng as _rng
from .antenna import ArrayConfig, Isotropic, ParametricPatch, PatternFileError, load_tabulated, measured_patch_pattern, wrap_deg
from .channel import ConfigurationError, PathLossParams, path_loss_db, sample_cluster_batch, sample_link_states
from .network import SECTOR_HALF_WIDTH, BeamSet, RadioConstants, associate, beam_gains, drop_deployment, received_power_mw, select_sector

__all__ = [
    "PATTERNS",
    "Scenario",
    "EcdfSeries",
    "DropResult",
    "RunResult",
    "simulate_drop",
    "run_drops",
    "noise_limited_probability",
    "quantile",
    "sweep_density",
    "sweep_bits",
]

PATTERNS = ("iso", "3gpp", "tabulated")
COMPOSITIONS = ("literal", "element-only")

# element spacing (vertical, horizontal) of the simulated patch array, in wavelengths
TABULATED_SPACING = (0.77, 0.55)


@dataclass(frozen=True)
class Scenario:
    """Full experiment description.

    ``bs_array``/``ue_array`` left as None take the pattern's default
    geometry: 8x8 and 4x4, half-wavelength spaced, or the patch spacing
    for the tabulated pattern. ``bits`` None means unbounded phase
    resolution.
    """

    pattern: str = "3gpp"
    pattern_file: str | None = None
    bs_array: ArrayConfig | None = None
    ue_array: ArrayConfig | None = None
    constants: RadioConstants = RadioConstants()
    path_loss: PathLossParams = PathLossParams()
    density: float = 100.0
    region_side: float = 2000.0
    drops: int = 10_000
    seed: int = 1
    bits: int | None = None
    composition: str = "element-only"
    active_sectors: str = "one"
    ue_pattern: str = "same"
    ue_mount: str = "sectorized"

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ConfigurationError(f"pattern must be one of {PATTERNS}, got {self.pattern!r}")
        if self.composition not in COMPOSITIONS:
            raise ConfigurationError(f"composition must be one of {COMPOSITIONS}, got {self.composition!r}")
        if self.active_sectors not in ("all", "one"):
            raise ConfigurationError("active_sectors must be 'all' or 'one'")
        if self.ue_pattern not in ("same", "iso"):
            raise ConfigurationError("ue_pattern must be 'same' or 'iso'")
        if self.ue_mount not in ("sectorized", "facing"):
            raise ConfigurationError("ue_mount must be 'sectorized' or 'facing'")
        if self.drops < 1:
            raise ConfigurationError("drops must be >= 1")
        if not self.density > 0:
            raise ConfigurationError("density must be positive")
        if not self.region_side > 0:
            raise ConfigurationError("region_side must be positive")
        if self.bits is not None and self.bits < 1:
            raise ConfigurationError("bits must be >= 1 or unbounded")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must fit in 64 bits")

    @property
    def n_sectors(self) -> int:
        return 1 if self.pattern == "iso" else 3

    @property
    def bs_cfg(self) -> ArrayConfig:
        return self.bs_array or self._default_array(8)

    @property
    def ue_cfg(self) -> ArrayConfig:
        return self.ue_array or self._default_array(4)

    def _default_array(self, m):
        if self.pattern == "tabulated":
            dv, dh = TABULATED_SPACING
            return ArrayConfig(m, m, dv, dh)
        return ArrayConfig(m, m)

    @cached_property
    def element_model(self):
        if self.pattern == "iso":
            return Isotropic()
        if self.pattern == "3gpp":
            return ParametricPatch()
        if self.pattern_file is None:
            return measured_patch_pattern()
        try:
            return load_tabulated(self.pattern_file)
        except PatternFileError as exc:
            raise ConfigurationError(str(exc)) from exc

    @property
    def ue_model(self):
        return Isotropic() if self.ue_pattern == "iso" else self.element_model

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class EcdfSeries:
    samples: np.ndarray
    outage_count: int = 0

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float))
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return len(self.samples)

    def cdf(self, x):
        """Fraction of samples <= x."""
        return np.searchsorted(self.samples, x, side="right") / len(self.samples)

    def fraction_below(self, x) -> float:
        return float(np.searchsorted(self.samples, x, side="left") / len(self.samples))

    def quantile(self, q: float) -> float:
        return quantile(self, q)

    @property
    def outage_fraction(self) -> float:
        total = len(self.samples) + self.outage_count
        return self.outage_count / total if total else 0.0


def quantile(e: EcdfSeries, q: float) -> float:
    """Lower empirical quantile: the ``ceil(q * N)``-th smallest sample."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if len(e) == 0:
        raise ValueError("quantile of an empty series")
    k = max(math.ceil(q * len(e) - 1e-9), 1)
    return float(e.samples[k - 1])


def noise_limited_probability(inr: EcdfSeries) -> float:
    """Fraction of INR samples strictly below 0 dB."""
    if len(inr) == 0:
        raise ValueError("noise-limited probability of an empty series")
    return inr.fraction_below(0.0)


@dataclass(frozen=True)
class DropResult:
    outage: bool
    sinr_db: float = -math.inf
    inr_db: float = -math.inf
    snr_db: float = -math.inf
    serving_path_loss_db: float = math.inf
    path_loss_digest: float = 0.0


def _steer_window(n_sectors: int) -> float:
    return 180.0 if n_sectors == 1 else SECTOR_HALF_WIDTH


def simulate_drop(s: Scenario, drop: int) -> DropResult:
    """One deployment, one typical UE at the center."""
    dep = drop_deployment(s.density, s.region_side, _rng.substream(s.seed, drop, _rng.DEPLOY), s.n_sectors)
    d = np.maximum(dep.distances(), 1.0)
    ls = _rng.substream(s.seed, drop, _rng.LARGE_SCALE)
    states = sample_link_states(d, s.path_loss, ls)
    pl = path_loss_db(d, states, s.path_loss, ls)
    digest = float(np.sum(pl[np.isfinite(pl)]))
    serving = associate(pl)
    if serving is None:
        return DropResult(True, path_loss_digest=digest)

    active = np.flatnonzero(np.isfinite(pl))
    n_links, n_sec = len(active), s.n_sectors
    boresights = dep.boresights()[active]
    half = _steer_window(n_sec)
    small = _rng.substream(s.seed, drop, _rng.LINK)
    batch = sample_cluster_batch(small, n_links)
    steer = small.uniform(-half, half, (n_links, n_sec))
    served_sector = small.integers(n_sec, size=n_links)

    # the serving sector steers at the strongest cluster; the UE faces it
    j0 = int(np.searchsorted(active, serving))
    k0 = batch.dominant(j0)
    sector = select_sector(boresights[j0], batch.center_aod[k0])
    steer[j0, sector] = np.clip(wrap_deg(batch.center_aod[k0] - boresights[j0, sector]), -half, half)
    served_sector[j0] = sector
    if s.ue_mount == "facing":
        ue_orientation, ue_steer = float(batch.center_aoa[k0]), 0.0
    else:
        panels = wrap_deg(small.uniform(-180.0, 180.0) + 360.0 / n_sec * np.arange(n_sec))
        panel = select_sector(panels, batch.center_aoa[k0])
        ue_orientation = float(panels[panel])
        ue_steer = float(np.clip(wrap_deg(batch.center_aoa[k0] - ue_orientation), -half, half))

    if s.active_sectors == "one":
        on = np.zeros((n_links, n_sec), bool)
        on[np.arange(n_links), served_sector] = True
    else:
        on = np.ones((n_links, n_sec), bool)
    beam_link, beam_sector = np.nonzero(on)
    beams = BeamSet(beam_link, boresights[beam_link, beam_sector], steer[beam_link, beam_sector])
    serving_beam = int(np.flatnonzero((beam_link == j0) & (beam_sector == sector))[0])

    g = np.sqrt(batch.power) * np.exp(1j * batch.phase)
    gains = beam_gains(
        (batch.link, g, batch.aod, batch.aoa), beams, s.element_model, s.bs_cfg, s.ue_model, s.ue_cfg,
        ue_orientation, ue_steer, s.bits, s.composition,
    )
    power = received_power_mw(s.constants, pl[active][beam_link], gains)
    signal = float(power[serving_beam])
    interference = math.fsum(np.delete(power, serving_beam))
    noise = s.constants.noise_mw
    return DropResult(
        False,
        sinr_db=_db(signal / (interference + noise)),
        inr_db=_db(interference / noise),
        snr_db=_db(signal / noise),
        serving_path_loss_db=float(pl[serving]),
        path_loss_digest=digest,
    )


def _db(x):
    return 10.0 * math.log10(x) if x > 0 else -math.inf


@dataclass(frozen=True, eq=False)
class RunResult:
    scenario: Scenario
    drops: list[DropResult] = field(repr=False)

    @cached_property
    def sinr(self) -> EcdfSeries:
        ok = [r.sinr_db for r in self.drops if not r.outage]
        return EcdfSeries(np.array(ok), outage_count=len(self.drops) - len(ok))

    @cached_property
    def inr(self) -> EcdfSeries:
        ok = [r.inr_db for r in self.drops if not r.outage]
        return EcdfSeries(np.array(ok), outage_count=len(self.drops) - len(ok))

    @property
    def outage_fraction(self) -> float:
        return self.sinr.outage_fraction

    @property
    def p_nl(self) -> float:
        return noise_limited_probability(self.inr)


def default_threads() -> int:
    env = os.environ.get("MMWSIM_THREADS")
    if env:
        return max(int(env), 1)
    return min(8, os.cpu_count() or 1)


def run_drops(s: Scenario, threads: int | None = None) -> RunResult:
    """Run ``s.drops`` independent drops; output is independent of ``threads``."""
    s.element_model  # fail on a bad pattern file before any drop runs
    threads = threads or default_threads()
    if threads == 1:
        results = [simulate_drop(s, i) for i in range(s.drops)]
    else:
        chunk = max(1, s.drops // (threads * 4))
        ranges = [range(a, min(a + chunk, s.drops)) for a in range(0, s.drops, chunk)]
        with ThreadPoolExecutor(threads) as pool:
            parts = pool.map(lambda r: [simulate_drop(s, i) for i in r], ranges)
            results = [res for part in parts for res in part]
    return RunResult(s, results)


def sweep_density(s: Scenario, densities, patterns=None, threads: int | None = None) -> dict:
    """``{(pattern, density): RunResult}`` over the grid."""
    densities = list(densities)
    if not densities:
        raise ValueError("density list is empty")
    patterns = list(patterns) if patterns else [s.pattern]
    return {
        (p, float(d)): run_drops(s.with_(pattern=p, density=float(d)), threads)
        for p in patterns
        for d in densities
    }


def sweep_bits(s: Scenario, bits_list, threads: int | None = None) -> dict:
    """``{bits: RunResult}``; every entry reuses the same drop seeds."""
    bits_list = list(bits_list)
    if not bits_list:
        raise ValueError("bits list is empty")
    return {b: run_drops(s.with_(bits=b), threads) for b in bits_list}
