"""Experiment engine: delay scans composed from source, optics, Fock and
detector layers, plus the closed-form visibility benchmarks.

Two execution modes produce `DipCurve`s over a delay grid:

* analytic -- exact expectation per pulse: enumerate pair configurations
  (n1, n2) up to the truncation, propagate each through the beam
  splitter at the delay-dependent overlap, and sum detector click
  products over the output photon-count patterns.
* mc -- stochastic counterpart: per pulse, sample pair counts, a
  detection pattern from the propagated state, then detector clicks.
  Every delay point uses its own seeded stream, so results are
  bit-identical regardless of evaluation order.

Truncation convention: both modes condition on n1 + n2 <= max_pairs
(analytic weights renormalized, Monte Carlo redraws), so they estimate
the same quantity exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from . import detect, fock, optics, pdc
from .detect import (CoincidenceScheme, DetectorModel, GE_1310, INGAAS_1310,
                     INGAAS_1550_1, INGAAS_1550_2)
from .optics import DistinguishabilityContext, FilterSpec
from .pdc import SourceParams

# Detector role wired to each spatial output group.
_ROLE_OF_GROUP = {
    "c": GE_1310,
    "d": INGAAS_1310,
    "herald1": INGAAS_1550_1,
    "herald2": INGAAS_1550_2,
}
_GROUP_ORDER = ("c", "d", "herald1", "herald2")

DEFAULT_PULSE_RATE_HZ = 7.6e7  # mode-locked Ti-Sapphire repetition rate


def default_detectors() -> Dict[str, DetectorModel]:
    """Detector park: Ge APD at 10%, InGaAs APDs at 30%."""
    return {
        GE_1310: DetectorModel(GE_1310, eta=0.10, dark_prob=5.3e-4),
        INGAAS_1310: DetectorModel(INGAAS_1310, eta=0.30, dark_prob=1e-4),
        INGAAS_1550_1: DetectorModel(INGAAS_1550_1, eta=0.30, dark_prob=1e-4),
        INGAAS_1550_2: DetectorModel(INGAAS_1550_2, eta=0.30, dark_prob=1e-4),
    }


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one delay-scan experiment."""

    source1: SourceParams
    source2: SourceParams
    signal_filter: FilterSpec = FilterSpec(1310.0, 10.0)
    herald_filter: FilterSpec = FilterSpec(1550.0, 10.0)
    pump_filter: FilterSpec = FilterSpec(710.0, 4.5)
    detectors: Mapping[str, DetectorModel] = field(default_factory=default_detectors)
    scheme: CoincidenceScheme = CoincidenceScheme("threefold")
    delays_um: Tuple[float, ...] = ()
    pulses_per_point: int = 100_000
    seed: int = 0
    pulse_rate_hz: float = DEFAULT_PULSE_RATE_HZ
    collection_efficiency: float = 1.0
    polarization_angle_rad: float = 0.0
    spectral_mismatch: float = 0.0
    max_pairs: int = 3
    small_eta: bool = False

    def __post_init__(self):
        if len(self.delays_um) == 0:
            raise ValueError("delay grid must be non-empty")
        if any(b <= a for a, b in zip(self.delays_um, self.delays_um[1:])):
            raise ValueError("delay grid must be strictly increasing")
        if self.pulses_per_point < 1:
            raise ValueError("pulses_per_point must be >= 1")
        if not 0.0 < self.collection_efficiency <= 1.0:
            raise ValueError("collection_efficiency must lie in (0, 1]")
        if self.max_pairs < 1:
            raise ValueError("max_pairs must be >= 1")
        if self.pulse_rate_hz <= 0:
            raise ValueError("pulse_rate_hz must be positive")

    def effective_detectors(self) -> Dict[str, DetectorModel]:
        """Detector models with collection losses folded into eta."""
        return {
            role: DetectorModel(det.name,
                                eta=det.eta * self.collection_efficiency,
                                dark_prob=det.dark_prob)
            for role, det in self.detectors.items()
        }

    def coherence_length_um(self) -> float:
        """Dip-setting coherence length for the configured scheme.

        Five-fold post-selection heralds through the 1550 nm filters,
        narrowing the effective signal bandwidth and widening the dip.
        """
        if self.scheme.kind == "fivefold":
            eff = optics.heralded_bandwidth(self.signal_filter,
                                            self.herald_filter,
                                            self.pump_filter)
            return optics.coherence_length(eff)
        return optics.coherence_length(self.signal_filter)

    def overlap_at(self, delay_um: float) -> float:
        ctx = DistinguishabilityContext(
            delay_um=delay_um,
            coherence_length_um=self.coherence_length_um(),
            polarization_angle_rad=self.polarization_angle_rad,
            spectral_mismatch=self.spectral_mismatch,
        )
        return optics.overlap_amplitude(ctx)

    def digest(self) -> str:
        """Stable content hash of the configuration."""
        payload = {
            "sources": [self.source1.zeta, self.source2.zeta],
            "signal_filter": [self.signal_filter.center_nm, self.signal_filter.fwhm_nm],
            "herald_filter": [self.herald_filter.center_nm, self.herald_filter.fwhm_nm],
            "pump_filter": [self.pump_filter.center_nm, self.pump_filter.fwhm_nm],
            "detectors": {r: [d.eta, d.dark_prob]
                          for r, d in sorted(self.detectors.items())},
            "scheme": self.scheme.kind,
            "delays_um": list(self.delays_um),
            "pulses_per_point": self.pulses_per_point,
            "seed": self.seed,
            "pulse_rate_hz": self.pulse_rate_hz,
            "collection_efficiency": self.collection_efficiency,
            "polarization_angle_rad": self.polarization_angle_rad,
            "spectral_mismatch": self.spectral_mismatch,
            "max_pairs": self.max_pairs,
            "small_eta": self.small_eta,
        }
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class DipCurve:
    """Sampled (delay, rate, error) points with provenance metadata."""

    delays_um: Tuple[float, ...]
    rates_hz: Tuple[float, ...]
    errors_hz: Tuple[float, ...]
    scheme: str = "threefold"
    mode: str = "analytic"
    config_digest: str = ""

    def __post_init__(self):
        if not (len(self.delays_um) == len(self.rates_hz) == len(self.errors_hz)):
            raise ValueError("curve arrays must have equal lengths")
        if any(r < 0 for r in self.rates_hz) or any(e < 0 for e in self.errors_hz):
            raise ValueError("rates and errors must be non-negative")

    def __len__(self) -> int:
        return len(self.delays_um)


def analytic_visibility_threefold() -> float:
    """Ideal two-pair dip visibility without post-selection."""
    return 1.0 / 3.0


def analytic_visibility_fivefold_max(p: float) -> float:
    """Post-selected visibility ceiling (1+8P)/(1+12P) from triple-pair
    spurious coincidences; validated for P <= 0.2."""
    if not 0.0 <= p <= 0.2:
        raise ValueError("pair probability outside validated range [0, 0.2]")
    return (1.0 + 8.0 * p) / (1.0 + 12.0 * p)


def _pair_configs(cfg: ExperimentConfig) -> List[Tuple[int, int, float]]:
    """Truncated (n1, n2) configurations with renormalized probabilities."""
    raw = []
    for n1 in range(cfg.max_pairs + 1):
        for n2 in range(cfg.max_pairs + 1 - n1):
            p = (pdc.pair_number_distribution(cfg.source1, n1)
                 * pdc.pair_number_distribution(cfg.source2, n2))
            raw.append((n1, n2, p))
    z = sum(p for _, _, p in raw)
    return [(n1, n2, p / z) for n1, n2, p in raw]


def _pattern_probs(n1: int, n2: int, overlap: float,
                   registry: fock.ModeRegistry) -> Dict[Tuple[int, ...], float]:
    """Output photon-count pattern distribution over (c, d, herald1, herald2)."""
    if n1 == 0 and n2 == 0:
        return {(0, 0, 0, 0): 1.0}
    state = pdc.pair_configuration_state(registry, n1, n2, overlap)
    out = fock.apply_beamsplitter(state)
    grouping = fock.spatial_grouping(registry, _GROUP_ORDER)
    return fock.mode_probabilities(out, grouping)


def _coincidence_weight(pattern: Tuple[int, ...], cfg: ExperimentConfig,
                        detectors: Mapping[str, DetectorModel]) -> float:
    """Per-pattern detection weight for the configured scheme.

    Exact mode multiplies threshold click probabilities. In small-eta
    mode each click is weighted n * eta (the eta -> 0 limit used for the
    idealized visibility benchmarks); dark counts are ignored there.
    """
    weight = 1.0
    for group, n in zip(_GROUP_ORDER, pattern):
        role = _ROLE_OF_GROUP[group]
        if role not in cfg.scheme.roles:
            continue
        det = detectors[role]
        if cfg.small_eta:
            weight *= n * det.eta
        else:
            weight *= detect.click_probability(n, det)
        if weight == 0.0:
            return 0.0
    return weight


def _coincidence_prob_per_pulse(cfg: ExperimentConfig, delay_um: float,
                                registry: fock.ModeRegistry,
                                detectors: Mapping[str, DetectorModel]) -> float:
    m = cfg.overlap_at(delay_um)
    total = 0.0
    for n1, n2, p in _pair_configs(cfg):
        if p == 0.0:
            continue
        patterns = _pattern_probs(n1, n2, m, registry)
        for pattern, q in patterns.items():
            w = _coincidence_weight(pattern, cfg, detectors)
            if w > 0.0:
                total += p * q * w
    return total


def dip_curve_analytic(cfg: ExperimentConfig) -> DipCurve:
    """Closed-form expected coincidence rate at every delay point."""
    registry = fock.standard_registry(n_max=2 * cfg.max_pairs)
    detectors = cfg.effective_detectors()
    rates = [cfg.pulse_rate_hz
             * _coincidence_prob_per_pulse(cfg, d, registry, detectors)
             for d in cfg.delays_um]
    return DipCurve(delays_um=tuple(cfg.delays_um),
                    rates_hz=tuple(rates),
                    errors_hz=(0.0,) * len(cfg.delays_um),
                    scheme=cfg.scheme.kind, mode="analytic",
                    config_digest=cfg.digest())


def _mc_point(cfg: ExperimentConfig, point_index: int,
              registry: fock.ModeRegistry,
              detectors: Mapping[str, DetectorModel]) -> Tuple[float, float]:
    """Simulate one delay point; returns (rate_hz, error_hz).

    Sampling is hierarchical but distribution-exact: pair counts per
    pulse, then a multinomial over output patterns per configuration,
    then binomial detector thinning with the pattern's click product.
    """
    if cfg.small_eta:
        raise ValueError("Monte Carlo mode requires finite efficiencies")
    delay = cfg.delays_um[point_index]
    m = cfg.overlap_at(delay)
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(point_index,))))
    n_pulses = cfg.pulses_per_point
    n1, n2 = pdc.sample_pair_count_arrays(cfg.source1, cfg.source2,
                                          n_pulses, rng)
    # Condition on the truncation (matches the analytic renormalization).
    over = n1 + n2 > cfg.max_pairs
    while over.any():
        r1, r2 = pdc.sample_pair_count_arrays(cfg.source1, cfg.source2,
                                              int(over.sum()), rng)
        n1[over], n2[over] = r1, r2
        over = n1 + n2 > cfg.max_pairs

    coincidences = 0
    base = cfg.max_pairs + 1
    group_counts = np.bincount(n1 * base + n2, minlength=base * base)
    for code in range(base * base):
        n_group = int(group_counts[code])
        if n_group == 0:
            continue
        k1, k2 = divmod(code, base)
        patterns = _pattern_probs(k1, k2, m, registry)
        keys = sorted(patterns)
        probs = np.array([patterns[k] for k in keys])
        probs = probs / probs.sum()
        draws = rng.multinomial(n_group, probs)
        for key, n_pat in zip(keys, draws):
            if n_pat == 0:
                continue
            p_click = 1.0
            for group, n in zip(_GROUP_ORDER, key):
                role = _ROLE_OF_GROUP[group]
                if role in cfg.scheme.roles:
                    p_click *= detect.click_probability(n, detectors[role])
            if p_click > 0.0:
                coincidences += int(rng.binomial(int(n_pat), p_click))
    p_hat = coincidences / n_pulses
    rate = p_hat * cfg.pulse_rate_hz
    err = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n_pulses) * cfg.pulse_rate_hz
    return rate, err


def dip_curve_mc(cfg: ExperimentConfig) -> DipCurve:
    """Monte Carlo delay scan; deterministic per (seed, point index)."""
    registry = fock.standard_registry(n_max=2 * cfg.max_pairs)
    detectors = cfg.effective_detectors()
    rates, errors = [], []
    for i in range(len(cfg.delays_um)):
        rate, err = _mc_point(cfg, i, registry, detectors)
        rates.append(rate)
        errors.append(err)
    return DipCurve(delays_um=tuple(cfg.delays_um),
                    rates_hz=tuple(rates),
                    errors_hz=tuple(errors),
                    scheme=cfg.scheme.kind, mode="mc",
                    config_digest=cfg.digest())


def signal_singles_probabilities(cfg: ExperimentConfig) -> Dict[str, float]:
    """Per-gate signal-only click probability of each scheme detector,
    evaluated far outside the dip (overlap 0)."""
    registry = fock.standard_registry(n_max=2 * cfg.max_pairs)
    detectors = cfg.effective_detectors()
    nodark = {role: DetectorModel(d.name, eta=d.eta, dark_prob=0.0)
              for role, d in detectors.items()}
    singles = {role: 0.0 for role in cfg.scheme.roles}
    for n1, n2, p in _pair_configs(cfg):
        patterns = _pattern_probs(n1, n2, 0.0, registry)
        for pattern, q in patterns.items():
            for group, n in zip(_GROUP_ORDER, pattern):
                role = _ROLE_OF_GROUP[group]
                if role in singles:
                    singles[role] += p * q * detect.click_probability(
                        n, nodark[role])
    return singles


def accidental_floor_hz(cfg: ExperimentConfig) -> float:
    """Delay-independent accidental-coincidence rate estimate."""
    if cfg.small_eta:
        return 0.0
    singles = signal_singles_probabilities(cfg)
    per_gate = detect.accidental_rate(cfg.scheme, cfg.effective_detectors(),
                                      singles)
    return per_gate * cfg.pulse_rate_hz
