"""Pulsed parametric-down-conversion source statistics.

A single pulsed PDC source emits n photon pairs per pulse with the
thermal (geometric) law p(n) = (1 - lambda) * lambda^n where
lambda = tanh^2(zeta) and zeta is the squeezing parameter. The joint
two-source state per pulse is the coherent superposition over pair
configurations with amplitudes tanh(zeta1)^n1 * tanh(zeta2)^n2.

Each source's 1310 nm photon enters a beam-splitter input (source 1 ->
a, source 2 -> b) while its 1550 nm twin goes to the source's dedicated
herald channel. The temporal sublabel of the source-2 photons is set by
the distinguishability overlap amplitude supplied by the optics layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import fock
from .fock import Mode, ModeRegistry, PureState


@dataclass(frozen=True)
class SourceParams:
    """Squeezing parameter and derived per-pulse pair statistics.

    With smallzeta=True, construction additionally checks that the exact
    geometric ratio lambda = tanh^2(zeta) stays within 5% of the
    small-squeezing approximation zeta^2.
    """

    zeta: float
    smallzeta: bool = False

    def __post_init__(self):
        if self.zeta < 0:
            raise ValueError("zeta must be non-negative")
        if self.smallzeta and self.zeta > 0:
            rel = abs(self.pair_probability - self.zeta ** 2) / self.zeta ** 2
            if rel >= 0.05:
                raise ValueError(
                    f"smallzeta mode: tanh^2(zeta) deviates from zeta^2 "
                    f"by {rel:.1%} (>= 5%)")

    @classmethod
    def from_pair_probability(cls, p: float, smallzeta: bool = False
                              ) -> "SourceParams":
        if not 0.0 <= p < 1.0:
            raise ValueError("pair probability must lie in [0, 1)")
        return cls(zeta=math.atanh(math.sqrt(p)), smallzeta=smallzeta)

    @property
    def gamma(self) -> float:
        """Per-pair amplitude ratio tanh(zeta)."""
        return math.tanh(self.zeta)

    @property
    def lam(self) -> float:
        """Per-pair probability ratio tanh^2(zeta) of the geometric law."""
        return self.gamma ** 2

    @property
    def g(self) -> float:
        return math.log(math.cosh(self.zeta))

    @property
    def pair_probability(self) -> float:
        """Probability P of one pair per pulse; defined as lambda."""
        return self.lam


@dataclass(frozen=True)
class PairCountSample:
    """Pairs created in each source during one pulse."""

    n1: int
    n2: int


def pair_number_distribution(params: SourceParams, n: int) -> float:
    """Probability of creating exactly n pairs in one pulse."""
    if n < 0:
        raise ValueError("pair number must be non-negative")
    lam = params.lam
    return (1.0 - lam) * lam ** n


def pair_configuration_state(registry: ModeRegistry, n1: int, n2: int,
                             overlap: complex = 1.0) -> PureState:
    """Normalized Fock state for a fixed (n1, n2) pair configuration.

    Source-1 photons sit in a(matched); each source-2 photon occupies the
    single wave packet m*b(matched) + sqrt(1-|m|^2)*b(orthogonal) where
    m is the overlap amplitude. Heralds track the pair numbers exactly.
    """
    if n1 < 0 or n2 < 0:
        raise ValueError("pair numbers must be non-negative")
    m = complex(overlap)
    if abs(m) > 1.0 + 1e-12:
        raise ValueError("overlap amplitude must satisfy |m| <= 1")
    ortho = math.sqrt(max(0.0, 1.0 - abs(m) ** 2))
    state = PureState.vacuum(registry)
    if n1 > 0:
        state = fock.apply_creation(state, Mode("a", "matched", "H"), n1)
        state = fock.apply_creation(state, Mode("herald1", "matched", "H"), n1)
    if n2 > 0:
        state = fock.apply_superposed_creation(
            state,
            [(Mode("b", "matched", "H"), m),
             (Mode("b", "orthogonal", "H"), ortho)],
            n2)
        state = fock.apply_creation(state, Mode("herald2", "matched", "H"), n2)
    return state.normalized()


def joint_input_state(s1: SourceParams, s2: SourceParams, max_pairs: int,
                      registry: ModeRegistry | None = None,
                      overlap: complex = 1.0) -> PureState:
    """Coherent two-source input state truncated at max_pairs total pairs.

    Pair configurations (n1, n2) carry amplitudes
    tanh(zeta1)^n1 * tanh(zeta2)^n2 before normalization.
    """
    if max_pairs < 0:
        raise ValueError("max_pairs must be non-negative")
    if registry is None:
        registry = fock.standard_registry(n_max=2 * max_pairs)
    if 2 * max_pairs > registry.n_max:
        raise fock.TruncationError(
            f"2*max_pairs={2 * max_pairs} exceeds N_max={registry.n_max}")
    terms = {}
    for n1 in range(max_pairs + 1):
        for n2 in range(max_pairs + 1 - n1):
            amp = s1.gamma ** n1 * s2.gamma ** n2
            if amp == 0.0 and (n1 > 0 or n2 > 0):
                continue
            ket = pair_configuration_state(registry, n1, n2, overlap)
            for occ, a in ket.terms.items():
                terms[occ] = terms.get(occ, 0.0) + amp * a
    return PureState(registry, terms).normalized()


def sample_pair_counts(s1: SourceParams, s2: SourceParams,
                       rng: Union[int, np.random.Generator]
                       ) -> PairCountSample:
    """Draw one pulse's pair counts; geometric in each source.

    Accepts either a seed or a Generator; a given seed always yields the
    same sample on every platform.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n1 = _sample_geometric(s1.lam, rng)
    n2 = _sample_geometric(s2.lam, rng)
    return PairCountSample(n1=n1, n2=n2)


def _sample_geometric(lam: float, rng: np.random.Generator) -> int:
    if lam == 0.0:
        return 0
    # numpy's geometric counts trials up to the first success.
    return int(rng.geometric(1.0 - lam)) - 1


def sample_pair_count_arrays(s1: SourceParams, s2: SourceParams, size: int,
                             rng: np.random.Generator):
    """Vectorized pulse sampling used by the Monte Carlo runner."""
    def draw(lam):
        if lam == 0.0:
            return np.zeros(size, dtype=np.int64)
        return rng.geometric(1.0 - lam, size=size).astype(np.int64) - 1

    return draw(s1.lam), draw(s2.lam)
