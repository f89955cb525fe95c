"""Light-source models.

Three sources feed the transmission measurement: a coherent beam (Poissonian),
an ideal Fock state, and a heralded single-photon source whose output is
synchronized to a clock by a binary-divided time-multiplexing network.

The multiplexed source works on a pair emitter (e.g. parametric
down-conversion) running over 2**stages temporal windows per clock period.
Detecting the idler photon of a pair heralds its signal twin; the network then
delays the signal so it leaves on the clock tick.  Raising the pump increases
the herald rate but also the multi-photon contamination, so the pump strength
that realizes a wanted mean photon number at the sample is found numerically
(`tune_pair_mean`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from subshot.pmf import (
    DEFAULT_TRUNCATION_EPS,
    Pmf,
    apply_loss,
    fock_pmf,
    moments,
    poisson_pmf,
    poisson_support,
    vacuum_pmf,
)

# Calibrated defaults: herald-arm detection probability per idler photon and
# signal transmission per delay stage.  Both are plain configuration values;
# no model logic depends on these particular numbers.
DEFAULT_HERALD_EFF = 0.9
DEFAULT_STAGE_TRANSMISSION = 0.88
DEFAULT_OPTICS_TRANSMISSION = 0.9


@dataclass(frozen=True)
class MuxParams:
    """Parameters of the time-multiplexed heralded single-photon source.

    stages: number of binary delay stages; the network addresses 2**stages
        temporal windows per clock period.
    pair_mean: mean photon-pair number per temporal window.
    herald_eff: probability that an idler photon produces a herald click.
    stage_transmission: signal transmission of one delay stage; the signal
        crosses every stage (delay or bypass), so the network transmission is
        stage_transmission**stages.
    optics_transmission: source-to-sample optical transmission.
    """

    stages: int
    pair_mean: float
    herald_eff: float = DEFAULT_HERALD_EFF
    stage_transmission: float = DEFAULT_STAGE_TRANSMISSION
    optics_transmission: float = DEFAULT_OPTICS_TRANSMISSION

    def __post_init__(self):
        if self.stages != int(self.stages) or self.stages < 1:
            raise ValueError(f"stages must be an integer >= 1, got {self.stages}")
        if self.pair_mean < 0:
            raise ValueError(f"pair_mean must be >= 0, got {self.pair_mean}")
        for name in ("herald_eff", "stage_transmission", "optics_transmission"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    @property
    def window_count(self) -> int:
        return 2 ** int(self.stages)

    @property
    def network_transmission(self) -> float:
        return self.stage_transmission ** int(self.stages)


@dataclass(frozen=True)
class Coherent:
    """Coherent beam; `mean` is the mean photon number at the sample plane."""

    mean: float

    def __post_init__(self):
        if self.mean < 0:
            raise ValueError(f"coherent mean must be >= 0, got {self.mean}")


@dataclass(frozen=True)
class Fock:
    """Ideal number state with exactly `photons` photons, lossless delivery."""

    photons: int

    def __post_init__(self):
        if self.photons != int(self.photons) or self.photons < 0:
            raise ValueError(f"photons must be a non-negative integer, got {self.photons}")


@dataclass(frozen=True)
class Multiplexed:
    """Time-multiplexed heralded single-photon source."""

    params: MuxParams


Source = Coherent | Fock | Multiplexed


def herald_click_probability(params: MuxParams) -> float:
    """Per-window probability that at least one idler is detected.

    Closed form of sum_{n>=1} Poisson(n; mu) * (1 - (1 - herald_eff)^n).
    """
    return -math.expm1(-params.pair_mean * params.herald_eff)


def sync_probability(params: MuxParams) -> float:
    """Probability that any of the 2**stages windows heralds in a period."""
    p_w = herald_click_probability(params)
    if p_w == 0.0:
        return 0.0
    return -math.expm1(params.window_count * math.log1p(-p_w))


def heralded_pair_pmf(params: MuxParams, eps: float = DEFAULT_TRUNCATION_EPS) -> Pmf:
    """Pair-number distribution in the selected window, given a herald click.

    P(n | click) = Poisson(n; mu) * (1 - (1 - herald_eff)^n) / p_click for
    n >= 1.  Windows are identical and independent, so the conditional law does
    not depend on which window clicked.
    """
    p_w = herald_click_probability(params)
    if p_w == 0.0:
        raise ValueError("no herald clicks: pair_mean and herald_eff must be > 0")
    mu, h = params.pair_mean, params.herald_eff
    # Conditional tail <= Poisson tail / p_w, so aim the Poisson cut below
    # eps * p_w with the usual headroom factor.
    n_max = poisson_support(mu, max(eps * p_w * 1e-4, 1e-280))
    ns = np.arange(n_max + 1)
    weights = -np.expm1(ns * math.log1p(-h)) if h < 1.0 else (ns > 0).astype(float)
    probs = stats.poisson.pmf(ns, mu) * weights / p_w
    return Pmf.from_probs(probs)


def mux_output_pmf(params: MuxParams, eps: float = DEFAULT_TRUNCATION_EPS) -> Pmf:
    """Photon-number distribution delivered to the sample plane.

    Pipeline: in each period the source either synchronizes (some window
    heralded) and emits the heralded-window pair distribution thinned by the
    delay network, or it emits vacuum; the mixture is finally thinned by the
    source-to-sample optics.
    """
    if params.pair_mean == 0.0 or params.herald_eff == 0.0:
        return vacuum_pmf()
    p_sync = sync_probability(params)
    conditional = heralded_pair_pmf(params, eps)
    through_network = apply_loss(conditional, params.network_transmission)
    mixed = np.array(through_network.probs, copy=True)
    mixed *= p_sync
    mixed[0] += 1.0 - p_sync
    synchronized = Pmf(mixed, p_sync * through_network.cutoff_mass)
    return apply_loss(synchronized, params.optics_transmission)


def tune_pair_mean(
    params: MuxParams,
    target_mean: float,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> float:
    """Pump strength whose output mean at the sample equals `target_mean`.

    The output mean is continuous and strictly increasing in the pair mean, so
    plain bisection converges; it stops once the mean residual drops below
    `tol`.  The `pair_mean` field of `params` is ignored.
    """
    if target_mean <= 0:
        raise ValueError(f"target mean must be > 0, got {target_mean}")

    def mean_at(mu: float) -> float:
        return moments(mux_output_pmf(replace(params, pair_mean=mu))).mean

    lo, hi = 0.0, max(1.0, target_mean)
    for _ in range(200):
        if mean_at(hi) >= target_mean:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise RuntimeError(f"could not bracket target mean {target_mean}")

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        residual = mean_at(mid) - target_mean
        if abs(residual) < tol:
            return mid
        if residual < 0:
            lo = mid
        else:
            hi = mid
    raise RuntimeError(
        f"pump tuning did not reach residual {tol} within {max_iter} bisection steps"
    )


def make_multiplexed(
    stages: int,
    target_mean: float,
    herald_eff: float = DEFAULT_HERALD_EFF,
    stage_transmission: float = DEFAULT_STAGE_TRANSMISSION,
    optics_transmission: float = DEFAULT_OPTICS_TRANSMISSION,
) -> Multiplexed:
    """Multiplexed source tuned to `target_mean` photons at the sample."""
    params = MuxParams(
        stages=stages,
        pair_mean=0.0,
        herald_eff=herald_eff,
        stage_transmission=stage_transmission,
        optics_transmission=optics_transmission,
    )
    return Multiplexed(replace(params, pair_mean=tune_pair_mean(params, target_mean)))


def source_pmf(source: Source, eps: float = DEFAULT_TRUNCATION_EPS) -> Pmf:
    """Photon-number distribution at the sample plane.

    For the coherent source, upstream optical loss only rescales a Poisson
    distribution, so its mean is specified at the sample directly.  The Fock
    source is delivered lossless by convention.
    """
    if isinstance(source, Coherent):
        return poisson_pmf(source.mean, eps) if source.mean > 0 else vacuum_pmf()
    if isinstance(source, Fock):
        return fock_pmf(source.photons)
    if isinstance(source, Multiplexed):
        return mux_output_pmf(source.params, eps)
    raise TypeError(f"unknown source kind: {source!r}")


def source_mean(source: Source) -> float:
    """Mean photon number at the sample plane."""
    return moments(source_pmf(source)).mean
