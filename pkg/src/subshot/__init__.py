"""Sub-shot-noise transmission measurement simulator.

Models coherent, Fock and time-multiplexed heralded single-photon sources,
evaluates transmission estimators under number-resolving and threshold
detection (exactly and by Monte Carlo), and runs the benchmark sweeps behind
the `subshot` command line tool.
"""

from subshot.pmf import (
    DEFAULT_TRUNCATION_EPS,
    Moments,
    Pmf,
    apply_loss,
    convolve,
    fock_pmf,
    iid_sum,
    moments,
    poisson_pmf,
    sample,
    vacuum_pmf,
)
from subshot.sources import (
    Coherent,
    Fock,
    Multiplexed,
    MuxParams,
    Source,
    herald_click_probability,
    heralded_pair_pmf,
    make_multiplexed,
    mux_output_pmf,
    source_mean,
    source_pmf,
    sync_probability,
    tune_pair_mean,
)
from subshot.detection import Channel, click_probability, nr_detected_pmf
from subshot.estimators import (
    Detector,
    EstimatorReport,
    EstimatorSpec,
    RelativeMseConvention,
    asymptotic_relative_mse_floor,
    estimate_nr,
    estimate_threshold,
    exact_report,
    exact_report_nr,
    exact_report_threshold,
    make_estimator_spec,
    relative_mse_percent,
    snl_ratio,
    snl_report,
)
from subshot.montecarlo import (
    FluctuationConfig,
    McEstimate,
    McSummary,
    NegativeDraws,
    PumpRedraw,
    fluctuation_study,
    mc_estimate,
)

__version__ = "0.1.0"
