"""Source models, checked against an independent event-level enumeration of
the window-by-window multiplexing process."""

import math
from dataclasses import replace

import numpy as np
import pytest

from _oracles import enumerate_mux_output
from subshot.pmf import moments, poisson_pmf
from subshot.sources import (
    Coherent,
    Fock,
    MuxParams,
    herald_click_probability,
    heralded_pair_pmf,
    make_multiplexed,
    mux_output_pmf,
    source_mean,
    source_pmf,
    sync_probability,
    tune_pair_mean,
)


def params(m=2, mu=0.2, herald=0.5, stage=0.95, optics=0.9):
    return MuxParams(
        stages=m,
        pair_mean=mu,
        herald_eff=herald,
        stage_transmission=stage,
        optics_transmission=optics,
    )


class TestMuxParams:
    def test_window_count(self):
        assert params(m=3).window_count == 8

    def test_network_transmission(self):
        assert params(m=2, stage=0.9).network_transmission == pytest.approx(0.81)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"m": 0},
            {"mu": -0.1},
            {"herald": 1.2},
            {"stage": -0.01},
            {"optics": 2.0},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            params(**kwargs)


class TestHeraldModel:
    def test_click_probability_closed_form_matches_series(self):
        p = params(mu=0.7, herald=0.4)
        pois = poisson_pmf(0.7)
        series = sum(
            pois.prob(n) * (1.0 - 0.6**n) for n in range(1, pois.n_max + 1)
        )
        assert herald_click_probability(p) == pytest.approx(series, abs=1e-12)

    def test_conditional_pmf_normalized_and_zero_at_vacuum(self):
        cond = heralded_pair_pmf(params(mu=0.8, herald=0.6))
        assert cond.prob(0) == 0.0
        assert cond.total_mass() == pytest.approx(1.0, abs=1e-12)

    def test_sync_probability_two_windows(self):
        p = params(m=1, mu=0.5, herald=0.5)
        p_w = herald_click_probability(p)
        assert sync_probability(p) == pytest.approx(1 - (1 - p_w) ** 2, abs=1e-15)


class TestMuxOutput:
    def test_no_pump_gives_vacuum(self):
        out = mux_output_pmf(params(mu=0.0))
        assert out.n_max == 0 and out.prob(0) == 1.0

    def test_no_heralds_gives_vacuum(self):
        out = mux_output_pmf(params(herald=0.0))
        assert out.n_max == 0 and out.prob(0) == 1.0

    def test_ideal_limit_is_zero_truncated_poisson(self):
        """With lossless optics, perfect heralding and a strong pump the
        output collapses to a Poisson conditioned on n >= 1."""
        out = mux_output_pmf(params(m=2, mu=8.0, herald=1.0, stage=1.0, optics=1.0))
        pois = poisson_pmf(8.0)
        expected = np.array(pois.probs, copy=True)
        expected[0] = 0.0
        expected /= -math.expm1(-8.0)
        n = min(out.n_max, len(expected) - 1)
        np.testing.assert_allclose(out.probs[1 : n + 1], expected[1 : n + 1], atol=1e-9)
        assert out.prob(0) == pytest.approx(math.exp(-8.0) ** 4, rel=1e-6)

    @pytest.mark.parametrize("m", [1, 2, 3])
    @pytest.mark.parametrize("mu", [0.05, 0.2, 0.5])
    def test_matches_event_level_enumeration(self, m, mu):
        """Closed-form pipeline equals the brute-force window walk."""
        p = params(m=m, mu=mu, herald=0.5, stage=0.95, optics=0.9)
        expected = enumerate_mux_output(m, mu, 0.5, 0.95, 0.9)
        out = mux_output_pmf(p)
        got = np.zeros(len(expected))
        got[: out.n_max + 1] = out.probs[: len(expected)]
        np.testing.assert_allclose(got, expected, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("m", [1, 3, 5])
    @pytest.mark.parametrize("mu", [0.05, 0.3, 1.0])
    @pytest.mark.parametrize("herald", [0.75, 0.9])
    def test_sub_poissonian(self, m, mu, herald):
        out = moments(mux_output_pmf(params(m=m, mu=mu, herald=herald)))
        assert out.fano < 1.0

    def test_poor_heralding_turns_bunched(self):
        """With scarce windows and weak heralding the output is mostly vacuum
        plus occasional multi-photon bursts, i.e. super-Poissonian.  At one
        stage and small pump the sub-Poissonian property needs a herald
        efficiency above 2/3 (herald gain 2h must beat the multi-photon
        slope 2 - h)."""
        out = moments(mux_output_pmf(params(m=1, mu=1.0, herald=0.25)))
        assert out.fano > 1.0
        small_pump = moments(mux_output_pmf(params(m=1, mu=0.02, herald=0.65)))
        assert small_pump.fano > 1.0

    def test_mean_strictly_increasing_in_pump(self):
        mus = np.linspace(0.01, 2.0, 15)
        means = [moments(mux_output_pmf(params(mu=m))).mean for m in mus]
        assert np.all(np.diff(means) > 0)

    def test_mean_and_fano_monotone_in_stage_transmission(self):
        """More per-stage loss never raises the mean or lowers the Fano factor."""
        stages = np.linspace(0.5, 1.0, 8)
        outs = [moments(mux_output_pmf(params(stage=s))) for s in stages]
        means = [o.mean for o in outs]
        fanos = [o.fano for o in outs]
        assert np.all(np.diff(means) > 0)
        assert np.all(np.diff(fanos) <= 1e-12)


class TestTunePairMean:
    def test_nonpositive_target_rejected(self):
        with pytest.raises(ValueError):
            tune_pair_mean(params(), 0.0)

    def test_collapsed_model_fixed_point(self):
        """With every efficiency at 1, the tuned pump reproduces the target
        through the analytic mean of the click-conditioned Poisson mixture."""
        p = params(m=1, herald=1.0, stage=1.0, optics=1.0)
        mu = tune_pair_mean(p, 1.0)
        p_w = -math.expm1(-mu)
        p_sync = 1 - (1 - p_w) ** 2
        conditional_mean = mu / p_w  # E[n | n >= 1] for a Poisson
        assert p_sync * conditional_mean == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("target", [0.1, 0.5, 1.0])
    @pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 6])
    def test_residuals(self, target, m):
        p = params(m=m, herald=0.9, stage=0.88)
        mu = tune_pair_mean(p, target)
        achieved = moments(mux_output_pmf(replace(p, pair_mean=mu))).mean
        assert abs(achieved - target) < 1e-9

    def test_small_target_forces_small_pump(self):
        assert tune_pair_mean(params(), 1e-4) < 1e-3


class TestSourcePmf:
    def test_coherent_is_poisson_at_sample(self):
        got = source_pmf(Coherent(1.0))
        expected = poisson_pmf(1.0)
        np.testing.assert_allclose(got.probs, expected.probs, atol=0)

    def test_fock_single_photon(self):
        np.testing.assert_array_equal(source_pmf(Fock(1)).probs, [0.0, 1.0])

    def test_multiplexed_tuned_mean(self):
        src = make_multiplexed(3, 0.5)
        assert source_mean(src) == pytest.approx(0.5, abs=1e-9)

    def test_negative_coherent_rejected(self):
        with pytest.raises(ValueError):
            Coherent(-1.0)

    def test_fractional_fock_rejected(self):
        with pytest.raises(ValueError):
            Fock(1.5)

    def test_unknown_kind_rejected(self):
        with pytest.raises(TypeError):
            source_pmf(object())
