"""Symbol calculus tests: closed-form values, boundedness of the
preconditioned product, predicted scalings, and the flat-strip harness."""
from __future__ import annotations

import numpy as np
import pytest

from cutlgf import symbols
from cutlgf.errors import DivergentMode


def test_stiffness_symbol_values():
    assert symbols.stiffness_symbol(np.pi, 0.1, 0.0) == pytest.approx(40.0)
    assert symbols.stiffness_symbol(0.0, 0.1, 0.0) == 0.0
    assert symbols.stiffness_symbol(0.0, 0.1, 7.0) == pytest.approx(0.7)


def test_decay_rate_identity():
    theta = np.linspace(1e-6, np.pi, 500)
    for sigma, h in ((0.0, 1.0), (4.0, 1 / 64), (0.5, 1 / 128)):
        a = symbols.normal_decay_rate(theta, h, sigma)
        assert np.abs(np.cosh(a) - (2 - np.cos(theta) + sigma * h * h / 2)).max() \
            < 1e-14


def test_decay_rate_endpoints():
    assert symbols.normal_decay_rate(np.pi, 1.0, 0.0) \
        == pytest.approx(np.arccosh(3.0), abs=1e-14)
    small = np.array([1e-4, 1e-3, 1e-2])
    ratio = symbols.normal_decay_rate(small, 1.0, 0.0) / small
    assert np.abs(ratio - 1.0).max() < 1e-4


def test_layer_symbol_zero_mode_diverges_without_screening():
    with pytest.raises(DivergentMode):
        symbols.layer_symbols(np.array([0.0, 0.1]), 0.01, 0.0)
    s_hat, d_hat = symbols.layer_symbols(np.array([0.0]), 0.01, 4.0)
    assert np.isfinite(s_hat).all() and np.isfinite(d_hat).all()


def test_double_layer_symbol_is_order_zero():
    theta = symbols.resolved_grid(1 / 256)
    _, d_hat = symbols.layer_symbols(theta, 1 / 256, 0.0)
    assert 0.25 < d_hat.min() and d_hat.max() <= 1.0


def test_preconditioned_product_is_flat():
    # k * s^2 / h bounded between fixed constants on the resolved modes,
    # uniformly in h: the single-layer congruence flattens the spectrum
    for h in (1 / 128, 1 / 512, 1 / 1024):
        theta = symbols.resolved_grid(h)
        k = symbols.stiffness_symbol(theta, h, 0.0)
        s_hat, _ = symbols.layer_symbols(theta, h, 0.0)
        prod = k * s_hat ** 2 / h
        assert prod.min() > 0.12
        assert prod.max() < 0.26


def test_predicted_condition_single_layer_is_bounded():
    for h in (1 / 128, 1 / 256, 1 / 512, 1 / 1024):
        assert symbols.predicted_condition("F-single", h) < 20.0


@pytest.mark.parametrize("mode", ["E", "F-double"])
def test_predicted_condition_grows_second_order(mode):
    for h in (1 / 128, 1 / 256):
        r1 = symbols.predicted_condition(mode, h)
        r2 = symbols.predicted_condition(mode, h / 2)
        assert r2 / r1 == pytest.approx(4.0, rel=0.3)


def test_matched_screening_beats_mismatched():
    h = 1 / 256
    matched = symbols.predicted_condition("F-single", h, 10.0, 10.0)
    mismatched = symbols.predicted_condition("F-single", h, 10.0, 0.1)
    assert matched < mismatched
    assert matched < 25.0


def test_symbol_profile_fields():
    prof = symbols.symbol_profile(1 / 64, 2.0, 3.0, n_grid=128)
    assert prof.theta_grid.shape == (128,)
    assert (prof.k_hat > 0).all() and (prof.s_hat > 0).all()
    assert np.isfinite(prof.d_hat).all()


class TestFlatStripHarness:
    """Measured spectra of operators built from real (periodized) kernel rows
    against the symbol predictions."""

    @pytest.mark.parametrize("kind,mode", [("single", "F-single"),
                                           ("double", "F-double")])
    @pytest.mark.parametrize("sigma_surface", [0.0, 4.0])
    def test_measured_condition_within_factor_three(self, kind, mode,
                                                    sigma_surface):
        for nx in (64, 128, 256):
            h = 1.0 / nx
            measured = symbols.flat_model_condition(
                kind, nx, sigma_bulk=4.0, sigma_surface=sigma_surface)
            predicted = symbols.predicted_condition(
                mode, h, sigma_surface=sigma_surface, sigma_bulk=4.0)
            assert measured / predicted < 3.0
            assert predicted / measured < 3.0

    def test_single_layer_strip_is_mesh_independent(self):
        conds = [symbols.flat_model_condition("single", nx, 4.0, 4.0)
                 for nx in (64, 128, 256)]
        assert max(conds) < 20.0

    def test_double_layer_strip_grows_second_order(self):
        c1 = symbols.flat_model_condition("double", 64, 4.0, 0.0)
        c2 = symbols.flat_model_condition("double", 128, 4.0, 0.0)
        assert c2 / c1 == pytest.approx(4.0, rel=0.35)
