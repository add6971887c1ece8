import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from admissibility_lab.halfspace import (
    NtDSymbol,
    fit_summary_json,
    schrodinger_ntd_symbol,
    schrodinger_root,
    schrodinger_spectral_symbol,
    sweep_and_fit,
    symbol_sup,
    wave_ntd_symbol,
    wave_root,
)
from admissibility_lab.textio import read_rows


class TestSymbols:
    def test_wave_at_origin(self):
        assert wave_ntd_symbol(0.0, 0.0) == pytest.approx(1.0)

    def test_wave_elliptic_regime(self):
        tau = np.geomspace(1e3, 1e6, 5)
        assert np.allclose(np.abs(wave_ntd_symbol(0.0, tau)) * tau, 1.0, rtol=1e-6)

    def test_schrodinger_glancing(self):
        for k in (0.0, 0.5, 7.0):
            assert abs(schrodinger_ntd_symbol(k, k)) == pytest.approx(1.0, rel=1e-14)

    def test_schrodinger_modulus_formula(self):
        k, tau = 3.0, np.linspace(0, 10, 50)
        expect = ((tau**2 - k**2) ** 2 + 1) ** -0.25
        assert np.allclose(np.abs(schrodinger_ntd_symbol(k, tau)), expect, rtol=1e-14)

    def test_root_solves_characteristic_equation(self):
        lam, tau = 7.5, np.linspace(0, 20, 41)
        rho = wave_root(lam, tau)
        assert np.allclose(rho**2, (1 + 1j * lam) ** 2 + tau**2, rtol=1e-13)

    def test_branch_on_random_pairs(self):
        rng = np.random.default_rng(0)
        n = 100_000
        freq = rng.uniform(-1e3, 1e3, n)
        tau = rng.uniform(0, 2e3, n) * rng.random(n) ** 3
        assert np.all(wave_root(freq, tau).real > 0)
        assert np.all(schrodinger_root(np.abs(freq) ** 2, tau).real > 0)
        assert np.all(schrodinger_root(-np.abs(freq), tau).real > 0)

    def test_wave_even_in_frequency(self):
        lam = np.linspace(0, 50, 26)
        tau = np.linspace(0, 60, 26)
        L, T = np.meshgrid(lam, tau)
        assert np.allclose(np.abs(wave_ntd_symbol(L, T)), np.abs(wave_ntd_symbol(-L, T)), rtol=1e-14)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            NtDSymbol("heat", 1.0)


class TestSymbolSup:
    def test_wave_fifty(self):
        assert symbol_sup(NtDSymbol("wave", 50.0)) == pytest.approx(0.1, abs=1e-4)

    def test_schrodinger_ten(self):
        assert symbol_sup(NtDSymbol("schrodinger", 10.0)) == pytest.approx(1.0, abs=1e-6)

    def test_schrodinger_tangential_ten(self):
        assert symbol_sup(NtDSymbol("schrodinger", 10.0), "tau") == pytest.approx(10.0, abs=0.01)

    def test_zero_frequency_is_order_one(self):
        for kind in ("wave", "schrodinger"):
            assert 0.5 <= symbol_sup(NtDSymbol(kind, 0.0)) <= 1.0 + 1e-12

    def test_tau_max_guard(self):
        with pytest.raises(ValueError):
            symbol_sup(NtDSymbol("wave", 50.0), tau_max=150.0)
        with pytest.raises(ValueError):
            symbol_sup(NtDSymbol("wave", 0.0), tau_max=0.0)

    def test_unknown_weight(self):
        with pytest.raises(ValueError):
            symbol_sup(NtDSymbol("wave", 5.0), "tau2")

    @pytest.mark.parametrize("lam", [1.0, 2.0, 10.0, 123.4, 1000.0, -40.0])
    def test_wave_exact_law(self, lam):
        assert symbol_sup(NtDSymbol("wave", lam)) == pytest.approx((2 * abs(lam)) ** -0.5, rel=1e-4)

    def test_refinement_beats_grid(self):
        # brute-force oracle on a fine linear grid around the analytic peak
        lam = 321.0
        tau = np.linspace(lam - 2, lam + 2, 200_001)
        brute = np.abs(wave_ntd_symbol(lam, tau)).max()
        assert symbol_sup(NtDSymbol("wave", lam)) >= brute * (1 - 1e-9)


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(1.0, 2000.0))
def test_wave_exact_law_property(lam):
    assert symbol_sup(NtDSymbol("wave", lam)) == pytest.approx((2 * lam) ** -0.5, rel=1e-4)


@settings(max_examples=50, deadline=None)
@given(k=st.floats(0.0, 100.0))
def test_schrodinger_uniform_bound_property(k):
    assert symbol_sup(NtDSymbol("schrodinger", k)) == pytest.approx(1.0, abs=1e-6)


class TestSweeps:
    def test_wave_l2_slope(self):
        _, fit = sweep_and_fit("wave", "one", np.geomspace(10, 1e3, 24))
        assert fit.slope == pytest.approx(-0.5, abs=0.01)

    def test_wave_h1_slope(self):
        _, fit = sweep_and_fit("wave", "sqrt_1_plus_tau2", np.geomspace(10, 1e3, 24))
        assert fit.slope == pytest.approx(0.5, abs=0.02)

    def test_schrodinger_flat(self):
        _, fit = sweep_and_fit("schrodinger", "one", np.geomspace(1, 30, 16))
        assert fit.slope == pytest.approx(0.0, abs=0.01)

    def test_schrodinger_tangential_against_lambda(self):
        sweep, fit = sweep_and_fit("schrodinger", "tau", np.geomspace(1, 30, 16))
        assert np.allclose(sweep.spectral_parameters, sweep.frequencies**2)
        assert fit.slope == pytest.approx(0.5, abs=0.05)

    def test_elliptic_h1_bounded(self):
        sweep, _ = sweep_and_fit("elliptic", "sqrt_1_plus_tau2", np.geomspace(1, 1e4, 16))
        assert sweep.sups.max() <= 2.0

    def test_elliptic_parameter_sign(self):
        assert schrodinger_spectral_symbol(-4.0, 0.0) == pytest.approx(1 / np.sqrt(4 + 1j))

    def test_grid_guards(self):
        with pytest.raises(ValueError):
            sweep_and_fit("wave", "one", np.geomspace(10, 100, 7))
        with pytest.raises(ValueError):
            sweep_and_fit("wave", "one", np.geomspace(100, 10, 10))

    def test_workers_preserve_order(self):
        g = np.geomspace(10, 1e3, 12)
        a, _ = sweep_and_fit("wave", "one", g, workers=1)
        b, _ = sweep_and_fit("wave", "one", g, workers=4)
        assert np.array_equal(a.sups, b.sups)

    def test_outputs(self, tmp_path):
        sweep, fit = sweep_and_fit("wave", "one", np.geomspace(10, 1e3, 8))
        path = tmp_path / "s.csv"
        sweep.write_csv(path)
        header, rows = read_rows(path)
        assert header == ["freq", "sup", "weight", "kind"]
        assert len(rows) == 8 and rows[0][2:] == ["one", "wave"]
        assert float(rows[3][1]) == sweep.sups[3]
        summary = json.loads(fit_summary_json(fit))
        assert set(summary) == {"slope", "stderr", "window_lo", "window_hi", "n_points"}
