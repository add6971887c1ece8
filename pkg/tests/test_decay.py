import numpy as np
import pytest
from scipy.integrate import dblquad

from admissibility_lab.decay import (
    DECAY_CAVEAT,
    DampedGalerkinSystem,
    classical_data,
    decay_fit,
    dissipation_residual,
    gaussian_coefficients,
    max_energy_increase,
    one_sided_decay_ratio,
    simulate,
    step_implicit_midpoint,
    synthetic_record,
)
from admissibility_lab.rectangle import BoundaryPatch, build_model, full_side
from admissibility_lab.textio import read_rows


def damped_oscillator(beta, lam, t):
    """x'' + beta x' + lam x = 0, x(0) = 1, x'(0) = 0 (underdamped)."""
    a = beta / 2
    om = np.sqrt(lam - a**2)
    x = np.exp(-a * t) * (np.cos(om * t) + a / om * np.sin(om * t))
    v = -np.exp(-a * t) * (lam / om) * np.sin(om * t)
    return x, v


@pytest.fixture(scope="module")
def small_square():
    return build_model(1.0, 1.0, 8)


class TestStep:
    def test_conservative_step(self):
        rng = np.random.default_rng(2)
        sysm = DampedGalerkinSystem(rng.random(20) * 100, np.zeros((20, 20)))
        w, v = rng.standard_normal(20), rng.standard_normal(20)
        (w1, v1), _ = step_implicit_midpoint(sysm, (w, v), 0.05)
        E0, E1 = sysm.energy(w, v), sysm.energy(w1, v1)
        assert abs(E1 - E0) < 1e-12 * E0

    def test_free_drift(self):
        sysm = DampedGalerkinSystem(np.zeros(3), np.zeros((3, 3)))
        w, v = np.array([1.0, -2.0, 0.5]), np.array([0.3, 0.0, -1.0])
        (w1, v1), _ = step_implicit_midpoint(sysm, (w, v), 0.1)
        assert np.array_equal(w1, w + 0.1 * v)
        assert np.array_equal(v1, v)

    def test_damped_oscillator_second_order(self):
        beta, lam = 0.4, 9.0
        sysm = DampedGalerkinSystem([lam], [[beta]])
        errs = []
        for dt in (1e-2, 5e-3):
            rec_state = (np.array([1.0]), np.array([0.0]))
            solver = sysm.midpoint_solver(dt)
            for _ in range(int(round(1 / dt))):
                rec_state, _ = step_implicit_midpoint(sysm, rec_state, dt, solver)
            x, v = damped_oscillator(beta, lam, 1.0)
            errs.append(abs(rec_state[0][0] - x) + abs(rec_state[1][0] - v))
        assert errs[0] < 1e-3
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)

    def test_dt_guard(self):
        sysm = DampedGalerkinSystem([1.0], [[0.0]])
        with pytest.raises(ValueError):
            step_implicit_midpoint(sysm, ([1.0], [0.0]), 0.0)

    def test_system_validation(self):
        with pytest.raises(ValueError):
            DampedGalerkinSystem([-1.0], [[0.0]])
        with pytest.raises(ValueError):
            DampedGalerkinSystem([1.0, 2.0], [[0.0, 1.0], [0.0, 0.0]])


class TestSimulate:
    def test_undamped_conservation(self, small_square):
        sysm = DampedGalerkinSystem.from_rectangle(small_square, full_side(small_square, "S", 0.0))
        rec = simulate(sysm, classical_data(small_square, "low_modes"), 10.0, 1e-3)
        assert rec.steps == 10_000
        assert np.max(np.abs(rec.energies - rec.energies[0])) <= 1e-10 * rec.energies[0]
        assert dissipation_residual(rec, sysm) < 1e-12

    def test_damped_monotone(self, small_square):
        sysm = DampedGalerkinSystem.from_rectangle(small_square, BoundaryPatch("W", 0.2, 0.7, 1.5))
        rec = simulate(sysm, classical_data(small_square), 5.0, 1e-2)
        assert max_energy_increase(rec) <= 1e-8
        assert rec.energies[-1] < rec.energies[0]
        assert np.all(np.diff(rec.times) > 0) and np.all(rec.energies >= 0)

    def test_dissipation_identity(self, small_square):
        sysm = DampedGalerkinSystem.from_rectangle(small_square, full_side(small_square, "S"))
        rec = simulate(sysm, classical_data(small_square), 5.0, 1e-2)
        assert dissipation_residual(rec, sysm) < 1e-12
        # energy lost equals dissipation accumulated
        assert rec.energies[0] - rec.energies[-1] == pytest.approx(rec.cumulative_dissipation[-1], rel=1e-10)

    def test_trapezoid_rule_converges(self):
        sysm = DampedGalerkinSystem([9.0], [[0.4]])
        res = []
        for dt in (2e-2, 1e-2, 5e-3):
            rec = simulate(sysm, ([1.0], [0.0]), 2.0, dt)
            res.append(dissipation_residual(rec, sysm, rule="trapezoid"))
        assert res[0] / res[1] >= 4.0 and res[1] / res[2] >= 4.0

    def test_richardson(self, small_square):
        sysm = DampedGalerkinSystem.from_rectangle(small_square, full_side(small_square, "E"))
        data = classical_data(small_square, "low_modes")
        ET = [simulate(sysm, data, 2.0, dt).energies[-1] for dt in (4e-3, 2e-3, 1e-3)]
        ratio = (ET[0] - ET[1]) / (ET[1] - ET[2])
        assert ratio == pytest.approx(4.0, rel=0.1)

    def test_shape_guard(self, small_square):
        sysm = DampedGalerkinSystem.from_rectangle(small_square, full_side(small_square, "S"))
        with pytest.raises(ValueError):
            simulate(sysm, (np.zeros(3), np.zeros(3)), 1.0, 0.1)

    def test_csv(self, tmp_path, small_square):
        sysm = DampedGalerkinSystem.from_rectangle(small_square, full_side(small_square, "S"))
        rec = simulate(sysm, classical_data(small_square), 0.1, 1e-2)
        rec.write_csv(tmp_path / "t.csv")
        header, rows = read_rows(tmp_path / "t.csv")
        assert header == ["t", "E", "cumulative_dissipation"]
        assert len(rows) == 11 and float(rows[-1][1]) == rec.energies[-1]


class TestBlocks:
    def test_block_solver_matches_dense(self, small_square):
        sysm = DampedGalerkinSystem.from_rectangle(small_square, full_side(small_square, "N", 2.0))
        dt = 0.03
        K = np.eye(sysm.dim) + dt / 2 * sysm.B + dt**2 / 4 * np.diag(sysm.eigs)
        assert np.allclose(sysm.midpoint_solver(dt).dense(), np.linalg.inv(K), atol=1e-14)
        x = np.random.default_rng(0).standard_normal(sysm.dim)
        assert np.allclose(sysm.damping_operator() @ x, sysm.B @ x, atol=1e-14)


class TestInitialData:
    def test_low_modes_support(self, small_square):
        w0, v0 = classical_data(small_square, "low_modes")
        grid = w0.reshape(9, 9)
        m, n = np.nonzero(grid)
        assert np.all(m + n <= 4) and grid[0, 0] == 0
        assert np.all(v0 == 0)

    @pytest.mark.parametrize("profile", ["gaussian_bump", "low_modes"])
    def test_unit_energy(self, small_square, profile):
        w0, v0 = classical_data(small_square, profile)
        E = 0.5 * (v0 @ v0 + w0 @ (small_square.eigenvalues * w0))
        assert E == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_against_double_integral(self):
        model = build_model(1.0, 1.2, 6)
        c = gaussian_coefficients(model, (0.4, 0.6), 0.08)
        for m, n in [(0, 0), (1, 2), (5, 3), (6, 6)]:
            Nm = np.sqrt((1 if m == 0 else 2) / model.a)
            Nn = np.sqrt((1 if n == 0 else 2) / model.b)
            f = lambda y, x: (Nm * Nn * np.exp(-((x - 0.4) ** 2 + (y - 0.6) ** 2) / (2 * 0.08**2))
                              * np.cos(m * np.pi * x / model.a) * np.cos(n * np.pi * y / model.b))
            oracle = dblquad(f, 0, model.a, 0, model.b, epsabs=1e-13, epsrel=1e-12)[0]
            assert c[m * 7 + n] == pytest.approx(oracle, abs=1e-8)

    def test_coefficient_decay(self):
        model = build_model(1.0, 1.0, 24)
        for profile in ("gaussian_bump", "low_modes"):
            w0, _ = classical_data(model, profile)
            weighted = np.abs(w0) * (1 + model.eigenvalues) ** 2
            # faster than (1 + lambda)^-2: the weighted tail dies off
            top = model.eigenvalues > 0.5 * model.top_eigenvalue
            assert weighted[top].max() <= 1e-4 * weighted.max()

    def test_unknown_profile(self, small_square):
        with pytest.raises(ValueError):
            classical_data(small_square, "square_wave")


class TestDecayFit:
    def test_power_law(self):
        t = np.linspace(1, 100, 1000)
        fit = decay_fit(synthetic_record(t, 1 / t), (2, 90))
        assert fit.slope == pytest.approx(-1.0, abs=1e-12)
        assert fit.stderr < 1e-12
        assert not fit.curvature_flag

    def test_exponential_flagged(self):
        t = np.linspace(0.01, 20, 2000)
        fit = decay_fit(synthetic_record(t, np.exp(-t)), (1, 15))
        assert fit.curvature_flag

    def test_window_guards(self):
        t = np.linspace(1, 10, 100)
        rec = synthetic_record(t, 1 / t)
        with pytest.raises(ValueError):
            decay_fit(rec, (2, 20))
        with pytest.raises(ValueError):
            decay_fit(rec, (5, 3))
        with pytest.raises(ValueError):
            decay_fit(rec, (0, 3))

    def test_one_sided_ratio(self):
        t = np.linspace(1, 100, 1000)
        assert one_sided_decay_ratio(synthetic_record(t, t**-1.0), (2, 100)) <= 1.0
        assert one_sided_decay_ratio(synthetic_record(t, t**-0.3), (2, 100)) > 1.0

    def test_caveat_text(self):
        assert "exponentially" in DECAY_CAVEAT
