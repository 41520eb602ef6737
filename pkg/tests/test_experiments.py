import csv
import io
import math

import numpy as np
import pytest

from oracles import PLUS
from qfibound import experiments as ex
from qfibound.convexity import channel_ensemble, split_f_conv
from qfibound.exceptions import ArgumentError, DivergentBoundError, DivergentThresholdError
from qfibound.fisher import qfi
from qfibound.qcore import channel_tensor_power, ket_to_dm, ghz_ket


def dense_fconv(cfg):
    ch = channel_tensor_power(ex.example1_channel(cfg.q, cfg.resolved_alpha(), cfg.tau), cfg.n)
    ens = channel_ensemble(ch, ket_to_dm(ghz_ket(cfg.n)), cfg.x)
    return split_f_conv(ens, cfg.x)


def dense_exact(cfg):
    ch = channel_tensor_power(ex.example1_channel(cfg.q, cfg.resolved_alpha(), cfg.tau), cfg.n)
    ens = channel_ensemble(ch, ket_to_dm(ghz_ket(cfg.n)), cfg.x)
    return qfi(ens.mixture(cfg.x), ens.mixture_derivative(cfg.x))


class TestCoefficients:
    def test_no_noise_angle(self):
        c = ex.example1_coeffs(0.0, 0.8, 1.3)
        assert c.c1 == 0 and c.c2 == pytest.approx(1.3 ** 2)

    def test_full_mixing(self):
        assert ex.example1_coeffs(0.7, 0.5, 1.0).c1 == 0

    def test_arithmetic(self):
        c = ex.example1_coeffs(1.0, 0.8, 1.0)
        assert c.c1 == pytest.approx(1.44) and c.c2 == pytest.approx(6.76)

    def test_c2_is_a_square(self):
        for q in np.linspace(0.01, 0.99, 9):
            for a in np.linspace(-3, 3, 13):
                c = ex.example1_coeffs(a, q, 1.0)
                assert c.c2 == pytest.approx((1.0 + 4 * a * math.sqrt(q * (1 - q))) ** 2)

    def test_single_qubit_matches_ensemble(self):
        cfg = ex.Example1Config(0.8, 1.0, 0.3, 1, alpha=1.0)
        c = ex.example1_coeffs(1.0, 0.8, 1.0)
        assert dense_fconv(cfg).total == pytest.approx(c.c1 + c.c2)


class TestAlphaOpt:
    @pytest.mark.parametrize("q", [0.0, 1.0])
    def test_pure_channels(self, q):
        assert ex.example1_alpha_opt(5, q, 1.0) == 0

    def test_single_probe(self):
        assert ex.example1_alpha_opt(1, 0.8, 1.0) == pytest.approx(-0.4)

    def test_stationary(self):
        n, q, tau = 50, 0.995, 1.0
        a = ex.example1_alpha_opt(n, q, tau)

        def total(al):
            c = ex.example1_coeffs(al, q, tau)
            return c.c1 * n + c.c2 * n ** 2

        h = 1e-5
        grad = (total(a + h) - total(a - h)) / (2 * h)
        assert abs(grad) / total(a) <= 1e-6
        assert total(a) < total(a + 0.01) and total(a) < total(a - 0.01)

    def test_threshold_identity(self):
        # at the optimum c2 N / c1 = N* / N
        q, tau = 0.995, 1.0
        ns = ex.example1_threshold(q)
        for n in (1, 10, 50, 200):
            c = ex.example1_coeffs(ex.example1_alpha_opt(n, q, tau), q, tau)
            assert c.c2 * n / c.c1 == pytest.approx(ns / n, rel=1e-10)


class TestThreshold:
    def test_values(self):
        assert ex.example1_threshold(0.995) == pytest.approx(49.25, abs=0.01)
        assert ex.example1_threshold(0.5) == 0
        assert ex.example1_threshold(0.9) == pytest.approx(0.64 / 0.36)

    @pytest.mark.parametrize("q", [0.0, 1.0])
    def test_divergent(self, q):
        with pytest.raises(DivergentThresholdError):
            ex.example1_threshold(q)

    def test_out_of_range(self):
        with pytest.raises(ArgumentError):
            ex.example1_threshold(1.5)


class TestExample1:
    @pytest.mark.parametrize("n", [1, 3, 10, 100])
    def test_heisenberg_without_noise_angle(self, n):
        cfg = ex.Example1Config(0.7, 0.9, 0.4, n, alpha=0.0)
        assert ex.example1_fconv(cfg).f_conv == pytest.approx(0.81 * n * n, rel=1e-12)

    @pytest.mark.parametrize("n", [1, 4, 30])
    def test_exact_noiseless(self, n):
        cfg = ex.Example1Config(1.0, 0.9, 0.4, n, alpha=0.0)
        assert ex.example1_exact_qfi(cfg) == pytest.approx(0.81 * n * n, rel=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    @pytest.mark.parametrize("q, alpha, x", [(0.8, 1.0, 0.3), (0.95, "optimal", 1.0), (0.3, -0.7, 0.1)])
    def test_dense_oracle(self, n, q, alpha, x):
        cfg = ex.Example1Config(q, 1.0, x, n, alpha)
        red, dense = ex.example1_fconv(cfg), dense_fconv(cfg)
        assert red.f_classical == pytest.approx(dense.classical, rel=1e-9, abs=1e-12)
        assert red.f_quantum == pytest.approx(dense.quantum, rel=1e-9, abs=1e-12)
        assert ex.example1_exact_qfi(cfg) == pytest.approx(dense_exact(cfg), rel=1e-9, abs=1e-12)

    def test_closed_form_total(self):
        for n in (1, 7, 64, 500):
            cfg = ex.Example1Config(0.9, 1.2, 0.5, n, alpha=0.3)
            c = ex.example1_coeffs(0.3, 0.9, 1.2)
            assert ex.example1_fconv(cfg).f_conv == pytest.approx(c.c1 * n + c.c2 * n * n, rel=1e-10)

    def test_reduced_family_is_state(self):
        rho, drho = ex.example1_reduced_family(ex.Example1Config(0.9, 1.0, 0.2, 12))
        assert rho.shape == (2, 2) and abs(np.trace(rho) - 1) < 1e-14
        assert abs(np.trace(drho)) < 1e-14

    def test_fixed_alpha_scaling(self):
        # classical part exactly linear, quantum part quadratic at large N
        rows = ex.sweep_example1(ex.Example1Config(0.995, 1.0, 1.0, 1, alpha=-0.5), 1, 200)
        n = np.array([r.n for r in rows], dtype=float)
        cl = np.array([r.f_classical for r in rows])
        qu = np.array([r.f_quantum for r in rows])
        assert np.polyfit(np.log(n), np.log(cl), 1)[0] == pytest.approx(1.0, abs=1e-9)
        assert np.polyfit(np.log(n[n >= 20]), np.log(qu[n >= 20]), 1)[0] == pytest.approx(2.0, abs=0.01)

    def test_optimal_alpha_quantum_slope_below_threshold(self):
        rows = ex.sweep_example1(ex.Example1Config(0.995, 1.0, 1.0, 1), 1, 5)
        n = np.array([r.n for r in rows], dtype=float)
        qu = np.array([r.f_quantum for r in rows])
        assert np.polyfit(np.log(n), np.log(qu), 1)[0] == pytest.approx(2.0, abs=0.15)


@pytest.fixture(scope="module")
def rows():
    return ex.sweep_example1(ex.Example1Config(0.995, 1.0, 1.0, 1), 1, 200)


class TestSweep:
    def test_single_row(self):
        rows = ex.sweep_example1(ex.Example1Config(0.8, 1.0, 0.3, 1, alpha=1.0), 1, 1)
        assert len(rows) == 1 and rows[0].f_conv == pytest.approx(8.2)

    def test_bound_dominates(self, rows):
        assert [r.n for r in rows] == list(range(1, 201))
        assert all(r.f_conv >= r.f_exact * (1 - 1e-12) for r in rows)

    def test_crossover_locality(self, rows):
        r = rows[round(ex.example1_threshold(0.995)) - 1]
        assert 0.25 <= r.f_classical / r.f_quantum <= 4

    def test_error_columns(self, rows):
        for r in rows[::37]:
            assert r.err_bound == pytest.approx(1 / math.sqrt(r.f_conv))
            assert r.err_exact == pytest.approx(1 / math.sqrt(r.f_exact))

    def test_csv(self, rows):
        buf = io.StringIO()
        ex.write_sweep_csv(rows[:3], buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "n,f_conv,f_classical,f_quantum,f_exact,err_bound,err_exact,asymp_small_n,asymp_large_n"
        parsed = list(csv.DictReader(io.StringIO(buf.getvalue())))
        assert float(parsed[1]["f_conv"]) == pytest.approx(rows[1].f_conv, rel=1e-11)
        assert all(len(v.replace(".", "").replace("-", "").lstrip("0")) <= 12 for v in lines[2].split(","))

    def test_bad_range(self):
        with pytest.raises(ArgumentError):
            ex.sweep_example1(ex.Example1Config(0.9, 1.0, 1.0, 1), 5, 2)


class TestExample2:
    def test_spot(self):
        r = ex.example2_ext_qfi(1, 1.0, 0.5, "product")
        assert r.bound == pytest.approx(0.5819767068693265, rel=1e-12)
        assert r.exact == pytest.approx(0.36787944117144233, rel=1e-12)

    @pytest.mark.parametrize("state", ["product", "ghz"])
    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_ratio(self, state, n):
        tau, x = 0.7, 0.4
        r = ex.example2_ext_qfi(n, tau, x, state)
        m = n if state == "ghz" else 1
        assert r.bound / r.exact == pytest.approx(1 / (1 - math.exp(-2 * tau * x * m)), rel=1e-12)
        assert r.bound >= r.exact

    def test_strong_dephasing(self):
        r = ex.example2_ext_qfi(3, 1.0, 50.0, "product")
        assert r.bound < 1e-40 and r.exact < 1e-40

    def test_zero_rate(self):
        with pytest.raises(DivergentBoundError):
            ex.example2_ext_qfi(2, 1.0, 0.0)

    def test_initial_state(self):
        np.testing.assert_allclose(ex.example2_initial_state(1, "product"), PLUS)
        with pytest.raises(ArgumentError):
            ex.example2_initial_state(2, "w")

    def test_single_qubit_bound_is_rate_qfi(self):
        # the rate QFI of the dephased qubit coincides with the bound for N = 1
        from qfibound.lindblad import drho_xa, evolve

        m = ex.example2_model(1, 0.5, 1.0)
        rho = evolve(m, PLUS)
        assert qfi(rho, drho_xa(m, rho, 0)) == pytest.approx(ex.example2_ext_qfi(1, 1.0, 0.5).bound, rel=1e-10)
