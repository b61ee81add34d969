"""Kinetic-energy tables: closed forms, tails, caching, Lipschitz bounds."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuld import kinetic, stable


class TestClosedFormBypasses:
    def test_alpha_2_identity_on_grid(self, table_a2):
        np.testing.assert_array_equal(table_a2.dg_values, table_a2.grid)

    def test_alpha_2_g_values(self, table_a2):
        expected = 0.5 * math.log(2.0 * math.pi) + 0.5 * table_a2.grid**2
        np.testing.assert_array_equal(table_a2.g_values, expected)

    def test_alpha_1_closed_form(self, table_a1):
        assert kinetic.grad_G(table_a1, 1.0) == 1.0
        np.testing.assert_allclose(
            kinetic.grad_G(table_a1, np.array([1.0, 2.0])), [1.0, 0.8], rtol=1e-15
        )

    def test_bypass_exact_beyond_grid(self, table_a2, table_a1):
        assert kinetic.grad_G(table_a2, 1e6) == 1e6
        assert kinetic.grad_G(table_a1, 1e6) == pytest.approx(2e-6, rel=1e-9)


class TestBuildTable:
    def test_validation(self):
        with pytest.raises(ValueError):
            kinetic.build_table(2.5, 40.0, 8001)
        with pytest.raises(ValueError):
            kinetic.build_table(1.5, 10.0, 8001)
        with pytest.raises(ValueError):
            kinetic.build_table(1.5, 40.0, 100)

    def test_matches_density_definition(self, table_a15):
        # g = -log psi at scale alpha^(-1/alpha), spot-checked off-grid
        dist = stable.AlphaStable(1.5, 1.5 ** (-1 / 1.5))
        for v in (0.0, 0.37, 2.2, 9.9):
            ev = stable.density(dist, v)
            g = -math.log(ev.psi)
            dg = -ev.dpsi / ev.psi
            assert kinetic.g_values_at(table_a15, v) == pytest.approx(g, abs=2e-6)
            assert kinetic.grad_G(table_a15, v) == pytest.approx(dg, abs=2e-5)

    def test_dg_odd(self, table_a15):
        np.testing.assert_allclose(
            table_a15.dg_values, -table_a15.dg_values[::-1], atol=1e-12
        )

    def test_gradient_consistency(self, table_a15):
        h = table_a15.grid[1] - table_a15.grid[0]
        fd = (table_a15.g_values[2:] - table_a15.g_values[:-2]) / (2.0 * h)
        assert np.max(np.abs(fd - table_a15.dg_values[1:-1])) < 1e-4

    def test_tail_coefficient_near_one_plus_alpha(self, table_a15, table_a19):
        assert table_a15.tail_coefficient == pytest.approx(2.5, rel=0.02)
        assert table_a19.tail_coefficient == pytest.approx(2.9, rel=0.05)

    def test_tail_example_v_1000(self):
        # frozen oracle: 40-digit series evaluation of -psi'/psi at v = 1000
        from oracles import stable_logdensity_grad_mp

        table = kinetic.build_table(1.5, 100.0, 200001)
        truth = stable_logdensity_grad_mp(1.5, 1.5 ** (-1 / 1.5), 1000.0)
        got = kinetic.grad_G(table, 1000.0)
        assert got == pytest.approx(0.0025, abs=2e-5)
        assert got == pytest.approx(truth, rel=2e-3)

    def test_tail_continuity_at_edge(self, table_a15):
        v = table_a15.v_max
        inside = kinetic.grad_G(table_a15, v - 1e-9)
        outside = kinetic.grad_G(table_a15, v + 1e-9)
        assert inside == pytest.approx(outside, rel=1e-6)

    def test_alpha_to_2_consistency(self):
        # the identity approximation holds below the Gaussian-to-power-tail
        # crossover (which sits near |v| = 4.7 at alpha = 1.999)
        table = kinetic.build_table(1.999, 20.0, 4001)
        v = np.linspace(-3.0, 3.0, 301)
        assert np.max(np.abs(kinetic.grad_G(table, v) - v)) < 0.05


class TestGradG:
    def test_identity_examples(self, table_a2):
        np.testing.assert_array_equal(
            kinetic.grad_G(table_a2, np.array([3.0, -4.0])), [3.0, -4.0]
        )

    def test_odd_at_zero(self, table_a15):
        assert kinetic.grad_G(table_a15, 0.0) == 0.0

    def test_vanishes_at_infinity(self, table_a05, table_a15, table_a19):
        for t in (table_a05, table_a15, table_a19):
            assert abs(kinetic.grad_G(t, t.v_max)) < 0.1
            assert abs(kinetic.grad_G(t, 1e4)) < 1e-3

    def test_near_origin_linearity(self):
        # dg(v)/v approaches a positive constant
        table = kinetic.build_table(1.5, 20.0, 40001)  # spacing 1e-3
        v = np.array([0.002, 0.004, 0.006, 0.008, 0.01])
        ratios = kinetic.grad_G(table, v) / v
        assert ratios.min() > 0.0
        assert (ratios.max() - ratios.min()) / ratios.mean() < 0.05

    @given(st.floats(-60.0, 60.0))
    @settings(max_examples=60, deadline=None)
    def test_slope_bounded_by_lipschitz(self, v):
        table = _shared_secant_table()
        w = v + 0.37
        secant = abs(
            kinetic.grad_G(table, w) - kinetic.grad_G(table, v)
        ) / abs(w - v)
        assert secant <= table.lipschitz * 1.01


_SECANT_TABLE = None


def _shared_secant_table():
    global _SECANT_TABLE
    if _SECANT_TABLE is None:
        _SECANT_TABLE = kinetic.build_table(1.5, 40.0, 16001)
    return _SECANT_TABLE


class TestLipschitzBound:
    def test_alpha_2_is_one(self, table_a2):
        assert kinetic.lipschitz_bound(table_a2) == pytest.approx(1.0, rel=1e-9)

    def test_alpha_1_is_two(self, table_a1):
        # analytic max of |d/dv 2v/(1+v^2)| is 2 at v = 0
        assert kinetic.lipschitz_bound(table_a1) == pytest.approx(2.0, rel=1e-4)

    def test_refinement_stability(self):
        a = kinetic.build_table(1.5, 40.0, 16001)
        b = kinetic.build_table(1.5, 40.0, 32001)
        la, lb = kinetic.lipschitz_bound(a), kinetic.lipschitz_bound(b)
        assert abs(la - lb) / la < 0.01


class TestPersistence:
    def test_cache_roundtrip(self, tmp_path):
        a = kinetic.build_table(1.5, 20.0, 4001, cache_dir=tmp_path)
        path = kinetic.cache_path(1.5, 20.0, 4001, tmp_path)
        assert path.exists()
        b = kinetic.build_table(1.5, 20.0, 4001, cache_dir=tmp_path)
        np.testing.assert_array_equal(a.g_values, b.g_values)
        np.testing.assert_array_equal(a.dg_values, b.dg_values)
        assert a.tail_coefficient == b.tail_coefficient
        assert a.lipschitz == b.lipschitz

    def test_magic_validation(self, tmp_path):
        from fuld import binio

        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
        with pytest.raises(binio.FormatError):
            kinetic.load_table(bad)

    def test_csv_export(self, tmp_path, table_a1):
        out = tmp_path / "table.csv"
        kinetic.export_csv(table_a1, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "v,g_alpha,dg_alpha"
        assert len(lines) == table_a1.n_points + 1
        mid = lines[1 + table_a1.n_points // 2].split(",")
        assert float(mid[0]) == 0.0
        assert float(mid[2]) == 0.0
