import math

import numpy as np
import pytest

from foldedwiener.curves import (
    CurveConfig,
    CurveRow,
    ErrorCurve,
    compare_designs,
    complexity_estimate,
    fit_rate,
    load_config,
    make_design,
    parse_curve_csv,
    run_curve,
)
from foldedwiener.designs import hyperbolic_cross
from foldedwiener.exceptions import (
    ConfigError,
    EpsilonUnreachableError,
    InsufficientSpanError,
)
from foldedwiener.kernel import ProblemSpec


def synthetic(n, e):
    return ErrorCurve([CurveRow(int(k), float(v), 0.0, 1.0, "grid", i) for i, (k, v) in enumerate(zip(n, e))])


@pytest.fixture(scope="module")
def brownian_curve():
    cfg = CurveConfig.from_dict({"d": 1, "r": [0], "design": "grid", "n_list": [16, 32, 64, 128, 256, 512, 1024]})
    return run_curve(cfg)


class TestConfig:
    def test_scalar_smoothness_broadcasts(self):
        assert CurveConfig.from_dict({"d": 3, "r": 1, "levels": [1]}).spec.r == (1, 1, 1)

    @pytest.mark.parametrize(
        "data",
        [
            {"d": 1},
            {"d": 1, "r": [0], "colour": "red"},
            {"d": 1, "r": [0], "design": "lattice"},
            {"d": 1, "r": [0], "levels": [1], "n_list": [4]},
            {"d": 2, "r": [0]},
            {"d": 1, "r": [0], "eig_m": 0},
        ],
    )
    def test_rejects(self, data):
        with pytest.raises(ConfigError):
            CurveConfig.from_dict(data)

    def test_overrides(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"d": 1, "r": [0], "seed": 3}')
        assert load_config(path, seed=7, c=5.0).seed == 7

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")

    def test_sweep_required(self):
        with pytest.raises(ConfigError):
            CurveConfig.from_dict({"d": 1, "r": [0]}).sweep()

    def test_hyperbolic_needs_levels(self):
        with pytest.raises(ConfigError):
            make_design("hyperbolic_cross", ProblemSpec.from_r([0]), "n", 16)


class TestRunCurve:
    def test_brownian_rows(self, brownian_curve):
        e = brownian_curve.column("e_avg")
        assert list(brownian_curve.n) == [16, 32, 64, 128, 256, 512, 1024]
        assert np.all(np.diff(e) < 0)
        np.testing.assert_allclose(e, np.sqrt(1 / (6 * brownian_curve.n)), rtol=1e-10)
        assert brownian_curve.violations() == []

    def test_sheet_hyperbolic_cardinalities(self):
        spec = ProblemSpec.from_r([0, 0])
        cfg = CurveConfig.from_dict(
            {"d": 2, "r": [0, 0], "design": "hyperbolic_cross", "levels": list(range(1, 10)), "sup_grid": 8}
        )
        curve = run_curve(cfg)
        # level-k blocks: k + 1 of them, 2^k points each
        sizes = [hyperbolic_cross(L, spec).n for L in range(1, 10)]
        assert [row.n for row in curve.rows] == sizes
        assert sizes == [sum(2**L_ * (L_ + 1) for L_ in range(L + 1)) for L in range(1, 10)]
        assert all(row.e_all <= row.e_avg + 1e-8 for row in curve.rows)

    def test_failed_rows_are_logged(self):
        cfg = CurveConfig.from_dict({"d": 1, "r": [0], "design": "grid", "levels": [2, 3], "sup_grid": 1})
        curve = run_curve(cfg)
        assert curve.rows == [] and len(curve.log) == 2

    def test_csv_round_trip(self, brownian_curve):
        text = brownian_curve.to_csv()
        assert text.splitlines()[0] == "n,e_avg,e_all,e_wor_bound,provenance,level"
        assert parse_curve_csv(text).to_csv() == text

    def test_csv_header_checked(self):
        with pytest.raises(ConfigError):
            parse_curve_csv("n,e\n1,2\n")


class TestFitRate:
    def test_exact_power_law(self):
        n = np.geomspace(16, 4096, 9)
        fit = fit_rate((n, 3 * n**-0.5), with_log_term=False)
        assert fit.slope == pytest.approx(0.5, abs=1e-12) and fit.log_power == 0.0
        assert fit.intercept == pytest.approx(math.log(3)) and fit.residual < 1e-12

    def test_log_term_recovered(self):
        n = np.geomspace(32, 4096, 12)
        fit = fit_rate((n, n**-0.5 * np.log(n)))
        assert fit.slope == pytest.approx(0.5, abs=0.02)
        assert fit.log_power == pytest.approx(1.0, abs=0.1)

    def test_noisy(self):
        rng = np.random.default_rng(11)
        n = np.geomspace(16, 8192, 20)
        e = 2 * n**-0.75 * np.exp(0.01 * rng.standard_normal(n.size))
        assert fit_rate((n, e), with_log_term=False).slope == pytest.approx(0.75, abs=0.03)

    def test_duplicates_ignored(self, brownian_curve):
        doubled = ErrorCurve(brownian_curve.rows + brownian_curve.rows)
        assert fit_rate(doubled) == fit_rate(brownian_curve)

    def test_deterministic(self, brownian_curve):
        assert fit_rate(brownian_curve) == fit_rate(brownian_curve)

    @pytest.mark.parametrize("n", [[10, 20, 40, 80, 160], [10, 12, 14, 16, 18, 20, 200]])
    def test_span(self, n):
        with pytest.raises(InsufficientSpanError):
            fit_rate((np.array(n), np.ones(len(n))))


class TestComplexity:
    @pytest.fixture
    def curve(self):
        return synthetic([10, 100, 1000], [0.3, 0.1, 0.03])

    def test_exact_hit(self, curve):
        assert complexity_estimate(curve, 0.1, ProblemSpec.from_r([0], c=10.0)) == (100, 1200.0)

    def test_large_epsilon(self, curve):
        assert complexity_estimate(curve, 0.5, ProblemSpec.from_r([0]))[0] == 10

    def test_interpolates(self, curve):
        # e ~ n^(-log10 3) between rows, so e = 0.3 / sqrt(3) sits at n = 10^1.5
        n_eps, _ = complexity_estimate(curve, 0.3 / math.sqrt(3), ProblemSpec.from_r([0]))
        assert n_eps == math.ceil(10**1.5)

    def test_unreachable(self, curve):
        with pytest.raises(EpsilonUnreachableError):
            complexity_estimate(curve, 0.01, ProblemSpec.from_r([0]))


class TestCompare:
    def test_self_ratio_is_one(self, brownian_curve):
        cfg = CurveConfig.from_dict({"d": 1, "r": [0], "designs": ["grid", "grid"], "n_list": [16]})
        report = compare_designs(cfg, curves={"grid": brownian_curve, "grid'": brownian_curve})
        ratios = [row["ratio"] for row in report["ratios"]["grid/grid'"]["table"]]
        assert ratios == pytest.approx([1.0] * 7)

    def test_one_dimension_families_share_slope(self):
        cfg = CurveConfig.from_dict(
            {"d": 1, "r": [0], "levels": list(range(4, 11)), "designs": ["grid", "hyperbolic_cross"]}
        )
        fams = compare_designs(cfg)["families"]
        assert fams["grid"]["fit"]["slope"] == pytest.approx(fams["hyperbolic_cross"]["fit"]["slope"], abs=0.03)

    def test_needs_two_families(self):
        with pytest.raises(ConfigError):
            compare_designs(CurveConfig.from_dict({"d": 1, "r": [0], "designs": ["grid"]}))
