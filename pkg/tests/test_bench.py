import numpy as np
import pytest

from vqlab.bench import (
    CVConfig,
    EvalResult,
    ModelPrediction,
    contentwise_cv,
    contentwise_folds,
    correlations,
    cv_iteration,
    f_quantile,
    f_test,
    fit_logistic,
    krcc,
    plcc,
    significance_matrix,
    srcc,
    stratified_report,
)
from vqlab.errors import DegenerateDataError, UndefinedCorrelationError


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def oracle_spearman(a, b):
    """Average ranks + hand Pearson."""
    def ranks(v):
        order = np.argsort(v, kind="stable")
        r = np.empty(len(v), dtype=float)
        i = 0
        sv = np.asarray(v, dtype=float)[order]
        while i < len(v):
            j = i
            while j + 1 < len(v) and sv[j + 1] == sv[i]:
                j += 1
            r[order[i : j + 1]] = (i + j) / 2.0 + 1.0
            i = j + 1
        return r

    ra, rb = ranks(a), ranks(b)
    ra -= ra.mean()
    rb -= rb.mean()
    return float((ra * rb).sum() / np.sqrt((ra**2).sum() * (rb**2).sum()))


def oracle_kendall_tau_b(a, b):
    """Exhaustive pair counting with tie correction."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = len(a)
    concordant = discordant = ties_a = ties_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da, db = a[i] - a[j], b[i] - b[j]
            if da == 0 and db == 0:
                continue
            if da == 0:
                ties_a += 1
            elif db == 0:
                ties_b += 1
            elif da * db > 0:
                concordant += 1
            else:
                discordant += 1
    denom = np.sqrt(
        (concordant + discordant + ties_a) * (concordant + discordant + ties_b)
    )
    return (concordant - discordant) / denom


def oracle_f_quantile(p, d1, d2):
    """Invert the regularized-incomplete-beta F CDF by bisection (mpmath)."""
    import mpmath

    def cdf(x):
        return float(mpmath.betainc(d1 / 2, d2 / 2, 0, d1 * x / (d1 * x + d2), regularized=True))

    lo, hi = 1e-9, 1e6
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# logistic fit
# ---------------------------------------------------------------------------

class TestLogisticFit:
    def test_recovers_synthetic_curve(self):
        rng = np.random.default_rng(0)
        x = np.sort(rng.uniform(-4, 4, size=60))
        y = 20.0 + (90.0 - 20.0) / (1.0 + np.exp(-(x - 0.5) / 1.2))
        fit = fit_logistic(x, y)
        assert fit.residual_norm <= 1e-6 * np.linalg.norm(y)

    def test_constant_truth_gives_flat_map(self):
        x = np.arange(10, dtype=float)
        y = np.full(10, 42.0)
        fit = fit_logistic(x, y)
        np.testing.assert_allclose(fit(x), 42.0, atol=1e-9)

    def test_fitted_map_is_monotone(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(0, 10, size=40)
        y = 3.0 * x + rng.normal(0, 4, size=40)
        fit = fit_logistic(x, y)
        grid = np.linspace(x.min(), x.max(), 200)
        diffs = np.diff(fit(grid))
        assert (diffs >= -1e-12).all() or (diffs <= 1e-12).all()

    def test_constant_pred_rejected(self):
        with pytest.raises(DegenerateDataError):
            fit_logistic(np.ones(10), np.arange(10.0))

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            fit_logistic([1, 2, 3], [1, 2, 3])


# ---------------------------------------------------------------------------
# correlations
# ---------------------------------------------------------------------------

class TestCorrelations:
    def test_perfect_agreement(self):
        x = np.arange(1.0, 21.0)
        res = correlations(x, x)
        assert res.srcc == 1.0 and res.krcc == 1.0
        assert res.plcc == pytest.approx(1.0, abs=1e-6)
        assert res.rmse == pytest.approx(0.0, abs=1e-3)

    def test_reversal(self):
        x = np.arange(1.0, 11.0)
        res = correlations(-x, x)
        assert res.srcc == pytest.approx(-1.0, abs=1e-12)
        assert res.krcc == pytest.approx(-1.0, abs=1e-12)

    def test_reference_example(self):
        res = correlations([1, 2, 3, 4, 5], [1, 3, 2, 5, 4])
        assert res.srcc == pytest.approx(0.8, abs=1e-12)
        assert res.krcc == pytest.approx(0.6, abs=1e-12)
        assert res.srcc == pytest.approx(oracle_spearman([1, 2, 3, 4, 5], [1, 3, 2, 5, 4]), abs=1e-12)
        assert res.krcc == pytest.approx(oracle_kendall_tau_b([1, 2, 3, 4, 5], [1, 3, 2, 5, 4]), abs=1e-12)

    def test_matches_oracles_with_ties(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a = rng.integers(0, 6, size=15).astype(float)
            b = rng.integers(0, 6, size=15).astype(float)
            if np.std(a) == 0 or np.std(b) == 0:
                continue
            assert srcc(a, b) == pytest.approx(oracle_spearman(a, b), abs=1e-12)
            assert krcc(a, b) == pytest.approx(oracle_kendall_tau_b(a, b), abs=1e-12)

    def test_rank_invariance_under_monotone_transforms(self):
        rng = np.random.default_rng(3)
        a = rng.uniform(0.1, 3.0, size=30)
        b = rng.uniform(0.1, 3.0, size=30)
        for f in (lambda v: v**3, np.exp):
            assert srcc(f(a), b) == pytest.approx(srcc(a, b), abs=1e-12)
            assert krcc(a, f(b)) == pytest.approx(krcc(a, b), abs=1e-12)

    def test_zero_variance_rejected(self):
        with pytest.raises(UndefinedCorrelationError):
            correlations(np.ones(10), np.arange(10.0))


# ---------------------------------------------------------------------------
# F-test
# ---------------------------------------------------------------------------

class TestFTest:
    def test_identical_residuals_equivalent(self):
        r = np.random.default_rng(0).normal(size=50)
        assert f_test(r, r) == "equivalent"

    def test_huge_variance_ratio_significant(self):
        rng = np.random.default_rng(1)
        a = rng.normal(0, 1000.0, size=100)
        b = rng.normal(0, 1.0, size=100)
        assert f_test(a, b) == "b_better"
        assert f_test(b, a) == "a_better"

    def test_antisymmetry(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            a = rng.normal(0, rng.uniform(0.5, 2.0), size=60)
            b = rng.normal(0, rng.uniform(0.5, 2.0), size=60)
            fwd, rev = f_test(a, b), f_test(b, a)
            swap = {"a_better": "b_better", "b_better": "a_better", "equivalent": "equivalent"}
            assert rev == swap[fwd]

    def test_quantile_against_incomplete_beta_oracle(self):
        got = f_quantile(0.975, 10, 10)
        want = oracle_f_quantile(0.975, 10, 10)
        assert got == pytest.approx(want, abs=1e-3)
        assert got == pytest.approx(3.717, abs=1e-3)

    def test_null_rejection_rate(self):
        rng = np.random.default_rng(11)
        n, trials = 437, 2000
        rejections = 0
        for _ in range(trials):
            a = rng.normal(size=n)
            b = rng.normal(size=n)
            if f_test(a, b) != "equivalent":
                rejections += 1
        assert rejections / trials == pytest.approx(0.05, abs=0.02)

    def test_zero_variance_sides(self):
        flat = np.zeros(20)
        spread = np.random.default_rng(5).normal(size=20)
        assert f_test(flat, flat) == "equivalent"
        assert f_test(flat, spread) == "a_better"
        assert f_test(spread, flat) == "b_better"


# ---------------------------------------------------------------------------
# content-wise cross-validation
# ---------------------------------------------------------------------------

def synthetic_feature_study(n_contents=15, per_content=10, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    contents, truth = [], []
    for c in range(n_contents):
        q = np.linspace(5, 95, per_content) + rng.uniform(-2, 2)
        truth.extend(q)
        contents.extend([f"c{c:02d}"] * per_content)
    truth = np.array(truth)
    features = (0.8 * truth + 7.0 + rng.normal(0, noise, size=truth.size))[:, None]
    return features, truth, contents


SMALL_GRID = dict(c_grid=[10.0, 1000.0], gamma_grid=[0.1, 1.0], epsilon_grid=[0.1])


class TestContentwiseCV:
    def test_feature_csv_loader(self, tmp_path):
        from vqlab.bench import load_feature_csv

        path = tmp_path / "features.csv"
        path.write_text("stimulus_id,f1,f2\na,1.0,2.0\nb,3.5,4.5\n")
        ids, matrix = load_feature_csv(path)
        assert ids == ["a", "b"]
        np.testing.assert_array_equal(matrix, [[1.0, 2.0], [3.5, 4.5]])
        bad = tmp_path / "bad.csv"
        bad.write_text("stimulus_id\na\n")
        with pytest.raises(ValueError):
            load_feature_csv(bad)

    def test_folds_partition_contents(self):
        rng = np.random.default_rng(0)
        contents = [f"c{i:02d}" for i in range(15)]
        for _ in range(50):
            folds = contentwise_folds(contents, 5, rng)
            flat = [c for fold in folds for c in fold]
            assert sorted(flat) == sorted(contents)
            assert all(len(f) == 3 for f in folds)

    def test_no_content_leaks_across_folds(self):
        features, truth, contents = synthetic_feature_study(noise=3.0, seed=1)
        cfg = CVConfig(iterations=5, seed=3, **SMALL_GRID)
        arr = np.asarray(contents, dtype=object)
        for it in range(cfg.iterations):
            _, folds = cv_iteration(features, truth, contents, cfg, it)
            seen = {}
            for fi, fold in enumerate(folds):
                for c in fold:
                    assert c not in seen
                    seen[c] = fi
            assert len(seen) == len(set(contents))

    def test_exact_affine_features_learned_perfectly(self):
        features, truth, contents = synthetic_feature_study(noise=0.0, seed=2)
        cfg = CVConfig(iterations=5, seed=0, **SMALL_GRID)
        summary = contentwise_cv(features, truth, contents, cfg)
        assert summary["overall"]["srcc"]["median"] >= 1.0 - 1e-6

    def test_noisy_affine_features_recovered(self):
        features, truth, contents = synthetic_feature_study(noise=9.0, seed=4)
        cfg = CVConfig(iterations=10, seed=1, **SMALL_GRID)
        summary = contentwise_cv(features, truth, contents, cfg)
        assert summary["overall"]["srcc"]["median"] >= 0.9

    def test_too_few_contents_rejected(self):
        with pytest.raises(ValueError):
            contentwise_folds(["a", "b", "c"], 5, np.random.default_rng(0))

    def test_iteration_rng_reproducible(self):
        features, truth, contents = synthetic_feature_study(noise=2.0, seed=5)
        cfg = CVConfig(iterations=1, seed=7, **SMALL_GRID)
        p1, f1 = cv_iteration(features, truth, contents, cfg, 3)
        p2, f2 = cv_iteration(features, truth, contents, cfg, 3)
        assert np.array_equal(p1, p2)
        assert f1 == f2


# ---------------------------------------------------------------------------
# stratified reporting and significance matrix
# ---------------------------------------------------------------------------

class TestStratifiedReport:
    def _setup(self, seed=0):
        rng = np.random.default_rng(seed)
        n = 80
        dmos = rng.uniform(20, 80, size=n)
        mos = 100 - dmos + rng.normal(0, 2, size=n)
        temporal = rng.choice(["full", "half"], size=n).tolist()
        spatial = rng.choice(["540p", "720p", "1080p", "2160p"], size=n).tolist()
        good = ModelPrediction("good", "reference", -dmos + rng.normal(0, 3, size=n))
        weak = ModelPrediction("weak", "reference", -dmos + rng.normal(0, 25, size=n))
        blind = ModelPrediction("blind", "no_reference", mos + rng.normal(0, 8, size=n))
        return dmos, mos, temporal, spatial, [good, weak, blind]

    def test_overall_is_pooled_not_averaged(self):
        dmos, mos, temporal, spatial, models = self._setup()
        report = stratified_report(models, dmos, mos, temporal, spatial)
        res = report["results"]["good"]
        pooled = correlations(models[0].values, dmos)
        assert res["overall"].srcc == pooled.srcc
        per_stratum = [res[s].srcc for s in ("full", "half")]
        assert res["overall"].srcc != pytest.approx(np.mean(per_stratum), abs=1e-6)

    def test_two_best_match_argsort_oracle(self):
        dmos, mos, temporal, spatial, models = self._setup(3)
        report = stratified_report(models, dmos, mos, temporal, spatial)
        res = report["results"]
        for stratum, flags in report["best"].items():
            names = [m for m in res if stratum in res[m]]
            order = sorted(names, key=lambda m: -abs(res[m][stratum].srcc))
            assert flags["srcc"] == order[:2]
            order_rmse = sorted(names, key=lambda m: res[m][stratum].rmse)
            assert flags["rmse"] == order_rmse[:2]

    def test_tiny_strata_omitted(self):
        dmos = np.array([10.0, 20, 30, 40, 50, 60])
        mos = 100 - dmos
        temporal = ["full"] * 5 + ["half"]  # single half-rate stimulus
        spatial = ["2160p"] * 6
        model = ModelPrediction("m", "reference", -dmos)
        report = stratified_report([model], dmos, mos, temporal, spatial)
        assert "half" not in report["results"]["m"]
        assert any("half" in w for w in report["warnings"])

    def test_reference_models_score_against_dmos(self):
        rng = np.random.default_rng(9)
        n = 40
        dmos = rng.uniform(0, 100, size=n)
        mos = rng.uniform(0, 100, size=n)  # unrelated
        model = ModelPrediction("m", "reference", -dmos)
        report = stratified_report([model], dmos, mos, ["full"] * n, ["2160p"] * n)
        assert abs(report["results"]["m"]["overall"].srcc) > 0.99


class TestSignificanceMatrix:
    def test_seven_entry_encoding_antisymmetric(self):
        rng = np.random.default_rng(1)
        strata = ["half", "full", "540p", "720p", "1080p", "2160p", "overall"]
        models = {}
        for name, scale in (("tight", 1.0), ("loose", 6.0)):
            models[name] = {s: rng.normal(0, scale, size=120) for s in strata}
        matrix = significance_matrix(models)
        assert matrix["tight"]["tight"] == "-------"
        fwd, rev = matrix["tight"]["loose"], matrix["loose"]["tight"]
        assert len(fwd) == 7
        for cf, cr in zip(fwd, rev):
            assert {cf, cr} in ({"1", "0"}, {"-"})
        assert "1" in fwd  # much tighter residuals must win somewhere
