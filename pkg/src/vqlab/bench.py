"""Model-evaluation harness: linearizing logistic fit, correlation and error
statistics, variance-ratio significance testing, and content-wise
cross-validation of feature-based quality regressors.

Conventions: SRCC uses average ranks on ties, KRCC is tau-b, and PLCC/RMSE
are computed after mapping predictions through a fitted four-parameter
monotone logistic. Reference-class models are scored against DMOS,
no-reference models against MOS.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from sklearn.svm import SVR

from .errors import DegenerateDataError, UndefinedCorrelationError

STRATA_ORDER = ("half", "full", "540p", "720p", "1080p", "2160p", "overall")


def srcc(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(stats.spearmanr(a, b).statistic)


def krcc(a, b) -> float:
    return float(stats.kendalltau(a, b, variant="b").statistic)


def plcc(a, b) -> float:
    return float(stats.pearsonr(a, b).statistic)


@dataclass(frozen=True)
class LogisticFit:
    """Four-parameter monotone logistic mapping fitted by least squares."""

    upper: float
    lower: float
    center: float
    scale: float
    residual_norm: float
    converged: bool

    def __call__(self, x) -> np.ndarray:
        return _logistic(np.asarray(x, dtype=float), self.upper, self.lower, self.center, self.scale)


def _logistic(x, upper, lower, center, scale) -> np.ndarray:
    t = np.clip(-(x - center) / abs(scale), -500.0, 500.0)
    return lower + (upper - lower) / (1.0 + np.exp(t))


def fit_logistic(pred, truth) -> LogisticFit:
    """Least-squares fit of a monotone 4-parameter logistic to (pred, truth).

    Scale enters through its absolute value, so the fitted map is monotone
    by construction. A non-converged solve still returns its best iterate,
    flagged via ``converged``.
    """
    x = np.asarray(pred, dtype=float)
    y = np.asarray(truth, dtype=float)
    if x.size < 5:
        raise ValueError("need at least 5 points to fit the logistic")
    if np.std(x) == 0.0:
        raise DegenerateDataError("predictions are constant; logistic fit undefined")
    beta0 = np.array([y.max(), y.min(), float(np.median(x)), float(np.std(x)) / 4.0])
    if beta0[3] == 0.0:
        beta0[3] = 1.0

    def residuals(beta):
        return _logistic(x, *beta) - y

    result = optimize.least_squares(residuals, beta0, method="trf", max_nfev=2000)
    res_norm = float(np.linalg.norm(result.fun))
    return LogisticFit(
        upper=float(result.x[0]),
        lower=float(result.x[1]),
        center=float(result.x[2]),
        scale=float(result.x[3]),
        residual_norm=res_norm,
        converged=bool(result.status > 0),
    )


@dataclass(frozen=True)
class EvalResult:
    srcc: float
    krcc: float
    plcc: float
    rmse: float
    n: int

    def to_json(self) -> dict:
        return {"srcc": self.srcc, "krcc": self.krcc, "plcc": self.plcc, "rmse": self.rmse, "n": self.n}


def correlations(pred, truth) -> EvalResult:
    """SRCC/KRCC on raw values; PLCC/RMSE after the logistic linearization."""
    x = np.asarray(pred, dtype=float)
    y = np.asarray(truth, dtype=float)
    if x.size != y.size or x.size < 3:
        raise ValueError("need equal-length vectors of at least 3 points")
    if np.std(x) == 0.0 or np.std(y) == 0.0:
        raise UndefinedCorrelationError("zero variance on one side")
    try:
        fit = fit_logistic(x, y)
        mapped = fit(x)
    except (ValueError, DegenerateDataError):
        mapped = x  # identity fallback, flagged by rmse being on raw scale
    if np.std(mapped) == 0.0:
        mapped = x
    return EvalResult(
        srcc=srcc(x, y),
        krcc=krcc(x, y),
        plcc=plcc(mapped, y),
        rmse=float(np.sqrt(np.mean((mapped - y) ** 2))),
        n=int(x.size),
    )


def logistic_residuals(pred, truth) -> np.ndarray:
    """Residuals truth - logistic(pred); the substrate of the F-test."""
    fit = fit_logistic(pred, truth)
    return np.asarray(truth, dtype=float) - fit(pred)


EQUIVALENT, A_BETTER, B_BETTER = "equivalent", "a_better", "b_better"


def f_test(residuals_a, residuals_b, alpha: float = 0.05) -> str:
    """Two-sided variance-ratio test at (1 - alpha) confidence.

    Returns ``a_better`` when the variances differ significantly and side a
    has the smaller residual variance, symmetrically for b; ``equivalent``
    otherwise.
    """
    a = np.asarray(residuals_a, dtype=float)
    b = np.asarray(residuals_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("need at least 2 residuals per side")
    va = float(np.var(a, ddof=1))
    vb = float(np.var(b, ddof=1))
    if va == 0.0 and vb == 0.0:
        return EQUIVALENT
    if vb == 0.0:
        return B_BETTER
    f = va / vb
    cdf = stats.f.cdf(f, a.size - 1, b.size - 1)
    p = 2.0 * min(cdf, 1.0 - cdf)
    if p >= alpha:
        return EQUIVALENT
    return A_BETTER if va < vb else B_BETTER


def f_quantile(p: float, d1: int, d2: int) -> float:
    return float(stats.f.ppf(p, d1, d2))


def significance_matrix(
    residuals_by_model: dict[str, dict[str, np.ndarray]],
    strata=STRATA_ORDER,
) -> dict[str, dict[str, str]]:
    """Pairwise F-test verdicts, one character per stratum.

    '1' means the row model has significantly less residual variance than
    the column model on that stratum, '0' the opposite, '-' equivalence or
    missing data.
    """
    names = list(residuals_by_model)
    out: dict[str, dict[str, str]] = {}
    for row in names:
        out[row] = {}
        for col in names:
            chars = []
            for stratum in strata:
                ra = residuals_by_model[row].get(stratum)
                rb = residuals_by_model[col].get(stratum)
                if row == col or ra is None or rb is None:
                    chars.append("-")
                    continue
                verdict = f_test(ra, rb)
                chars.append({A_BETTER: "1", B_BETTER: "0", EQUIVALENT: "-"}[verdict])
            out[row][col] = "".join(chars)
    return out


# ---------------------------------------------------------------------------
# content-wise cross-validation
# ---------------------------------------------------------------------------

def load_feature_csv(path) -> tuple[list[str], np.ndarray]:
    """Feature file: CSV with a stimulus_id column and one column per feature.

    Returns the stimulus ids (file order) and the (n_stimuli, n_features)
    matrix with columns in file order.
    """
    import pandas as pd

    frame = pd.read_csv(path)
    if "stimulus_id" not in frame.columns:
        raise ValueError(f"{path}: feature files need a stimulus_id column")
    ids = frame["stimulus_id"].astype(str).tolist()
    feature_cols = [c for c in frame.columns if c != "stimulus_id"]
    if not feature_cols:
        raise ValueError(f"{path}: no feature columns")
    return ids, frame[feature_cols].to_numpy(dtype=float)


def _default_c_grid():
    return [2.0**e for e in range(-5, 16, 4)]


def _default_gamma_grid():
    return [2.0**e for e in range(-15, 4, 4)]


@dataclass
class CVConfig:
    folds: int = 5
    iterations: int = 1000
    seed: int = 0
    c_grid: list = field(default_factory=_default_c_grid)
    gamma_grid: list = field(default_factory=_default_gamma_grid)
    epsilon_grid: list = field(default_factory=lambda: [0.1, 1.0])
    inner_folds: int = 3


def contentwise_folds(contents, folds: int, rng: np.random.Generator) -> list[list]:
    """Random partition of distinct contents into near-equal folds."""
    unique = sorted(set(contents))
    if len(unique) < folds:
        raise ValueError(f"need at least {folds} distinct contents, got {len(unique)}")
    perm = [unique[i] for i in rng.permutation(len(unique))]
    return [list(chunk) for chunk in np.array_split(np.array(perm, dtype=object), folds)]


def _standardize(train: np.ndarray, test: np.ndarray):
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd[sd == 0.0] = 1.0
    return (train - mu) / sd, (test - mu) / sd


def _grid_search(x, y, contents, cfg: CVConfig, rng: np.random.Generator):
    inner = contentwise_folds(contents, cfg.inner_folds, rng)
    content_arr = np.asarray(contents, dtype=object)
    best_params, best_mse = None, np.inf
    for c in cfg.c_grid:
        for gamma in cfg.gamma_grid:
            for eps in cfg.epsilon_grid:
                errs = []
                for held in inner:
                    mask = np.isin(content_arr, held)
                    if mask.all() or not mask.any():
                        continue
                    xtr, xte = _standardize(x[~mask], x[mask])
                    model = SVR(kernel="rbf", C=c, gamma=gamma, epsilon=eps)
                    model.fit(xtr, y[~mask])
                    errs.append(float(np.mean((model.predict(xte) - y[mask]) ** 2)))
                mse = float(np.mean(errs)) if errs else np.inf
                if mse < best_mse:
                    best_mse = mse
                    best_params = (c, gamma, eps)
    return best_params


def cv_iteration(features, targets, contents, cfg: CVConfig, iteration: int):
    """One cross-validation iteration: every stimulus predicted exactly once.

    The RNG stream is derived from (seed, iteration) so results do not
    depend on scheduling order.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    content_arr = np.asarray(contents, dtype=object)
    rng = np.random.default_rng([cfg.seed, iteration])
    folds = contentwise_folds(contents, cfg.folds, rng)
    preds = np.empty_like(y)
    for held in folds:
        mask = np.isin(content_arr, held)
        train_contents = [c for c in contents if c not in set(held)]
        params = _grid_search(x[~mask], y[~mask], train_contents, cfg, rng)
        c, gamma, eps = params
        xtr, xte = _standardize(x[~mask], x[mask])
        model = SVR(kernel="rbf", C=c, gamma=gamma, epsilon=eps)
        model.fit(xtr, y[~mask])
        preds[mask] = model.predict(xte)
    return preds, folds


def contentwise_cv(
    features,
    targets,
    contents,
    cfg: CVConfig,
    strata: list[str] | None = None,
) -> dict:
    """Repeated content-wise k-fold CV; medians and stds over iterations.

    ``strata`` optionally labels each stimulus; per-stratum statistics are
    reported alongside the overall ones.
    """
    y = np.asarray(targets, dtype=float)
    per_iter: dict[str, dict[str, list[float]]] = {}

    def record(stratum: str, result: EvalResult):
        bucket = per_iter.setdefault(stratum, {"srcc": [], "krcc": [], "plcc": [], "rmse": []})
        bucket["srcc"].append(result.srcc)
        bucket["krcc"].append(result.krcc)
        bucket["plcc"].append(result.plcc)
        bucket["rmse"].append(result.rmse)

    for it in range(cfg.iterations):
        preds, _ = cv_iteration(features, targets, contents, cfg, it)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            record("overall", correlations(preds, y))
            if strata is not None:
                labels = np.asarray(strata, dtype=object)
                for stratum in sorted(set(strata)):
                    mask = labels == stratum
                    if mask.sum() >= 3:
                        try:
                            record(stratum, correlations(preds[mask], y[mask]))
                        except UndefinedCorrelationError:
                            pass

    def summarize(vals):
        return {"median": float(np.median(vals)), "std": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0}

    return {
        stratum: {measure: summarize(vals) for measure, vals in buckets.items()}
        for stratum, buckets in per_iter.items()
    }


# ---------------------------------------------------------------------------
# stratified reporting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelPrediction:
    """Predictions of one model; ``kind`` selects the opinion-score target."""

    name: str
    kind: str  # "reference" or "no_reference"
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in ("reference", "no_reference"):
            raise ValueError(f"unknown model kind {self.kind!r}")


def _stratum_masks(temporal_labels, spatial_labels) -> dict[str, np.ndarray]:
    t = np.asarray(temporal_labels, dtype=object)
    s = np.asarray(spatial_labels, dtype=object)
    masks = {"overall": np.ones(t.shape, dtype=bool)}
    for mode in ("full", "half"):
        masks[mode] = t == mode
    for res in ("540p", "720p", "1080p", "2160p"):
        masks[res] = s == res
    return masks


def stratified_report(
    predictions: list[ModelPrediction],
    dmos,
    mos,
    temporal_labels,
    spatial_labels,
) -> dict:
    """Per-stratum evaluation tables with the two best models per column flagged.

    Reference models are evaluated against DMOS, no-reference models
    against MOS. Undefined or underpopulated strata are omitted with a
    warning. Correlation columns rank by absolute value, RMSE ascending.
    """
    dmos = np.asarray(dmos, dtype=float)
    mos = np.asarray(mos, dtype=float)
    masks = _stratum_masks(temporal_labels, spatial_labels)
    results: dict[str, dict[str, EvalResult]] = {}
    warnings_list: list[str] = []
    for model in predictions:
        truth = dmos if model.kind == "reference" else mos
        results[model.name] = {}
        for stratum, mask in masks.items():
            if mask.sum() < 3:
                warnings_list.append(f"{model.name}/{stratum}: fewer than 3 stimuli, omitted")
                continue
            try:
                results[model.name][stratum] = correlations(model.values[mask], truth[mask])
            except (UndefinedCorrelationError, ValueError) as exc:
                warnings_list.append(f"{model.name}/{stratum}: {exc}")
    best: dict[str, dict[str, list[str]]] = {}
    for stratum in masks:
        per_measure: dict[str, list[str]] = {}
        for measure in ("srcc", "krcc", "plcc", "rmse"):
            scored = [
                (name, getattr(res[stratum], measure))
                for name, res in results.items()
                if stratum in res
            ]
            if not scored:
                continue
            if measure == "rmse":
                scored.sort(key=lambda kv: kv[1])
            else:
                scored.sort(key=lambda kv: -abs(kv[1]))
            per_measure[measure] = [name for name, _ in scored[:2]]
        if per_measure:
            best[stratum] = per_measure
    return {"results": results, "best": best, "warnings": warnings_list}
