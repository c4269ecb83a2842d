"""Design matrices and weighted logistic regression.

The fitter is iteratively reweighted least squares with step-halving on
deviance increases, started at zero coefficients. Survey weights enter as
likelihood weights; inference defaults to the sandwich covariance, which is
robust to that weighting. The model-based covariance is the inverse observed
information.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.special import expit
from scipy.stats import norm

from .data import Binary, Column, Continuous, Dataset, kind_levels, nonreference_levels
from .errors import (
    ConvergenceError,
    DataError,
    InputError,
    RankDeficiencyError,
    SeparationError,
)

#: Standard-normal 97.5% quantile, fixed to six decimals for reproducibility.
Z95 = 1.959964

INTERCEPT = "(Intercept)"

DEFAULT_MAX_ITER = 50
DEFAULT_TOL = 1e-8
DEFAULT_SEPARATION_BOUND = 30.0


@dataclass(frozen=True)
class Term:
    """A model term: a covariate main effect, or its product with the exposure."""

    column: str
    interaction: bool = False


def main(column: str) -> Term:
    return Term(column)


def interaction(column: str) -> Term:
    return Term(column, interaction=True)


@dataclass(frozen=True)
class ModelSpec:
    """Specification for one outcome regression."""

    outcome: str
    exposure: str | None
    terms: tuple[Term, ...]
    center_covariates: bool = False
    weight_source: str | None = None
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.tol <= 0:
            raise InputError("tol must be positive")
        if self.max_iter < 1:
            raise InputError("max_iter must be at least 1")
        for term in self.terms:
            if term.column == self.outcome:
                raise InputError(f"outcome {self.outcome!r} cannot appear among terms")
            if term.interaction and self.exposure is None:
                raise InputError("interaction terms require an exposure")
        if self.exposure is not None and self.exposure == self.outcome:
            raise InputError("exposure and outcome must differ")


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """A numeric design with named columns and recorded centering offsets."""

    matrix: np.ndarray
    names: tuple[str, ...]
    centering: dict[str, float]
    empty_columns: tuple[str, ...] = ()

    def __post_init__(self):
        if not np.isfinite(self.matrix).all():
            raise DataError("design matrix contains non-finite entries")

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.matrix[:, self.names.index(name)]


def _require_observed(ds: Dataset, name: str) -> Column:
    col = ds[name]
    n_bad = int((~col.observed).sum())
    if n_bad:
        raise DataError(f"column {name!r} has {n_bad} unobserved cells; complete rows required")
    return col


def indicator(col: Column) -> np.ndarray:
    """0/1 vector marking the non-reference level of a binary column."""
    if not isinstance(col.kind, Binary):
        raise InputError("indicator requires a binary column")
    nonref = col.kind.levels.index(nonreference_levels(col.kind)[0])
    return (col.values == nonref).astype(np.float64)


def response_vector(ds: Dataset, outcome: str) -> np.ndarray:
    """Outcome vector in {0,1}; requires a fully observed binary column."""
    return indicator(_require_observed(ds, outcome))


def _covariate_columns(ds, name, weights, center):
    """Expand one covariate into (name, vector, offset) design columns."""
    col = _require_observed(ds, name)
    out = []
    if isinstance(col.kind, Continuous):
        vec = col.values.astype(np.float64)
        offset = float(np.average(vec, weights=weights)) if center else 0.0
        out.append((name, vec - offset, offset))
    else:
        levels = kind_levels(col.kind)
        for level in nonreference_levels(col.kind):
            vec = (col.values == levels.index(level)).astype(np.float64)
            offset = float(np.average(vec, weights=weights)) if center else 0.0
            colname = name if isinstance(col.kind, Binary) else f"{name}={level}"
            out.append((colname, vec - offset, offset))
    return out


def build_design(ds: Dataset, spec: ModelSpec) -> DesignMatrix:
    """Expand a model specification into a numeric design matrix.

    Discrete covariates become reference-coded indicators. When centering is
    requested every covariate column (indicators included) is shifted to
    weighted mean zero, and interaction columns are products of the exposure
    indicator with the centered covariate columns, so the exposure
    coefficient is the effect at covariate means.
    """
    weights = np.ones(ds.n_rows) if spec.weight_source is None else ds.weights_from(spec.weight_source)
    names = [INTERCEPT]
    vectors = [np.ones(ds.n_rows)]
    centering: dict[str, float] = {}
    if spec.exposure is not None:
        exposure_vec = indicator(_require_observed(ds, spec.exposure))
        names.append(spec.exposure)
        vectors.append(exposure_vec)
    cache: dict[str, list] = {}

    def expanded(column):
        if column not in cache:
            cache[column] = _covariate_columns(ds, column, weights, spec.center_covariates)
        return cache[column]

    for term in spec.terms:
        for colname, vec, offset in expanded(term.column):
            if term.interaction:
                names.append(f"{spec.exposure}:{colname}")
                vectors.append(exposure_vec * vec)
            else:
                names.append(colname)
                vectors.append(vec)
                if spec.center_covariates:
                    centering[colname] = offset
    matrix = np.column_stack(vectors)
    empty = tuple(
        name for name, vec in zip(names, vectors) if name != INTERCEPT and not np.any(vec != 0.0)
    )
    return DesignMatrix(matrix, tuple(names), centering, empty)


@dataclass(frozen=True, eq=False)
class FitResult:
    """Fitted coefficients with model-based and sandwich covariances."""

    names: tuple[str, ...]
    beta: np.ndarray
    cov_model: np.ndarray
    cov_sandwich: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    n_obs: int

    def coef(self, name: str) -> float:
        return float(self.beta[self.names.index(name)])

    def se(self, index, variance: str = "sandwich") -> float:
        idx = self._index(index)
        cov = self.cov_sandwich if variance == "sandwich" else self.cov_model
        return float(np.sqrt(cov[idx, idx]))

    def _index(self, index) -> int:
        if isinstance(index, str):
            if index not in self.names:
                raise InputError(f"unknown coefficient {index!r}")
            return self.names.index(index)
        if not 0 <= index < len(self.names):
            raise InputError(f"coefficient index {index} out of range")
        return int(index)

    def to_json_obj(self):
        rows = []
        for i, name in enumerate(self.names):
            se_s = self.se(i, "sandwich")
            lo, hi = wald_interval(self, i)
            rows.append(
                {
                    "name": name,
                    "estimate": float(self.beta[i]),
                    "se_model": self.se(i, "model_based"),
                    "se_sandwich": se_s,
                    "z": float(self.beta[i] / se_s) if se_s > 0 else None,
                    "ci_lo": lo,
                    "ci_hi": hi,
                }
            )
        return {
            "coefficients": rows,
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "n_obs": self.n_obs,
        }


def _diagnose_singular_information(X, w, names):
    """Name the collinear columns behind a singular information matrix.

    If the weighted design is actually full rank the singularity came from
    degenerate fitted probabilities instead, which is separation territory.
    """
    Xw = X * np.sqrt(w)[:, None]
    _, R, piv = scipy.linalg.qr(Xw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        raise RankDeficiencyError(names)
    rank = int((diag > diag[0] * max(X.shape) * np.finfo(float).eps).sum())
    if rank < X.shape[1]:
        raise RankDeficiencyError([names[j] for j in piv[rank:]])
    raise SeparationError("information matrix is singular (fitted probabilities degenerate)")


def _log_likelihood(eta, y, w) -> float:
    # w * (y*eta - log(1 + exp(eta))), stable for large |eta|
    return float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))


def fit_logistic(
    design: DesignMatrix,
    y: np.ndarray,
    w: np.ndarray | None = None,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    separation_bound: float = DEFAULT_SEPARATION_BOUND,
) -> FitResult:
    """Maximize the weighted Bernoulli log-likelihood by IRLS.

    Convergence means the max-abs weighted score falls below ``tol``.
    Coefficients passing ``separation_bound`` in absolute value while the
    deviance still improves are reported as quasi-complete separation.
    Failure to converge within ``max_iter`` accepted steps raises; returned
    fits always have ``converged=True``.
    """
    X = design.matrix
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise InputError("response length does not match design")
    if not ((y == 0.0) | (y == 1.0)).all():
        raise InputError("response must be 0/1")
    w = np.ones(n) if w is None else np.asarray(w, dtype=np.float64)
    if w.shape != (n,):
        raise InputError("weight length does not match design")
    if (w < 0).any() or not np.isfinite(w).all():
        raise InputError("weights must be finite and non-negative")
    if not (w > 0).any():
        raise InputError("weights must not all be zero")

    beta = np.zeros(p)
    eta = X @ beta
    ll = _log_likelihood(eta, y, w)
    iterations = 0
    for _ in range(max_iter + 1):
        mu = expit(eta)
        resid = y - mu
        score = np.einsum("ij,i->j", X, w * resid)
        if np.abs(score).max() < tol:
            break
        if iterations == max_iter:
            raise ConvergenceError(f"no convergence in {max_iter} iterations")
        info_w = w * mu * (1.0 - mu)
        A = np.einsum("ij,i,ik->jk", X, info_w, X)
        try:
            chol = np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            _diagnose_singular_information(X, w, design.names)
        delta = scipy.linalg.cho_solve((chol, True), score, check_finite=False)
        step = 1.0
        for _halving in range(31):
            cand = beta + step * delta
            eta_cand = X @ cand
            ll_cand = _log_likelihood(eta_cand, y, w)
            if ll_cand >= ll - 1e-12 * (1.0 + abs(ll)):
                break
            step *= 0.5
        else:
            raise ConvergenceError("step halving failed to improve the likelihood")
        improving = ll_cand > ll + 1e-8
        beta, eta, ll = cand, eta_cand, ll_cand
        iterations += 1
        if np.abs(beta).max() > separation_bound and improving:
            raise SeparationError(
                f"coefficient magnitude exceeded {separation_bound} while the deviance "
                "still improved; data are quasi-completely separated"
            )

    mu = expit(eta)
    resid = y - mu
    info_w = w * mu * (1.0 - mu)
    A = np.einsum("ij,i,ik->jk", X, info_w, X)
    try:
        cov_model = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        _diagnose_singular_information(X, w, design.names)
    cov_model = (cov_model + cov_model.T) / 2.0
    B = np.einsum("ij,i,ik->jk", X, (w * resid) ** 2, X)
    cov_sandwich = cov_model @ B @ cov_model
    cov_sandwich = (cov_sandwich + cov_sandwich.T) / 2.0
    return FitResult(
        names=design.names,
        beta=beta,
        cov_model=cov_model,
        cov_sandwich=cov_sandwich,
        log_likelihood=ll,
        iterations=iterations,
        converged=True,
        n_obs=n,
    )


def wald_interval(
    fit: FitResult, index, level: float = 0.95, variance: str = "sandwich"
) -> tuple[float, float]:
    """Wald confidence interval for one coefficient, on the log-odds scale."""
    if not fit.converged:
        raise InputError("fit did not converge")
    if variance not in ("sandwich", "model_based"):
        raise InputError(f"unknown variance {variance!r}")
    if not 0 < level < 1:
        raise InputError("level must be in (0, 1)")
    idx = fit._index(index)
    z = Z95 if level == 0.95 else float(norm.ppf(0.5 + level / 2.0))
    se = fit.se(idx, variance)
    est = float(fit.beta[idx])
    return (est - z * se, est + z * se)


