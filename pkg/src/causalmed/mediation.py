"""Total, direct, and indirect effects via the two-model procedure.

The total effect is the exposure coefficient from an outcome regression
without the mediators; the direct effect adds the mediator main effects; the
indirect effect is their difference on the log-odds scale, so indirect OR =
total OR / direct OR. Four estimator variants share this decomposition:

* ``primary``  - covariates centered at their weighted means, plus
  exposure-by-covariate interaction terms (the exposure coefficient is then
  the effect at covariate means);
* ``simple``   - plain main-effects regression;
* ``ps_regression`` - adjustment through a single propensity-score covariate;
* ``ipw``      - weighted regression under stabilized inverse-probability
  weights times the survey weights.

Total and direct effects carry Wald sandwich CIs; the indirect effect has no
closed-form SE here, so its CI comes from a deterministic nonparametric
bootstrap that refits both models (and any propensity model) per replicate.
Note the total effect from the mediator-free model is the standard two-model
quantity, not a collapsibility-corrected marginal effect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .data import Column, Continuous, Dataset, VariableRoles
from .errors import (
    BootstrapError,
    ConvergenceError,
    InputError,
    RankDeficiencyError,
    SeparationError,
)
from .glm import (
    FitResult,
    ModelSpec,
    Z95,
    build_design,
    fit_logistic,
    indicator,
    interaction,
    main,
    response_vector,
    wald_interval,
)

VARIANTS = ("primary", "simple", "ps_regression", "ipw")

#: Name of the derived column holding fitted propensity scores.
PS_COLUMN = "propensity_score"

FIT_FAILURES = (RankDeficiencyError, SeparationError, ConvergenceError)


@dataclass(frozen=True)
class VariantOptions:
    """Estimator knobs that must stay fixed across bootstrap replicates."""

    ipw_stabilized: bool = True
    ipw_trim: tuple[float, float] | None = None
    ipw_adjust_covariates: bool = False


@dataclass(frozen=True)
class EffectEstimate:
    kind: str
    log_or: float
    odds_ratio: float
    ci_or: tuple[float, float] | None
    variant: str
    n_used: int

    def __post_init__(self):
        expected = math.exp(self.log_or)
        if abs(self.odds_ratio - expected) > 1e-12 * max(1.0, expected):
            raise InputError("odds_ratio must equal exp(log_or)")
        if self.ci_or is not None:
            lo, hi = self.ci_or
            if lo > hi:
                raise InputError("confidence interval is not ordered")

    @classmethod
    def from_log_or(cls, kind, log_or, ci_or, variant, n_used) -> "EffectEstimate":
        return cls(kind, float(log_or), math.exp(log_or), ci_or, variant, n_used)

    def to_json_obj(self):
        return {
            "effect": self.kind,
            "log_or": self.log_or,
            "or": self.odds_ratio,
            "ci": None if self.ci_or is None else [self.ci_or[0], self.ci_or[1]],
            "variant": self.variant,
            "n_used": self.n_used,
        }


@dataclass(frozen=True)
class EffectTriple:
    total: EffectEstimate
    direct: EffectEstimate
    indirect: EffectEstimate
    seed: int
    bootstrap_reps: int

    def __post_init__(self):
        gap = abs(self.indirect.log_or - (self.total.log_or - self.direct.log_or))
        if gap > 1e-12:
            raise InputError(f"decomposition identity violated by {gap!r}")

    def estimates(self) -> tuple[EffectEstimate, EffectEstimate, EffectEstimate]:
        return (self.total, self.direct, self.indirect)

    def to_json_obj(self):
        return {
            "total": self.total.to_json_obj(),
            "direct": self.direct.to_json_obj(),
            "indirect": self.indirect.to_json_obj(),
            "seed": self.seed,
            "bootstrap_reps": self.bootstrap_reps,
        }

    def forest_rows(self):
        """Rows for the forest-plot CSV: (variant, effect, or, ci_lo, ci_hi)."""
        rows = []
        for est in self.estimates():
            lo, hi = est.ci_or if est.ci_or is not None else (None, None)
            rows.append((est.variant, est.kind, est.odds_ratio, lo, hi))
        return rows


# ---------------------------------------------------------------------------
# Variant model fitting


def _outcome_spec(ds, roles, variant, include_mediators, extra_mains=()):
    terms = [main(c) for c in (*extra_mains, *roles.adjustment_columns())]
    if include_mediators:
        if not roles.mediators:
            raise InputError("direct effect requires at least one mediator column")
        terms.extend(main(m) for m in roles.mediators)
    if variant == "primary":
        terms.extend(interaction(c) for c in roles.adjustment_columns())
    return ModelSpec(
        outcome=roles.outcome,
        exposure=roles.exposure,
        terms=tuple(terms),
        center_covariates=(variant == "primary"),
        weight_source=ds.weight_column,
    )


def _fit_regression_variant(ds, roles, variant, include_mediators) -> FitResult:
    spec = _outcome_spec(ds, roles, variant, include_mediators)
    design = build_design(ds, spec)
    return fit_logistic(design, response_vector(ds, roles.outcome), ds.weights())


def _fit_ps_variant(ds, roles, include_mediators, psfit) -> FitResult:
    ps_col = Column(Continuous(), psfit.scores, np.zeros(ds.n_rows, dtype=np.uint8))
    augmented = ds.with_column(PS_COLUMN, ps_col)
    terms = [main(PS_COLUMN)]
    if include_mediators:
        if not roles.mediators:
            raise InputError("direct effect requires at least one mediator column")
        terms.extend(main(m) for m in roles.mediators)
    spec = ModelSpec(
        outcome=roles.outcome,
        exposure=roles.exposure,
        terms=tuple(terms),
        weight_source=ds.weight_column,
    )
    design = build_design(augmented, spec)
    return fit_logistic(design, response_vector(augmented, roles.outcome), augmented.weights())


def _fit_ipw_variant(ds, roles, include_mediators, options: VariantOptions, psfit) -> FitResult:
    from . import adjustment

    exposure_vec = indicator(ds[roles.exposure])
    ipw = adjustment.ipw_weights(
        psfit,
        exposure_vec,
        stabilized=options.ipw_stabilized,
        trim=options.ipw_trim,
        base_weights=ds.weights(),
    )
    combined = ds.weights() * ipw.weights
    terms = []
    if options.ipw_adjust_covariates:
        terms.extend(main(c) for c in roles.adjustment_columns())
    if include_mediators:
        if not roles.mediators:
            raise InputError("direct effect requires at least one mediator column")
        terms.extend(main(m) for m in roles.mediators)
    spec = ModelSpec(outcome=roles.outcome, exposure=roles.exposure, terms=tuple(terms))
    design = build_design(ds, spec)
    return fit_logistic(design, response_vector(ds, roles.outcome), combined)


def _fit_variant(ds, roles, variant, include_mediators, options, psfit=None) -> FitResult:
    if variant in ("primary", "simple"):
        return _fit_regression_variant(ds, roles, variant, include_mediators)
    if variant not in ("ps_regression", "ipw"):
        raise InputError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if psfit is None:
        from . import adjustment

        psfit = adjustment.fit_propensity(ds, roles, include_mediator=False)
    if variant == "ps_regression":
        return _fit_ps_variant(ds, roles, include_mediators, psfit)
    return _fit_ipw_variant(ds, roles, include_mediators, options, psfit)


@dataclass(frozen=True, eq=False)
class EffectPair:
    """Both outcome fits on one dataset, with the exposure coefficients."""

    total_fit: FitResult
    direct_fit: FitResult
    exposure: str
    n_used: int

    @property
    def total_log_or(self) -> float:
        return self.total_fit.coef(self.exposure)

    @property
    def direct_log_or(self) -> float:
        return self.direct_fit.coef(self.exposure)

    @property
    def indirect_log_or(self) -> float:
        return self.total_log_or - self.direct_log_or


def estimate_pair(
    ds: Dataset,
    roles: VariableRoles,
    variant: str,
    options: VariantOptions = VariantOptions(),
) -> EffectPair:
    """Fit the mediator-free and mediator-adjusted models for one variant.

    The ps/ipw variants share one mediator-free propensity fit across both
    outcome models.
    """
    roles.validate(ds)
    psfit = None
    if variant in ("ps_regression", "ipw"):
        from . import adjustment

        psfit = adjustment.fit_propensity(ds, roles, include_mediator=False)
    total_fit = _fit_variant(ds, roles, variant, False, options, psfit)
    direct_fit = _fit_variant(ds, roles, variant, True, options, psfit)
    return EffectPair(total_fit, direct_fit, roles.exposure, ds.n_rows)


def _estimate_from_fit(kind, fit, roles, variant, n_used, level=0.95) -> EffectEstimate:
    log_or = fit.coef(roles.exposure)
    lo, hi = wald_interval(fit, roles.exposure, level=level)
    return EffectEstimate.from_log_or(kind, log_or, (math.exp(lo), math.exp(hi)), variant, n_used)


def total_effect(
    ds: Dataset,
    roles: VariableRoles,
    variant: str = "primary",
    *,
    options: VariantOptions = VariantOptions(),
    level: float = 0.95,
) -> EffectEstimate:
    """Exposure effect from the outcome model excluding the mediators."""
    roles.validate(ds)
    fit = _fit_variant(ds, roles, variant, include_mediators=False, options=options)
    return _estimate_from_fit("total", fit, roles, variant, ds.n_rows, level)


def direct_effect(
    ds: Dataset,
    roles: VariableRoles,
    variant: str = "primary",
    *,
    options: VariantOptions = VariantOptions(),
    level: float = 0.95,
) -> EffectEstimate:
    """Exposure effect with mediator main effects added to the model."""
    roles.validate(ds)
    fit = _fit_variant(ds, roles, variant, include_mediators=True, options=options)
    return _estimate_from_fit("direct", fit, roles, variant, ds.n_rows, level)


def combine(
    total: EffectEstimate, direct: EffectEstimate, ci_or: tuple[float, float] | None = None
) -> EffectEstimate:
    """Indirect effect as the difference of total and direct estimates.

    On the odds-ratio scale this is total OR / direct OR. Both inputs must
    come from the same variant and sample.
    """
    if total.kind != "total" or direct.kind != "direct":
        raise InputError("combine expects a total and a direct estimate")
    if total.variant != direct.variant:
        raise InputError(f"variant mismatch: {total.variant!r} vs {direct.variant!r}")
    if total.n_used != direct.n_used:
        raise InputError("estimates come from different samples")
    return EffectEstimate.from_log_or(
        "indirect", total.log_or - direct.log_or, ci_or, total.variant, total.n_used
    )


# ---------------------------------------------------------------------------
# Bootstrap


@dataclass(frozen=True)
class BootstrapInterval:
    lo: float
    hi: float
    se: float
    n_failed: int
    reps: int


def bootstrap_statistics(n_rows, reps, seed, replicate_fn, *, threads=1, max_failure_rate=0.1):
    """Resampling engine: replicate i draws rows with generator seed+i.

    Replicates whose fit degenerates (rank deficiency, separation,
    non-convergence) are dropped and counted; more than ``max_failure_rate``
    failures is an error. The replicate-to-seed mapping is fixed, so thread
    counts cannot change the output.
    """
    if reps < 100:
        raise InputError("at least 100 bootstrap replicates required")

    def one(i):
        rng = np.random.default_rng(seed + i)
        idx = rng.integers(0, n_rows, n_rows)
        try:
            return replicate_fn(idx)
        except FIT_FAILURES:
            return None

    results = parallel_map(one, range(reps), threads=threads)
    stats = np.array([r for r in results if r is not None], dtype=np.float64)
    n_failed = reps - stats.size
    if n_failed > max_failure_rate * reps:
        raise BootstrapError(f"{n_failed} of {reps} bootstrap replicates failed")
    return stats, n_failed


def _target_stat(pair: EffectPair, target: str) -> float:
    if target == "total":
        return pair.total_log_or
    if target == "direct":
        return pair.direct_log_or
    if target == "indirect":
        return pair.indirect_log_or
    raise InputError(f"unknown target {target!r}")


def bootstrap_ci(
    ds: Dataset,
    roles: VariableRoles,
    variant: str,
    reps: int,
    seed: int,
    target: str = "indirect",
    *,
    method: str = "percentile",
    level: float = 0.95,
    options: VariantOptions = VariantOptions(),
    threads: int = 1,
) -> BootstrapInterval:
    """Nonparametric bootstrap interval on the odds-ratio scale.

    Rows are resampled with replacement and both models are refit per
    replicate (including the propensity model for the ps/ipw variants).
    ``method="percentile"`` takes percentile limits of the replicate ORs;
    ``method="delta"`` uses a normal interval around the full-sample estimate
    with the replicate standard deviation.
    """
    if method not in ("percentile", "delta"):
        raise InputError(f"unknown bootstrap method {method!r}")
    roles.validate(ds)

    def replicate(idx):
        pair = estimate_pair(ds.take(idx), roles, variant, options)
        return _target_stat(pair, target)

    stats, n_failed = bootstrap_statistics(ds.n_rows, reps, seed, replicate, threads=threads)
    se = float(stats.std(ddof=1)) if stats.size > 1 else 0.0
    alpha = (1.0 - level) / 2.0
    if method == "percentile":
        lo, hi = np.percentile(np.exp(stats), [100 * alpha, 100 * (1 - alpha)])
    else:
        point = _target_stat(estimate_pair(ds, roles, variant, options), target)
        z = Z95 if level == 0.95 else None
        if z is None:
            from scipy.stats import norm

            z = float(norm.ppf(1 - alpha))
        lo, hi = math.exp(point - z * se), math.exp(point + z * se)
    return BootstrapInterval(float(lo), float(hi), se, n_failed, reps)


def effect_triple(
    ds: Dataset,
    roles: VariableRoles,
    variant: str,
    *,
    bootstrap_reps: int = 1000,
    seed: int = 0,
    ci_method: str = "percentile",
    options: VariantOptions = VariantOptions(),
    threads: int = 1,
) -> EffectTriple:
    """Total, direct, and indirect effects for one variant on complete data.

    Total and direct carry Wald sandwich CIs from their fits; the indirect
    CI is bootstrapped with the given seed and replicate count.
    """
    pair = estimate_pair(ds, roles, variant, options)
    total = _estimate_from_fit("total", pair.total_fit, roles, variant, pair.n_used)
    direct = _estimate_from_fit("direct", pair.direct_fit, roles, variant, pair.n_used)
    interval = bootstrap_ci(
        ds,
        roles,
        variant,
        bootstrap_reps,
        seed,
        "indirect",
        method=ci_method,
        options=options,
        threads=threads,
    )
    indirect = combine(total, direct, ci_or=(interval.lo, interval.hi))
    return EffectTriple(total, direct, indirect, seed, bootstrap_reps)
