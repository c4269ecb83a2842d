"""Propensity scores, inverse-probability weighting, and balance diagnostics.

The propensity model is a survey-weighted logistic regression of the
exposure on the adjustment covariates, optionally also on the mediators (the
with-mediator variant exists for the overlap diagnostic; effect estimation
always weights from the mediator-free model). Stabilized weights multiply
the inverse score by the marginal exposure probability and therefore average
one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import mediation
from .data import Dataset, VariableRoles
from .errors import InputError
from .glm import FitResult, ModelSpec, build_design, fit_logistic, indicator, main

SCORE_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class PropensityFit:
    """Fitted exposure model with per-row scores.

    Scores are clipped into (0, 1) strictly. The design columns are retained
    for balance diagnostics.
    """

    fit: FitResult
    scores: np.ndarray
    includes_mediator: bool
    covariate_names: tuple[str, ...]
    covariate_matrix: np.ndarray
    exposure: np.ndarray
    base_weights: np.ndarray


def fit_propensity(ds: Dataset, roles: VariableRoles, include_mediator: bool = False) -> PropensityFit:
    """Logistic regression of the exposure on the adjustment covariates."""
    roles.validate(ds)
    terms = [main(c) for c in roles.adjustment_columns()]
    if include_mediator:
        terms.extend(main(m) for m in roles.mediators)
    spec = ModelSpec(
        outcome=roles.exposure,
        exposure=None,
        terms=tuple(terms),
        weight_source=ds.weight_column,
    )
    design = build_design(ds, spec)
    weights = ds.weights()
    fit = fit_logistic(design, indicator(ds[roles.exposure]), weights)
    scores = np.clip(expit(design.matrix @ fit.beta), SCORE_EPS, 1.0 - SCORE_EPS)
    return PropensityFit(
        fit=fit,
        scores=scores,
        includes_mediator=include_mediator,
        covariate_names=design.names[1:],
        covariate_matrix=design.matrix[:, 1:],
        exposure=indicator(ds[roles.exposure]),
        base_weights=weights,
    )


@dataclass(frozen=True, eq=False)
class IpwWeights:
    weights: np.ndarray
    stabilized: bool
    trim_quantiles: tuple[float, float] | None
    n_trimmed: int


def ipw_weights(
    psfit: "PropensityFit | np.ndarray",
    exposure: np.ndarray,
    stabilized: bool = True,
    trim: tuple[float, float] | None = None,
    *,
    base_weights: np.ndarray | None = None,
) -> IpwWeights:
    """Inverse-probability weights: 1/e for the exposed, 1/(1-e) otherwise.

    Stabilization multiplies by the marginal exposure probability (computed
    with ``base_weights`` when given). Trimming clamps the scores at the
    given score quantiles before weighting and counts affected rows. A bare
    score vector may stand in for a full propensity fit.
    """
    scores = psfit.scores if isinstance(psfit, PropensityFit) else np.asarray(psfit, dtype=np.float64)
    if ((scores <= 0.0) | (scores >= 1.0)).any():
        raise InputError("propensity scores must lie strictly in (0, 1)")
    exposure = np.asarray(exposure, dtype=np.float64)
    if exposure.shape != scores.shape:
        raise InputError("exposure vector does not align with the propensity scores")
    n_trimmed = 0
    if trim is not None:
        lo_q, hi_q = trim
        if not 0.0 <= lo_q < hi_q <= 1.0:
            raise InputError("trim quantiles must satisfy 0 <= lo < hi <= 1")
        lo, hi = np.quantile(scores, [lo_q, hi_q])
        clipped = np.clip(scores, lo, hi)
        n_trimmed = int((clipped != scores).sum())
        scores = clipped
    weights = np.where(exposure == 1.0, 1.0 / scores, 1.0 / (1.0 - scores))
    if stabilized:
        marginal = float(np.average(exposure, weights=base_weights))
        weights = weights * np.where(exposure == 1.0, marginal, 1.0 - marginal)
    return IpwWeights(weights, stabilized, trim, n_trimmed)


# ---------------------------------------------------------------------------
# Diagnostics


@dataclass(frozen=True)
class SmdRow:
    covariate: str
    before: float
    after: float


@dataclass(frozen=True, eq=False)
class DensitySummary:
    """Per-group score histograms plus covariate balance before/after weighting."""

    bin_edges: np.ndarray
    proportions: dict[str, np.ndarray]
    smd: tuple[SmdRow, ...]

    def to_json_obj(self):
        return {
            "bin_edges": [float(v) for v in self.bin_edges],
            "proportions": {k: [float(p) for p in v] for k, v in self.proportions.items()},
            "smd": [
                {"covariate": r.covariate, "before": r.before, "after": r.after} for r in self.smd
            ],
        }

    def histogram_to_csv(self, dest) -> None:
        close = False
        if not hasattr(dest, "write"):
            dest = open(dest, "w", encoding="utf-8", newline="")
            close = True
        try:
            writer = csv.writer(dest)
            writer.writerow(["group", "bin_lo", "bin_hi", "proportion"])
            for group, props in self.proportions.items():
                for i, p in enumerate(props):
                    writer.writerow(
                        [group, repr(float(self.bin_edges[i])), repr(float(self.bin_edges[i + 1])), repr(float(p))]
                    )
        finally:
            if close:
                dest.close()

    def smd_to_csv(self, dest) -> None:
        close = False
        if not hasattr(dest, "write"):
            dest = open(dest, "w", encoding="utf-8", newline="")
            close = True
        try:
            writer = csv.writer(dest)
            writer.writerow(["covariate", "smd_before", "smd_after"])
            for row in self.smd:
                writer.writerow([row.covariate, repr(row.before), repr(row.after)])
        finally:
            if close:
                dest.close()


def _weighted_smd(values, exposure, weights) -> float:
    stats = {}
    for group in (0.0, 1.0):
        sel = exposure == group
        w = weights[sel]
        v = values[sel]
        mean = float(np.average(v, weights=w))
        var = float(np.average((v - mean) ** 2, weights=w))
        stats[group] = (mean, var)
    pooled = np.sqrt((stats[1.0][1] + stats[0.0][1]) / 2.0)
    if pooled == 0.0:
        return 0.0
    return float(abs(stats[1.0][0] - stats[0.0][0]) / pooled)


def overlap_diagnostics(psfit: PropensityFit, exposure: np.ndarray, bins: int = 10) -> DensitySummary:
    """Score histograms by exposure group over [0, 1], each summing to one,
    plus per-covariate standardized mean differences before and after
    stabilized inverse-probability weighting."""
    if bins < 2:
        raise InputError("at least two bins required")
    exposure = np.asarray(exposure, dtype=np.float64)
    edges = np.linspace(0.0, 1.0, bins + 1)
    proportions = {}
    for group in (0.0, 1.0):
        sel = exposure == group
        if not sel.any():
            raise InputError(f"exposure group {int(group)} is empty")
        counts, _ = np.histogram(psfit.scores[sel], bins=edges)
        proportions[str(int(group))] = counts / counts.sum()
    ipw = ipw_weights(psfit, exposure, stabilized=True, base_weights=psfit.base_weights)
    after_w = psfit.base_weights * ipw.weights
    smd_rows = []
    for j, name in enumerate(psfit.covariate_names):
        col = psfit.covariate_matrix[:, j]
        smd_rows.append(
            SmdRow(
                covariate=name,
                before=_weighted_smd(col, exposure, psfit.base_weights),
                after=_weighted_smd(col, exposure, after_w),
            )
        )
    return DensitySummary(edges, proportions, tuple(smd_rows))


# ---------------------------------------------------------------------------
# Effect estimation under the two adjustment variants


def ps_regression_effects(
    ds: Dataset,
    roles: VariableRoles,
    *,
    bootstrap_reps: int = 1000,
    seed: int = 0,
    ci_method: str = "percentile",
    threads: int = 1,
) -> mediation.EffectTriple:
    """Effects with the mediator-free propensity score as a single covariate."""
    return mediation.effect_triple(
        ds,
        roles,
        "ps_regression",
        bootstrap_reps=bootstrap_reps,
        seed=seed,
        ci_method=ci_method,
        threads=threads,
    )


def ipw_effects(
    ds: Dataset,
    roles: VariableRoles,
    *,
    stabilized: bool = True,
    trim: tuple[float, float] | None = None,
    adjust_covariates: bool = False,
    bootstrap_reps: int = 1000,
    seed: int = 0,
    ci_method: str = "percentile",
    threads: int = 1,
) -> mediation.EffectTriple:
    """Effects from outcome regressions weighted by IPW times survey weights.

    The outcome models contain the exposure (plus mediators for the direct
    effect) only, unless ``adjust_covariates`` doubly adjusts. Sandwich
    variance is always used.
    """
    options = mediation.VariantOptions(
        ipw_stabilized=stabilized, ipw_trim=trim, ipw_adjust_covariates=adjust_covariates
    )
    return mediation.effect_triple(
        ds,
        roles,
        "ipw",
        bootstrap_reps=bootstrap_reps,
        seed=seed,
        ci_method=ci_method,
        options=options,
        threads=threads,
    )
