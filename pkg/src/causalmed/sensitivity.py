"""E-values: the minimum confounder strength needed to explain an effect away.

On the risk-ratio scale, E = rr + sqrt(rr * (rr - 1)). Odds ratios for
common outcomes are first converted by the square-root approximation;
protective effects are inverted, since E(OR) = E(1/OR). The confidence-limit
E-value uses the limit nearer the null and is 1 when the interval crosses 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InputError

CONVERSIONS = ("sqrt_or", "identity")


@dataclass(frozen=True)
class EvalueResult:
    input_or: float
    rr_used: float
    evalue_point: float
    evalue_ci: float | None
    conversion: str

    def to_json_obj(self):
        return {
            "or": self.input_or,
            "conversion": self.conversion,
            "rr_used": self.rr_used,
            "evalue_point": self.evalue_point,
            "evalue_ci": self.evalue_ci,
        }


def _e_from_rr(rr: float) -> float:
    if rr < 1.0:
        rr = 1.0 / rr
    return rr + math.sqrt(rr * (rr - 1.0))


def evalue(
    odds_ratio: float,
    ci: tuple[float, float] | None = None,
    conversion: str = "sqrt_or",
) -> EvalueResult:
    """E-value of an odds ratio and, optionally, of its confidence interval.

    ``conversion="sqrt_or"`` applies the common-outcome OR-to-RR
    approximation; ``"identity"`` treats the OR as a risk ratio (rare
    outcomes). Estimates below 1 are inverted first.
    """
    if conversion not in CONVERSIONS:
        raise InputError(f"unknown conversion {conversion!r}")
    if not (isinstance(odds_ratio, (int, float)) and math.isfinite(odds_ratio)):
        raise InputError("odds ratio must be finite")
    if odds_ratio <= 0:
        raise InputError("odds ratio must be positive")

    def to_rr(value: float) -> float:
        return math.sqrt(value) if conversion == "sqrt_or" else value

    inverted = odds_ratio < 1.0
    point = 1.0 / odds_ratio if inverted else odds_ratio
    rr = to_rr(point)
    e_point = _e_from_rr(rr)

    e_ci = None
    if ci is not None:
        lo, hi = ci
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo <= 0 or hi <= 0:
            raise InputError("confidence limits must be positive and finite")
        if lo > hi:
            raise InputError("confidence interval is not ordered")
        if lo <= 1.0 <= hi:
            e_ci = 1.0
        else:
            near = hi if inverted else lo
            near = 1.0 / near if inverted else near
            e_ci = _e_from_rr(to_rr(near))
    return EvalueResult(
        input_or=float(odds_ratio),
        rr_used=rr,
        evalue_point=e_point,
        evalue_ci=e_ci,
        conversion=conversion,
    )


def implied_rr(e: float) -> float:
    """Invert E = rr + sqrt(rr*(rr-1)): internal consistency check.

    Solving the quadratic gives rr = E^2 / (2E - 1).
    """
    if e < 1.0:
        raise InputError("E-values are at least 1")
    return e * e / (2.0 * e - 1.0)
