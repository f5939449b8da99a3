"""Budget-constrained minimization of the actuation-error cost.

The decision variables are the two sampling probabilities (pa0, pa1); the
time-averaged sampling rate may not exceed a budget eta, i.e.

    q * pa0 + p * pa1 <= eta * (p + q).

The objective is a ratio of two expressions bilinear in (pa0, pa1), so along
the budget line it becomes a ratio of quadratics in the remaining free
probability.  The solver follows the sign of p*c10 - q*c01 to decide which
state's errors dominate, substitutes the tight budget for the dominated
variable, and minimizes the quadratic ratio over the feasible interval from
its stationary points plus the endpoints.  A "refrain" corner (sampling
probability zero for the cheap state) covers the regime where the monotone
direction assumed by that reduction cannot hold; the corner is always
evaluated and the better candidate wins.

Every result is checked against nothing here; :func:`grid_oracle` provides
the brute-force verifier the test suite compares against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import (
    ChannelParams,
    CostWeights,
    DegenerateModelError,
    ParameterError,
    RsPolicy,
    SourceParams,
    _rs_denominator,
)

__all__ = [
    "SolutionCase",
    "QuadraticRatio",
    "OptimizerDiagnostics",
    "OptimizeResult",
    "objective",
    "sampling_rate",
    "monotonicity_conditions",
    "optimize_constrained",
    "optimize_unconstrained",
    "minimize_pe_constrained",
    "grid_oracle",
]

_VALUE_TIE_TOL = 1e-12


class SolutionCase(Enum):
    """Which branch produced the optimum and where the optimum sat."""

    STATE1_HEAVY_INTERIOR = "state1-heavy-interior"
    STATE1_HEAVY_ENDPOINT = "state1-heavy-endpoint"
    STATE1_HEAVY_CORNER = "state1-heavy-corner"
    STATE0_HEAVY_INTERIOR = "state0-heavy-interior"
    STATE0_HEAVY_ENDPOINT = "state0-heavy-endpoint"
    STATE0_HEAVY_CORNER = "state0-heavy-corner"
    GRID_SCAN = "grid-scan"


def objective(src: SourceParams, ch: ChannelParams, cw: CostWeights,
              pa0: float, pa1: float) -> float:
    """Actuation-error cost as a direct function of the sampling probabilities.

    Deliberately independent of the stationary-distribution code path so the
    two can be cross-checked.
    """
    p, q = src.p, src.q
    e0 = pa0 * ch.ps0
    e1 = pa1 * ch.ps1
    phi = _rs_denominator(p, q, e0, e1)
    if phi <= 0.0:
        raise DegenerateModelError(
            f"objective undefined: no state is ever refreshed (pa0={pa0}, pa1={pa1})")
    num = cw.c01 * e1 * (1.0 - e0) + cw.c10 * e0 * (1.0 - e1)
    return p * q * num / ((p + q) * phi)


def sampling_rate(src: SourceParams, pa0: float, pa1: float) -> float:
    """Long-run fraction of slots with a sampling action: (q*pa0 + p*pa1)/(p+q)."""
    return (src.q * pa0 + src.p * pa1) / (src.p + src.q)


def monotonicity_conditions(src: SourceParams, ch: ChannelParams,
                            cw: CostWeights) -> tuple[float, float]:
    """Thresholds governing the sign of the objective's partial derivatives.

    Returns ``(thr_pa1, thr_pa0)``: the cost decreases in pa0 whenever
    pa1 >= thr_pa1, and decreases in pa1 whenever pa0 >= thr_pa0.  A
    threshold above 1 means no probability satisfies its condition.
    """
    p, q = src.p, src.q
    c01, c10 = cw.c01, cw.c10
    thr_pa1 = (p * c10 - q * c01) / (ch.ps1 * (p * c10 + (1 - q) * c01))
    thr_pa0 = (q * c01 - p * c10) / (ch.ps0 * (q * c01 + (1 - p) * c10))
    return thr_pa1, thr_pa0


@dataclass(frozen=True)
class QuadraticRatio:
    """Ratio of two quadratics (a1 x^2 + a2 x + a3) / (b1 x^2 + b2 x + b3)."""

    a1: float
    a2: float
    a3: float
    b1: float
    b2: float
    b3: float

    def value(self, x: float) -> float:
        return ((self.a1 * x + self.a2) * x + self.a3) / ((self.b1 * x + self.b2) * x + self.b3)

    def discriminant(self) -> float:
        lc = self.a1 * self.b3 - self.a3 * self.b1
        qc = self.a1 * self.b2 - self.a2 * self.b1
        cc = self.a2 * self.b3 - self.a3 * self.b2
        return (2.0 * lc) ** 2 - 4.0 * qc * cc

    def stationary_points(self, lo: float, hi: float) -> tuple[list[float], float | None]:
        """Stationary points of the ratio inside [lo, hi].

        Returns (points, discriminant).  With a negative discriminant the
        derivative never vanishes: the ratio is monotone and the minimizing
        endpoint is lo when the derivative's leading coefficient is positive,
        hi when it is negative; that endpoint is returned as the single point.
        The doubly degenerate constant-derivative-sign case yields no points.
        """
        qc = self.a1 * self.b2 - self.a2 * self.b1
        lc = self.a1 * self.b3 - self.a3 * self.b1
        cc = self.a2 * self.b3 - self.a3 * self.b2
        if qc != 0.0:
            delta = (2.0 * lc) ** 2 - 4.0 * qc * cc
            if delta < 0.0:
                return [lo if qc > 0.0 else hi], delta
            root = math.sqrt(delta)
            pts = [(-2.0 * lc + root) / (2.0 * qc), (-2.0 * lc - root) / (2.0 * qc)]
            return [x for x in pts if lo <= x <= hi], delta
        if lc != 0.0:
            x = -cc / (2.0 * lc)
            return ([x] if lo <= x <= hi else []), None
        # derivative numerator is the constant cc: endpoints only
        return [], None


@dataclass(frozen=True)
class OptimizerDiagnostics:
    """Audit trail of one constrained optimization."""

    branch: str
    eta_effective: float
    interval: tuple[float, float]
    discriminant: float | None
    critical_points: tuple[float, ...]
    candidates: tuple[tuple[float, float, float], ...]
    corner: tuple[float, float]
    corner_value: float
    corner_forced: bool
    condition_ok_at_candidate: bool | None


@dataclass(frozen=True)
class OptimizeResult:
    pa0_star: float
    pa1_star: float
    value: float
    case_taken: SolutionCase
    diagnostics: OptimizerDiagnostics | None = None


def _snap01(x: float, tol: float = 1e-12) -> float:
    """Round a probability coordinate to an exact 0 or 1 when within tol.

    The budget-line arithmetic produces values like 1 - 6e-16 where the exact
    endpoint is intended; snapping keeps reported optima clean and changes the
    objective by far less than any stated tolerance.
    """
    if abs(x) <= tol:
        return 0.0
    if abs(x - 1.0) <= tol:
        return 1.0
    return x


def _pick_best(candidates: list[tuple[float, float, float, str]]):
    """Least value wins; near-ties prefer the smaller sampling budget pa0+pa1,
    then the smaller pa0."""
    vmin = min(c[2] for c in candidates)
    tol = _VALUE_TIE_TOL * max(1.0, abs(vmin))
    tied = [c for c in candidates if c[2] <= vmin + tol]
    return min(tied, key=lambda c: (c[0] + c[1], c[0]))


def _state1_heavy_ratio(p, q, ps0, ps1, c01, c10, eta) -> tuple[QuadraticRatio, float, float]:
    """Objective along the tight budget line, as a quadratic ratio in pa0."""
    s = p + q
    a1 = p * q ** 2 * ps0 * ps1 * (c01 + c10)
    a2 = p * q * (c10 * p * ps0 * (1 - eta * ps1) - q * c01 * ps1
                  - q * eta * c10 * ps0 * ps1 - eta * s * c01 * ps0 * ps1)
    a3 = p * q * s * eta * c01 * ps1
    b1 = s * (p * q * ps0 * ps1 - q * (1 - q) * ps0 * ps1)
    b2 = s * (p * q * ps0 - p * q * ps1 - eta * p * s * ps0 * ps1
              + eta * (1 - q) * s * ps0 * ps1)
    b3 = eta * p * ps1 * s ** 2
    hi = min(1.0, eta * s / q)
    lo = min(max(0.0, (eta * s - p) / q), hi)  # rounding can push (eta*s - p)/q past hi
    return QuadraticRatio(a1, a2, a3, b1, b2, b3), lo, hi


def _state0_heavy_ratio(p, q, ps0, ps1, c01, c10, eta) -> tuple[QuadraticRatio, float, float]:
    """Objective along the tight budget line, as a quadratic ratio in pa1.

    Numerator and denominator both carry a flipped sign relative to the
    state1-heavy construction; the ratio is unchanged.
    """
    s = p + q
    a1 = p * q * (-p * ps0 * ps1 * (c10 + c01))
    a2 = p * q * (c10 * ps0 * (p + eta * s * ps1) - c01 * ps1 * (q - eta * s * ps0))
    a3 = p * q * (-eta * s * c10 * ps0)
    b1 = -s * p * ps0 * ps1 * (s - 1.0)
    b2 = s * (eta * s * ps0 * ps1 * (s - 1.0) - p * q * (ps1 - ps0))
    b3 = -s * eta * s * q * ps0
    hi = min(1.0, eta * s / p)
    lo = min(max(0.0, (eta * s - q) / p), hi)  # rounding can push (eta*s - q)/p past hi
    return QuadraticRatio(a1, a2, a3, b1, b2, b3), lo, hi


def optimize_constrained(src: SourceParams, ch: ChannelParams, cw: CostWeights,
                         eta: float) -> OptimizeResult:
    """Minimize the actuation-error cost subject to the sampling budget.

    eta >= 1 leaves the budget slack over the whole unit square, so it is
    clamped to 1 when building the tight-budget interval; the reported
    optimum still satisfies the original constraint.  eta = 0 forbids all
    sampling and is rejected as degenerate.
    """
    eta = float(eta)
    if not np.isfinite(eta) or eta < 0.0:
        raise ParameterError(f"eta must be finite and >= 0, got {eta}")
    if eta == 0.0:
        raise DegenerateModelError(
            "eta = 0 forces pa0 = pa1 = 0: the reconstruction can never track the source")
    p, q = src.p, src.q
    ps0, ps1 = ch.ps0, ch.ps1
    c01, c10 = cw.c01, cw.c10
    s = p + q
    eta_eff = min(eta, 1.0)

    state1_heavy = p * c10 >= q * c01
    if state1_heavy:
        branch = "state1-heavy"
        corner = (0.0, _snap01(min(1.0, eta * s / p)))
        # threshold on pa1 below which the cost grows with pa0 (scaled by ps1)
        forced = ps1 < (p * c10 - q * c01) / (p * c10 + (1 - q) * c01)
        ratio, lo, hi = _state1_heavy_ratio(p, q, ps0, ps1, c01, c10, eta_eff)
        lo, hi = _snap01(lo), _snap01(hi)

        def line_point(x: float) -> tuple[float, float]:
            x = _snap01(x)
            return x, _snap01(min(1.0, max(0.0, (eta_eff * s - q * x) / p)))

        thr_free, _ = monotonicity_conditions(src, ch, cw)

        def condition_ok(pa0: float, pa1: float) -> bool:
            return pa1 >= thr_free - 1e-12
    else:
        branch = "state0-heavy"
        corner = (_snap01(min(1.0, eta * s / q)), 0.0)
        forced = ps0 < (q * c01 - p * c10) / (q * c01 + (1 - p) * c10)
        ratio, lo, hi = _state0_heavy_ratio(p, q, ps0, ps1, c01, c10, eta_eff)
        lo, hi = _snap01(lo), _snap01(hi)

        def line_point(x: float) -> tuple[float, float]:
            x = _snap01(x)
            return _snap01(min(1.0, max(0.0, (eta_eff * s - p * x) / q))), x

        _, thr_free = monotonicity_conditions(src, ch, cw)

        def condition_ok(pa0: float, pa1: float) -> bool:
            return pa0 >= thr_free - 1e-12

    corner_value = objective(src, ch, cw, *corner)
    candidates: list[tuple[float, float, float, str]] = [(*corner, corner_value, "corner")]
    crit_pts: list[float] = []
    delta: float | None = None

    if not forced:
        crit_pts, delta = ratio.stationary_points(lo, hi)
        for x, kind in [(lo, "endpoint"), (hi, "endpoint")] + [(x, "interior") for x in crit_pts]:
            pa0, pa1 = line_point(x)
            candidates.append((pa0, pa1, objective(src, ch, cw, pa0, pa1), kind))

    pa0_star, pa1_star, value, kind = _pick_best(candidates)
    cond_ok = condition_ok(pa0_star, pa1_star) if kind != "corner" else None
    if kind == "interior" and (lo < (pa0_star if state1_heavy else pa1_star) < hi) is False:
        kind = "endpoint"
    if kind == "corner":
        case = SolutionCase.STATE1_HEAVY_CORNER if state1_heavy else SolutionCase.STATE0_HEAVY_CORNER
    elif kind == "interior":
        case = SolutionCase.STATE1_HEAVY_INTERIOR if state1_heavy else SolutionCase.STATE0_HEAVY_INTERIOR
    else:
        case = SolutionCase.STATE1_HEAVY_ENDPOINT if state1_heavy else SolutionCase.STATE0_HEAVY_ENDPOINT

    diag = OptimizerDiagnostics(
        branch=branch,
        eta_effective=eta_eff,
        interval=(lo, hi),
        discriminant=delta,
        critical_points=tuple(crit_pts),
        candidates=tuple((c[0], c[1], c[2]) for c in candidates),
        corner=corner,
        corner_value=corner_value,
        corner_forced=forced,
        condition_ok_at_candidate=cond_ok,
    )
    return OptimizeResult(pa0_star, pa1_star, value, case, diag)


def optimize_unconstrained(src: SourceParams, ch: ChannelParams,
                           cw: CostWeights) -> OptimizeResult:
    """Minimize the actuation-error cost with no sampling budget.

    Equivalent to a budget of eta = 1, which every (pa0, pa1) in the unit
    square satisfies.
    """
    return optimize_constrained(src, ch, cw, eta=1.0)


def minimize_pe_constrained(src: SourceParams, ch: ChannelParams, eta: float) -> OptimizeResult:
    """Minimize the reconstruction error rate under the sampling budget
    (unit costs collapse the cost objective to the error rate)."""
    return optimize_constrained(src, ch, CostWeights(1.0, 1.0), eta)


def _objective_grid(p, q, ps0, ps1, c01, c10, pa0, pa1):
    e0 = pa0 * ps0
    e1 = pa1 * ps1
    phi = p * e1 * (1.0 - e0) + e0 * (q + (1.0 - q) * e1)
    num = c01 * e1 * (1.0 - e0) + c10 * e0 * (1.0 - e1)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = p * q * num / ((p + q) * phi)
    return np.where(phi > 0.0, val, np.inf)


def grid_oracle(src: SourceParams, ch: ChannelParams, cw: CostWeights,
                eta: float, step: float) -> OptimizeResult:
    """Brute-force scan of the feasible set on a step grid.

    Scans every grid cell (no descent, no convexity assumption) plus the
    budget-boundary line sampled at the same resolution in each coordinate.
    The never-sampling point (0, 0) is excluded: it has no stationary cost.
    """
    if not (0.0 < step <= 0.1):
        raise ParameterError(f"step must lie in (0, 0.1], got {step}")
    if eta < 0.0:
        raise ParameterError(f"eta must be >= 0, got {eta}")
    if eta == 0.0:
        raise DegenerateModelError("eta = 0 admits only the never-sampling point")
    p, q = src.p, src.q
    ps0, ps1 = ch.ps0, ch.ps1
    c01, c10 = cw.c01, cw.c10
    s = p + q

    g = np.round(np.arange(0.0, 1.0 + step / 2, step), 12)
    g = np.minimum(g, 1.0)
    pa0g, pa1g = np.meshgrid(g, g, indexing="ij")
    feasible = q * pa0g + p * pa1g <= eta * s + 1e-12
    vals = _objective_grid(p, q, ps0, ps1, c01, c10, pa0g, pa1g)
    vals = np.where(feasible, vals, np.inf)

    pts = [pa0g.ravel(), pa1g.ravel(), vals.ravel()]
    # budget boundary, parameterized both ways
    bl1 = (eta * s - q * g) / p
    ok1 = (bl1 >= 0.0) & (bl1 <= 1.0)
    if ok1.any():
        v = _objective_grid(p, q, ps0, ps1, c01, c10, g[ok1], bl1[ok1])
        pts = [np.concatenate([pts[0], g[ok1]]),
               np.concatenate([pts[1], bl1[ok1]]),
               np.concatenate([pts[2], v])]
    bl0 = (eta * s - p * g) / q
    ok0 = (bl0 >= 0.0) & (bl0 <= 1.0)
    if ok0.any():
        v = _objective_grid(p, q, ps0, ps1, c01, c10, bl0[ok0], g[ok0])
        pts = [np.concatenate([pts[0], bl0[ok0]]),
               np.concatenate([pts[1], g[ok0]]),
               np.concatenate([pts[2], v])]

    pa0_all, pa1_all, v_all = pts
    finite = np.isfinite(v_all)
    if not finite.any():
        raise DegenerateModelError("no feasible grid point has a defined cost")
    vmin = v_all[finite].min()
    tol = _VALUE_TIE_TOL * max(1.0, abs(vmin))
    tied = finite & (v_all <= vmin + tol)
    order = np.lexsort((pa0_all[tied], pa0_all[tied] + pa1_all[tied]))
    idx = np.flatnonzero(tied)[order[0]]
    return OptimizeResult(float(pa0_all[idx]), float(pa1_all[idx]), float(v_all[idx]),
                          SolutionCase.GRID_SCAN, None)
