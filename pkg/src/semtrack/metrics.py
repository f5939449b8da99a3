"""Closed-form error metrics for the tracked Markov source.

Everything here is an exact function of the joint stationary distribution and
the model parameters: the time-averaged reconstruction error, the average
cost of actuation error, the run-length (consecutive error) distribution with
its mean and tail probabilities, and the importance-aware variant that only
counts runs of the costly (source=1, reconstruction=0) mismatch.

The run-length quantities treat the current run length as a counter process:
value 0 in sync, incremented each erroneous slot.  Means are stationary
expectations of that counter, so a slot-average over a long simulation
converges to them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .model import (
    ChannelParams,
    CostWeights,
    DegenerateModelError,
    JointStationary,
    ParameterError,
    RsPolicy,
    SourceParams,
    _rs_denominator,
    effective_rates,
    stationary_rs,
    stationary_semantics_aware,
)

__all__ = [
    "ConsecErrorSpec",
    "MetricReport",
    "MonotonicityReport",
    "reconstruction_error_rate",
    "rs_reconstruction_error",
    "actuation_error_cost",
    "rs_actuation_cost",
    "consec_error_pmf",
    "consec_transition_prob",
    "avg_consecutive_error",
    "violation_probability",
    "importance_pmf",
    "importance_transition",
    "importance_reset_prob",
    "avg_importance_consec",
    "avg_importance_consec_mirrored",
    "rs_vs_semantics_thresholds",
    "rs_beats_semantics",
    "monotone_error_regions",
    "metric_report",
]


@dataclass(frozen=True)
class ConsecErrorSpec:
    """Bundle of parameters + matching stationary distribution for run-length metrics.

    ``stationary`` must be the randomized-stationary distribution for exactly
    these parameters; build through :meth:`from_params` to guarantee that.
    """

    source: SourceParams
    channel: ChannelParams
    policy: RsPolicy
    stationary: JointStationary

    @classmethod
    def from_params(cls, source: SourceParams, channel: ChannelParams,
                    policy: RsPolicy) -> "ConsecErrorSpec":
        return cls(source, channel, policy, stationary_rs(source, channel, policy))


def _unpack(spec: ConsecErrorSpec):
    e0, e1 = effective_rates(spec.channel, spec.policy, 2)
    st = spec.stationary
    return spec.source.p, spec.source.q, float(e0), float(e1), st


def reconstruction_error_rate(st: JointStationary) -> float:
    """Probability that source and reconstruction disagree (fraction of erroneous slots)."""
    return st.error_mass()


def rs_reconstruction_error(src: SourceParams, ch: ChannelParams, pol: RsPolicy) -> float:
    """Error rate of the randomized stationary policy as an explicit parameter ratio.

    Independent of :func:`reconstruction_error_rate` applied to the closed-form
    stationary distribution; the two routes agree to machine precision.
    """
    p, q = src.p, src.q
    e0, e1 = effective_rates(ch, pol, 2)
    phi = _rs_denominator(p, q, e0, e1)
    if phi <= 0.0:
        raise DegenerateModelError("policy never refreshes the reconstruction")
    return p * q * (e1 + e0 * (1.0 - 2.0 * e1)) / ((p + q) * phi)


def actuation_error_cost(st: JointStationary, cw: CostWeights) -> float:
    """Long-run cost of acting on a wrong reconstruction: c01*pi01 + c10*pi10."""
    return cw.c01 * st.pi01 + cw.c10 * st.pi10


def rs_actuation_cost(src: SourceParams, ch: ChannelParams, pol: RsPolicy,
                      cw: CostWeights) -> float:
    """Actuation-error cost of the randomized stationary policy as an explicit ratio."""
    p, q = src.p, src.q
    e0, e1 = effective_rates(ch, pol, 2)
    phi = _rs_denominator(p, q, e0, e1)
    if phi <= 0.0:
        raise DegenerateModelError("policy never refreshes the reconstruction")
    num = cw.c01 * e1 * (1.0 - e0) + cw.c10 * e0 * (1.0 - e1)
    return p * q * num / ((p + q) * phi)


# ---------------------------------------------------------------------------
# Consecutive (run-length) error
# ---------------------------------------------------------------------------

def consec_error_pmf(spec: ConsecErrorSpec, i: int) -> float:
    """Stationary probability that the error run counter equals i.

    A run of length i >= 1 starts from a synced slot, survives i erroneous
    slots, and each erroneous slot both keeps the source away from the
    reconstruction and fails to refresh it.
    """
    if i < 0:
        raise ParameterError("run length must be >= 0")
    p, q, e0, e1, st = _unpack(spec)
    if i == 0:
        return st.pi00 + st.pi11
    return (p * (1 - q) ** (i - 1) * (1 - e1) ** i * st.pi00
            + q * (1 - p) ** (i - 1) * (1 - e0) ** i * st.pi11)


def consec_transition_prob(spec: ConsecErrorSpec, i: int) -> float:
    """Probability the error run grows from length i to i+1.

    Equals consec_error_pmf(i+1) / consec_error_pmf(i); evaluated from the
    factored expressions, which stay stable for large i.
    """
    if i < 0:
        raise ParameterError("run length must be >= 0")
    p, q, e0, e1, st = _unpack(spec)
    if i == 0:
        den = st.pi00 + st.pi11
        if den == 0.0:
            raise DegenerateModelError("conditional undefined: P[run = 0] is zero")
        return (p * (1 - e1) * st.pi00 + q * (1 - e0) * st.pi11) / den
    num = (p * (1 - q) ** i * (1 - e1) ** (i + 1) * st.pi00
           + q * (1 - p) ** i * (1 - e0) ** (i + 1) * st.pi11)
    den = (p * (1 - q) ** (i - 1) * (1 - e1) ** i * st.pi00
           + q * (1 - p) ** (i - 1) * (1 - e0) ** i * st.pi11)
    if den == 0.0:
        raise DegenerateModelError(f"conditional undefined: P[run = {i}] is zero")
    return num / den


def _check_convergence(p: float, q: float, e0: float, e1: float) -> None:
    # Guaranteed by the strict-interior source invariants; kept as a guard
    # with the failing condition named.
    if abs((1 - p) * (1 - e0)) >= 1.0:
        raise DegenerateModelError(
            f"run-length series diverges: |(1-p)(1-pa0*ps0)| = {abs((1 - p) * (1 - e0))} >= 1")
    if abs((1 - q) * (1 - e1)) >= 1.0:
        raise DegenerateModelError(
            f"run-length series diverges: |(1-q)(1-pa1*ps1)| = {abs((1 - q) * (1 - e1))} >= 1")


def avg_consecutive_error(spec: ConsecErrorSpec) -> float:
    """Stationary mean of the error run counter."""
    p, q, e0, e1, st = _unpack(spec)
    _check_convergence(p, q, e0, e1)
    return (p * (1 - e1) * st.pi00 / (q + (1 - q) * e1) ** 2
            + q * (1 - e0) * st.pi11 / (p + (1 - p) * e0) ** 2)


def violation_probability(spec: ConsecErrorSpec, n: int) -> float:
    """Stationary probability that the error run exceeds n slots.

    At n = 0 this reduces to the reconstruction error rate.  Perfect refresh
    of a state makes its geometric factor an exact zero.
    """
    if n < 0:
        raise ParameterError("n must be >= 0")
    p, q, e0, e1, _ = _unpack(spec)
    phi = _rs_denominator(p, q, e0, e1)
    if phi <= 0.0:
        raise DegenerateModelError("policy never refreshes the reconstruction")
    den = (p + q) * phi
    term10 = p * q * e0 * ((1 - q) * (1 - e1)) ** (n + 1) / ((1 - q) * den)
    term01 = p * q * e1 * ((1 - p) * (1 - e0)) ** (n + 1) / ((1 - p) * den)
    return term10 + term01


# ---------------------------------------------------------------------------
# Importance-aware consecutive error: runs of the (source=1, reconstruction=0) mismatch
# ---------------------------------------------------------------------------

def importance_pmf(spec: ConsecErrorSpec, i: int) -> float:
    """Stationary probability that the (1,0)-mismatch run counter equals i."""
    if i < 0:
        raise ParameterError("run length must be >= 0")
    p, q, e0, e1, st = _unpack(spec)
    if i == 0:
        return 1.0 - st.pi10
    return p * (1 - q) ** (i - 1) * (1 - e1) ** i * st.pi00


def importance_transition(spec: ConsecErrorSpec, i: int) -> float:
    """Probability the (1,0)-mismatch run grows from length i to i+1.

    Constant in i for i >= 1: the run survives while the source stays at 1
    and the refresh keeps failing.
    """
    if i < 0:
        raise ParameterError("run length must be >= 0")
    p, q, e0, e1, st = _unpack(spec)
    if i == 0:
        return p * (1 - e1) * st.pi00 / (1.0 - st.pi10)
    return (1 - q) * (1 - e1)


def importance_reset_prob(spec: ConsecErrorSpec, i: int) -> float:
    """Probability the (1,0)-mismatch run resets to 0 from length i (complement rule)."""
    return 1.0 - importance_transition(spec, i)


def avg_importance_consec(spec: ConsecErrorSpec) -> float:
    """Stationary mean of the (1,0)-mismatch run counter.

    Defined for pa0, pa1 > 0.  The pa0 -> 0 limit of the expression is 0 and
    the pa1 -> 0 limit stays finite, but both are rejected to match the
    stated domain of the closed form.
    """
    if spec.policy.pa0 == 0.0 or spec.policy.pa1 == 0.0:
        raise ParameterError(
            "importance-aware mean requires pa0 > 0 and pa1 > 0 "
            f"(got pa0={spec.policy.pa0}, pa1={spec.policy.pa1})")
    p, q, e0, e1, _ = _unpack(spec)
    _check_convergence(p, q, e0, e1)
    phi = _rs_denominator(p, q, e0, e1)
    return (p * q * e0 * (1 - e1)
            / ((p + q) * (q + (1 - q) * e1) * phi))


def avg_importance_consec_mirrored(spec: ConsecErrorSpec) -> float:
    """Mean run length of the opposite (source=0, reconstruction=1) mismatch.

    Computed by swapping the roles of the two states (p <-> q, state-0 and
    state-1 sampling/channel parameters exchanged).
    """
    swapped = ConsecErrorSpec.from_params(
        SourceParams(p=spec.source.q, q=spec.source.p),
        ChannelParams(ps0=spec.channel.ps1, ps1=spec.channel.ps0),
        RsPolicy(pa0=spec.policy.pa1, pa1=spec.policy.pa0),
    )
    return avg_importance_consec(swapped)


# ---------------------------------------------------------------------------
# Policy-dominance thresholds and monotone regions
# ---------------------------------------------------------------------------

def rs_vs_semantics_thresholds(src: SourceParams, ch: ChannelParams,
                               cw: CostWeights) -> tuple[float, Callable[[float], float]]:
    """Thresholds delimiting where randomized sampling beats the semantics-aware policy.

    Returns ``(t1, t2)`` where ``t1`` is the sampling-probability threshold for
    state 1 and ``t2(pa1)`` the matching threshold for state 0.  ``t2`` raises
    :class:`DegenerateModelError` at its pole (pa1 equal to t1) rather than
    clamping.
    """
    p, q = src.p, src.q
    ps0, ps1 = ch.ps0, ch.ps1
    c01, c10 = cw.c01, cw.c10
    n1 = p * c10 + c10 * ps0 - p * c10 * ps0 - q * c01 * (1 - ps0)
    d = c10 * (1 - p) * ps0 + p * c10 * ps1 + c01 * (1 - q) * ps1 + q * c01 * ps0
    t1 = n1 / d
    n2 = c01 * (q + (1 - q) * ps1) - p * c10 * (1 - ps1)

    def t2(pa1: float) -> float:
        den = pa1 * d - n1
        if den == 0.0:
            raise DegenerateModelError(
                f"state-0 threshold undefined at pa1={pa1} (denominator is zero)")
        return pa1 * n2 / den

    return t1, t2


def rs_beats_semantics(src: SourceParams, ch: ChannelParams, cw: CostWeights,
                       pa0: float, pa1: float) -> bool:
    """Whether (pa0, pa1) lies in a region where the randomized stationary
    policy has actuation cost at most that of the semantics-aware policy.

    Tests membership of the two published regions; outside them nothing is
    claimed either way.
    """
    t1, t2 = rs_vs_semantics_thresholds(src, ch, cw)
    try:
        if max(0.0, t1) <= pa1 <= 1.0 and max(0.0, t2(pa1)) <= pa0 <= 1.0:
            return True
        if 0.0 <= pa1 <= min(0.0, t1) and 0.0 <= pa0 <= min(0.0, t2(pa1)):
            return True
    except DegenerateModelError:
        return False
    return False


@dataclass(frozen=True)
class MonotonicityReport:
    """Where the error rate and actuation cost decrease in the source speeds.

    ``*_feasible`` flags whether the sampling-probability side condition can
    hold at all (its bound lies in [0, 1] with a positive denominator).
    """

    pa1_lower_bound: float
    p_threshold: float
    decreasing_in_p_feasible: bool
    decreasing_in_p: bool
    pa0_lower_bound: float
    q_threshold: float
    decreasing_in_q_feasible: bool
    decreasing_in_q: bool


def monotone_error_regions(src: SourceParams, ch: ChannelParams,
                           pol: RsPolicy) -> MonotonicityReport:
    """Evaluate the region conditions under which the error metrics decrease
    as the source moves faster (larger p, respectively larger q)."""
    p, q = src.p, src.q
    e0, e1 = effective_rates(ch, pol, 2)
    ps0, ps1 = ch.ps0, ch.ps1

    den_p = 1.0 - e0 * (1.0 + q * (1.0 - q))
    if den_p > 0:
        pa1_lb = q * q * e0 / (ps1 * den_p)
    else:
        pa1_lb = math.inf
    if e1 > 0 and e0 < 1:
        p_thr = math.sqrt(q * e0 * (q + (1 - q) * e1) / (e1 * (1 - e0)))
    else:
        p_thr = math.inf
    p_feasible = pa1_lb <= 1.0 and p_thr < 1.0
    dec_p = (pa1_lb <= pol.pa1 <= 1.0) and (p_thr < p <= 1.0)

    den_q = 1.0 - e1 * (1.0 + p * (1.0 - p))
    if den_q > 0:
        pa0_lb = p * p * e1 / (ps0 * den_q)
    else:
        pa0_lb = math.inf
    if e0 > 0 and e1 < 1:
        q_thr = math.sqrt((p * e0 * e1 + p * p * e1 * (1 - e0)) / (e0 * (1 - e1)))
    else:
        q_thr = math.inf
    q_feasible = pa0_lb <= 1.0 and q_thr < 1.0
    dec_q = (pa0_lb <= pol.pa0 <= 1.0) and (q_thr < q <= 1.0)

    return MonotonicityReport(
        pa1_lower_bound=pa1_lb,
        p_threshold=p_thr,
        decreasing_in_p_feasible=p_feasible,
        decreasing_in_p=dec_p,
        pa0_lower_bound=pa0_lb,
        q_threshold=q_thr,
        decreasing_in_q_feasible=q_feasible,
        decreasing_in_q=dec_q,
    )


# ---------------------------------------------------------------------------
# Aggregate report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricReport:
    """All closed-form metrics for one (source, channel, policy, costs) tuple.

    ``cbar_s`` is None when either sampling probability is zero (outside the
    closed form's domain).
    """

    pe: float
    cost: float
    cbar_e: float
    cbar_s: float | None
    violation: dict[int, float]


def metric_report(src: SourceParams, ch: ChannelParams, pol: RsPolicy,
                  cw: CostWeights, n_values: tuple[int, ...] = (0, 1, 2, 5, 10)) -> MetricReport:
    spec = ConsecErrorSpec.from_params(src, ch, pol)
    try:
        cbar_s = avg_importance_consec(spec)
    except ParameterError:
        cbar_s = None
    return MetricReport(
        pe=reconstruction_error_rate(spec.stationary),
        cost=actuation_error_cost(spec.stationary, cw),
        cbar_e=avg_consecutive_error(spec),
        cbar_s=cbar_s,
        violation={int(n): violation_probability(spec, int(n)) for n in n_values},
    )
