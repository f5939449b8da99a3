"""Slot-by-slot Monte Carlo engine for all four sampling policies.

Each slot: the source advances, the policy decides whether to sample the new
state, a sampled state is transmitted within the slot and delivered with its
state-keyed success probability, and on delivery the reconstruction is
refreshed (ACK feedback is instantaneous; only the semantics-aware policy
reads it).

Randomness comes from three PCG64 streams spawned in a fixed order from the
config seed: one for the source transition, one for the policy decision
(consumed only by the randomized policy), one for the channel.  Every stream
draws exactly one uniform per slot, so runs are reproducible bit-for-bit and
policy comparisons under a shared seed see the same source path and channel
luck.  The hot loop is JIT-compiled; uniforms are generated in fixed-size
chunks, which does not affect the stream contents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numba import njit

from .model import (
    ChangeAwarePolicy,
    ChannelParams,
    CostWeights,
    ParameterError,
    PolicyKind,
    RsPolicy,
    SemanticsAwarePolicy,
    SourceParams,
    SourceParams3,
    UniformPolicy,
)

__all__ = [
    "SimConfig",
    "SimReport",
    "SlotContext",
    "decide_sample",
    "simulate",
    "empirical_sampling_cost",
]

_CHUNK = 1 << 20
_HIST_CAP = 1 << 16  # run lengths at or above the cap share the top bin

_POLICY_CODES = {RsPolicy: 0, UniformPolicy: 1, ChangeAwarePolicy: 2, SemanticsAwarePolicy: 3}


@dataclass(frozen=True)
class SimConfig:
    source: Union[SourceParams, SourceParams3]
    channel: ChannelParams
    policy: PolicyKind
    costs: CostWeights = CostWeights(1.0, 1.0)
    horizon: int = 1_000_000
    seed: int = 0
    burn_in: int = 10_000

    def __post_init__(self):
        if self.horizon < 1:
            raise ParameterError(f"horizon must be >= 1, got {self.horizon}")
        if not (0 <= self.burn_in < self.horizon):
            raise ParameterError(
                f"burn_in must satisfy 0 <= burn_in < horizon, got {self.burn_in}")
        if type(self.policy) not in _POLICY_CODES:
            raise ParameterError(f"unsupported policy {self.policy!r}")


@dataclass(frozen=True)
class SimReport:
    """Empirical counterparts of the closed-form metrics.

    ``consec_hist`` / ``importance_hist`` count maximal error runs clipped to
    the measured window, keyed by run length.  ``*_counter_hist`` count slots
    by the value of the running error counter, so normalizing by ``slots``
    estimates the run-length distribution.  Mean fields are slot-averages of
    the counters.
    """

    pe_hat: float
    cost_hat: float
    sampling_rate: float
    consec_hist: dict[int, int]
    importance_hist: dict[int, int]
    slots: int
    mean_consec_error: float
    mean_importance_error: float
    consec_counter_hist: dict[int, int] = field(repr=False, default_factory=dict)
    importance_counter_hist: dict[int, int] = field(repr=False, default_factory=dict)
    seed: int = 0


@dataclass(frozen=True)
class SlotContext:
    """Inputs available to a sampling decision at slot t.

    ``x`` is the source state after this slot's transition; ``x_prev`` and
    ``xhat_prev`` are the previous slot's source and reconstruction (None at
    the first slot).  ``u`` is this slot's policy-stream uniform, used only
    by the randomized policy.
    """

    t: int
    x: int
    x_prev: int | None
    xhat_prev: int | None
    u: float | None = None


def decide_sample(policy: PolicyKind, ctx: SlotContext) -> bool:
    """Sampling decision of each policy for one slot.

    Rules: uniform samples on slots t = d, 2d, ...; change-aware samples when
    the source moved; semantics-aware samples on a source change while in
    sync and whenever the source differs from the reconstruction while in
    error; the randomized policy samples state i with probability pa_i.  The
    transition-based policies never sample on a slot with no previous state.
    """
    if isinstance(policy, UniformPolicy):
        return ctx.t % policy.d == 0
    if isinstance(policy, ChangeAwarePolicy):
        return ctx.x_prev is not None and ctx.x != ctx.x_prev
    if isinstance(policy, SemanticsAwarePolicy):
        if ctx.x_prev is None or ctx.xhat_prev is None:
            return False
        if ctx.x_prev == ctx.xhat_prev:
            return ctx.x != ctx.x_prev
        return ctx.x != ctx.xhat_prev
    if isinstance(policy, RsPolicy):
        if ctx.u is None:
            raise ParameterError("randomized policy needs a uniform draw in the slot context")
        pa = (policy.pa0, policy.pa1, policy.pa2)[ctx.x]
        if pa is None:
            raise ParameterError("pa2 is required for a three-state source")
        return ctx.u < pa
    raise ParameterError(f"unsupported policy {policy!r}")


@njit(cache=True, nogil=True)
def _run_slots(src_cdf, pa, ps, policy_code, d, cost,
               x, xhat, ce, cs, run_len, imp_len, t0, burn_in,
               u_src, u_pol, u_ch,
               err_slots, cost_sum, sample_slots, ce_sum, cs_sum,
               run_hist, imp_hist, ce_hist, cs_hist):
    n = u_src.shape[0]
    cap = run_hist.shape[0]
    for k in range(n):
        t = t0 + k
        x_prev = x
        u = u_src[k]
        row = src_cdf[x]
        xn = 0
        while u >= row[xn]:
            xn += 1
        if policy_code == 0:
            sample = u_pol[k] < pa[xn]
        elif policy_code == 1:
            sample = (t % d) == 0
        elif policy_code == 2:
            sample = (t > 1) and (xn != x_prev)
        else:
            sample = (t > 1) and (xn != xhat)
        if sample and (u_ch[k] < ps[xn]):
            xhat = xn
        x = xn
        err = x != xhat
        if err:
            ce += 1
        else:
            ce = 0
        if x == 1 and xhat == 0:
            cs += 1
        else:
            cs = 0
        if t > burn_in:
            if err:
                err_slots += 1
                cost_sum += cost[x, xhat]
                run_len += 1
            elif run_len > 0:
                run_hist[min(run_len, cap - 1)] += 1
                run_len = 0
            if x == 1 and xhat == 0:
                imp_len += 1
            elif imp_len > 0:
                imp_hist[min(imp_len, cap - 1)] += 1
                imp_len = 0
            if sample:
                sample_slots += 1
            ce_sum += ce
            cs_sum += cs
            ce_hist[min(ce, cap - 1)] += 1
            cs_hist[min(cs, cap - 1)] += 1
    return (x, xhat, ce, cs, run_len, imp_len,
            err_slots, cost_sum, sample_slots, ce_sum, cs_sum)


def _hist_dict(arr: np.ndarray, skip_zero: bool = False) -> dict[int, int]:
    idx = np.flatnonzero(arr)
    return {int(i): int(arr[i]) for i in idx if not (skip_zero and i == 0)}


def simulate(cfg: SimConfig) -> SimReport:
    """Run one seeded simulation and return its empirical metrics.

    Starts synced at state 0; the first ``burn_in`` slots are excluded from
    every average and histogram.  Runs clipped by the window edges are
    recorded at their within-window length, so histogram mass equals the
    number of erroneous slots observed.  For a three-state source the cost
    weights apply as unit penalties on any mismatch.
    """
    n = cfg.source.n_states
    src = cfg.source.transition_matrix()
    src_cdf = np.cumsum(src, axis=1)
    src_cdf[:, -1] = 1.0 + 1e-12  # guard against u == 1 boundary
    if isinstance(cfg.policy, RsPolicy):
        pa = cfg.policy.pa_vector(n).astype(float)
    else:
        pa = np.zeros(n)
    ps = cfg.channel.ps_vector(n).astype(float)
    d = cfg.policy.d if isinstance(cfg.policy, UniformPolicy) else 1
    code = _POLICY_CODES[type(cfg.policy)]
    cost = cfg.costs.matrix(n)

    streams = [np.random.default_rng(c) for c in np.random.SeedSequence(cfg.seed).spawn(3)]
    s_src, s_pol, s_ch = streams

    run_hist = np.zeros(_HIST_CAP, dtype=np.int64)
    imp_hist = np.zeros(_HIST_CAP, dtype=np.int64)
    ce_hist = np.zeros(_HIST_CAP, dtype=np.int64)
    cs_hist = np.zeros(_HIST_CAP, dtype=np.int64)

    x = xhat = 0
    ce = cs = run_len = imp_len = 0
    err_slots = sample_slots = 0
    cost_sum = ce_sum = cs_sum = 0.0
    t0 = 1
    left = cfg.horizon
    while left > 0:
        m = min(_CHUNK, left)
        (x, xhat, ce, cs, run_len, imp_len,
         err_slots, cost_sum, sample_slots, ce_sum, cs_sum) = _run_slots(
            src_cdf, pa, ps, code, d, cost,
            x, xhat, ce, cs, run_len, imp_len, t0, cfg.burn_in,
            s_src.random(m), s_pol.random(m), s_ch.random(m),
            err_slots, cost_sum, sample_slots, ce_sum, cs_sum,
            run_hist, imp_hist, ce_hist, cs_hist)
        t0 += m
        left -= m
    if run_len > 0:
        run_hist[min(run_len, _HIST_CAP - 1)] += 1
    if imp_len > 0:
        imp_hist[min(imp_len, _HIST_CAP - 1)] += 1

    slots = cfg.horizon - cfg.burn_in
    return SimReport(
        pe_hat=err_slots / slots,
        cost_hat=cost_sum / slots,
        sampling_rate=sample_slots / slots,
        consec_hist=_hist_dict(run_hist),
        importance_hist=_hist_dict(imp_hist),
        slots=slots,
        mean_consec_error=ce_sum / slots,
        mean_importance_error=cs_sum / slots,
        consec_counter_hist=_hist_dict(ce_hist),
        importance_counter_hist=_hist_dict(cs_hist),
        seed=cfg.seed,
    )


def empirical_sampling_cost(report: SimReport, delta: float) -> float:
    """Time-averaged sampling cost at per-sample price delta."""
    return delta * report.sampling_rate
