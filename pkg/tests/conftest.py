"""Shared helpers: random model tuples, truncated-series oracles, and a
pure-Python reference simulator used to cross-check the compiled kernel."""

from __future__ import annotations

import numpy as np
import pytest

from semtrack.model import ChannelParams, RsPolicy, SourceParams
from semtrack.sim import SimConfig, SlotContext, decide_sample

# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def rand_model(rng: np.random.Generator, p_range=(0.02, 0.98), ps_lo=0.05,
               pa_lo=0.0, require_refresh=True):
    """Random valid (source, channel, policy) tuple."""
    while True:
        src = SourceParams(rng.uniform(*p_range), rng.uniform(*p_range))
        ch = ChannelParams(rng.uniform(ps_lo, 1.0), rng.uniform(ps_lo, 1.0))
        pol = RsPolicy(rng.uniform(pa_lo, 1.0), rng.uniform(pa_lo, 1.0))
        if not require_refresh or pol.pa0 * ch.ps0 > 1e-6 or pol.pa1 * ch.ps1 > 1e-6:
            return src, ch, pol


def truncated_series_sum(term, start=1):
    """Sum term(i) for i >= start until the term drops below 1e-15 past i > 10.

    Valid for the geometric-tail series used here; diverging input would loop,
    so callers must respect the convergence preconditions.
    """
    total = 0.0
    i = start
    while True:
        t = term(i)
        total += t
        if t < 1e-15 and i > 10:
            return total
        i += 1
        if i > 10_000_000:
            raise RuntimeError("series did not decay; check convergence conditions")


def truncated_series_mean(pmf):
    return truncated_series_sum(lambda i: i * pmf(i))


def reference_simulate(cfg: SimConfig):
    """Slot loop in plain Python over the same three uniform streams.

    Independent of the compiled kernel except for the shared stream layout
    (source, policy, channel; one draw per slot each).  Returns the same
    aggregate quantities for bit-for-bit comparison on short horizons.
    """
    n = cfg.source.n_states
    src_cdf = np.cumsum(cfg.source.transition_matrix(), axis=1)
    src_cdf[:, -1] = 1.0 + 1e-12
    ps = cfg.channel.ps_vector(n)
    cost = cfg.costs.matrix(n)
    s_src, s_pol, s_ch = [np.random.default_rng(c)
                          for c in np.random.SeedSequence(cfg.seed).spawn(3)]

    x = xhat = 0
    ce = cs = 0
    err_slots = sample_slots = 0
    cost_sum = ce_sum = cs_sum = 0.0
    run_len = imp_len = 0
    run_hist: dict[int, int] = {}
    imp_hist: dict[int, int] = {}
    for t in range(1, cfg.horizon + 1):
        u_src = s_src.random()
        u_pol = s_pol.random()
        u_ch = s_ch.random()
        x_prev = x
        row = src_cdf[x]
        xn = 0
        while u_src >= row[xn]:
            xn += 1
        ctx = SlotContext(t=t, x=xn,
                          x_prev=x_prev if t > 1 else None,
                          xhat_prev=xhat if t > 1 else None,
                          u=u_pol)
        sample = decide_sample(cfg.policy, ctx)
        if sample and u_ch < ps[xn]:
            xhat = xn
        x = xn
        ce = ce + 1 if x != xhat else 0
        cs = cs + 1 if (x == 1 and xhat == 0) else 0
        if t > cfg.burn_in:
            if x != xhat:
                err_slots += 1
                cost_sum += cost[x, xhat]
                run_len += 1
            elif run_len:
                run_hist[run_len] = run_hist.get(run_len, 0) + 1
                run_len = 0
            if x == 1 and xhat == 0:
                imp_len += 1
            elif imp_len:
                imp_hist[imp_len] = imp_hist.get(imp_len, 0) + 1
                imp_len = 0
            if sample:
                sample_slots += 1
            ce_sum += ce
            cs_sum += cs
    if run_len:
        run_hist[run_len] = run_hist.get(run_len, 0) + 1
    if imp_len:
        imp_hist[imp_len] = imp_hist.get(imp_len, 0) + 1
    slots = cfg.horizon - cfg.burn_in
    return {
        "pe_hat": err_slots / slots,
        "cost_hat": cost_sum / slots,
        "sampling_rate": sample_slots / slots,
        "mean_consec_error": ce_sum / slots,
        "mean_importance_error": cs_sum / slots,
        "consec_hist": run_hist,
        "importance_hist": imp_hist,
        "slots": slots,
    }


@pytest.fixture(scope="session")
def warm_kernel():
    """Compile the simulation kernel once so timing-sensitive tests are clean."""
    from semtrack.sim import simulate

    cfg = SimConfig(source=SourceParams(0.3, 0.2), channel=ChannelParams(0.5, 0.5),
                    policy=RsPolicy(0.5, 0.5), horizon=2_000, seed=0, burn_in=0)
    simulate(cfg)
    return True
