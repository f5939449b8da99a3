"""Source, channel, and policy models for remote tracking of a Markov source.

A two-state (or three-state) discrete-time Markov source X(t) is sampled by a
transmitter and sent over an erasure channel whose success probability depends
on the state being transmitted.  The receiver keeps the last successfully
received sample as its reconstruction X_hat(t).  The pair (X, X_hat) is itself
a Markov chain; this module builds that joint chain for each sampling policy
and computes its stationary distribution, both in closed form and through an
independent linear solve used as the numeric oracle.

Timeline convention for a slot: the source moves first, the policy then
decides whether to sample the *new* source state, and a transmitted sample is
delivered within the same slot with a success probability keyed to the state
being transmitted.  On success the reconstruction is refreshed, otherwise it
keeps its previous value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ParameterError",
    "DegenerateModelError",
    "ReducibleChainError",
    "SourceParams",
    "SourceParams3",
    "ChannelParams",
    "RsPolicy",
    "UniformPolicy",
    "ChangeAwarePolicy",
    "SemanticsAwarePolicy",
    "PolicyKind",
    "CostWeights",
    "JointChain",
    "JointStationary",
    "ThreeStateComparison",
    "effective_rates",
    "source_marginal",
    "build_joint_chain_rs",
    "build_joint_chain_change_aware",
    "build_joint_chain_semantics_aware",
    "build_joint_chain_rs3",
    "stationary_numeric",
    "stationary_rs",
    "stationary_change_aware",
    "stationary_semantics_aware",
    "stationary_three_state",
    "three_state_closed_form",
    "compare_three_state_forms",
]

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-12


class ParameterError(ValueError):
    """Invalid model parameter (out of range, missing, or inconsistent)."""


class DegenerateModelError(ValueError):
    """Model admits no meaningful stationary behaviour (e.g. nothing is ever sampled)."""


class ReducibleChainError(DegenerateModelError):
    """Joint chain has no unique stationary distribution."""


def _check_prob(name: str, value: float, lo: float, hi: float,
                lo_open: bool = False, hi_open: bool = False) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    if (value < lo or value > hi
            or (lo_open and value == lo) or (hi_open and value == hi)):
        lob = "(" if lo_open else "["
        hib = ")" if hi_open else "]"
        raise ParameterError(f"{name} must lie in {lob}{lo}, {hi}{hib}, got {value}")
    return value


@dataclass(frozen=True)
class SourceParams:
    """Two-state source chain: 0 -> 1 with probability p, 1 -> 0 with probability q.

    Both probabilities must be strictly inside (0, 1); boundary values make
    the chain absorbing or periodic and break the geometric run-length sums
    used by the error metrics.
    """

    p: float
    q: float

    def __post_init__(self):
        object.__setattr__(self, "p", _check_prob("p", self.p, 0.0, 1.0, True, True))
        object.__setattr__(self, "q", _check_prob("q", self.q, 0.0, 1.0, True, True))

    @property
    def n_states(self) -> int:
        return 2

    def transition_matrix(self) -> np.ndarray:
        return np.array([[1.0 - self.p, self.p], [self.q, 1.0 - self.q]])


@dataclass(frozen=True)
class SourceParams3:
    """Three-state source chain.

    Row structure: state 0 moves to 1 or 2 each with probability p; state 1
    drops to 0 with q and climbs to 2 with p; state 2 moves to 0 or 1 each
    with probability q.  Validity requires every row to be a strictly
    positive distribution: 0 < p, 0 < q, 2p < 1, 2q < 1, p + q < 1.
    """

    p: float
    q: float

    def __post_init__(self):
        p = float(self.p)
        q = float(self.q)
        if not (np.isfinite(p) and np.isfinite(q)):
            raise ParameterError("p and q must be finite")
        if not (p > 0 and q > 0 and 2 * p < 1 and 2 * q < 1 and p + q < 1):
            raise ParameterError(
                f"three-state source needs 0 < p, 0 < q, 2p < 1, 2q < 1, p+q < 1; got p={p}, q={q}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def n_states(self) -> int:
        return 3

    def transition_matrix(self) -> np.ndarray:
        p, q = self.p, self.q
        return np.array([
            [1.0 - 2 * p, p, p],
            [q, 1.0 - p - q, p],
            [q, q, 1.0 - 2 * q],
        ])


@dataclass(frozen=True)
class ChannelParams:
    """Per-state delivery probabilities of the erasure channel.

    ``ps0``/``ps1`` (and ``ps2`` for the three-state source) give the
    probability that a sample of that state is successfully decoded.  Each
    must be in (0, 1]: a state that can never be delivered freezes the
    reconstruction there forever.
    """

    ps0: float
    ps1: float
    ps2: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "ps0", _check_prob("ps0", self.ps0, 0.0, 1.0, lo_open=True))
        object.__setattr__(self, "ps1", _check_prob("ps1", self.ps1, 0.0, 1.0, lo_open=True))
        if self.ps2 is not None:
            object.__setattr__(self, "ps2", _check_prob("ps2", self.ps2, 0.0, 1.0, lo_open=True))

    def ps_vector(self, n_states: int) -> np.ndarray:
        if n_states == 2:
            return np.array([self.ps0, self.ps1])
        if self.ps2 is None:
            raise ParameterError("ps2 is required for a three-state source")
        return np.array([self.ps0, self.ps1, self.ps2])


@dataclass(frozen=True)
class RsPolicy:
    """Randomized stationary policy: sample-and-transmit state i with probability pa_i."""

    pa0: float
    pa1: float
    pa2: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "pa0", _check_prob("pa0", self.pa0, 0.0, 1.0))
        object.__setattr__(self, "pa1", _check_prob("pa1", self.pa1, 0.0, 1.0))
        if self.pa2 is not None:
            object.__setattr__(self, "pa2", _check_prob("pa2", self.pa2, 0.0, 1.0))

    def pa_vector(self, n_states: int) -> np.ndarray:
        if n_states == 2:
            return np.array([self.pa0, self.pa1])
        if self.pa2 is None:
            raise ParameterError("pa2 is required for a three-state source")
        return np.array([self.pa0, self.pa1, self.pa2])


@dataclass(frozen=True)
class UniformPolicy:
    """Sample every d-th slot (slots d, 2d, 3d, ... with slots counted from 1)."""

    d: int

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ParameterError(f"period d must be an integer >= 1, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))


@dataclass(frozen=True)
class ChangeAwarePolicy:
    """Sample exactly when the source changed state since the previous slot."""


@dataclass(frozen=True)
class SemanticsAwarePolicy:
    """Sample when the new source state differs from the current reconstruction.

    Equivalent two-branch reading: in sync, sample on a source change; in
    error, sample unless the source just moved onto the reconstructed state.
    Requires instantaneous ACK feedback so the transmitter knows X_hat.
    """


PolicyKind = Union[RsPolicy, UniformPolicy, ChangeAwarePolicy, SemanticsAwarePolicy]


@dataclass(frozen=True)
class CostWeights:
    """Actuation-error penalties: c01 for (X=0, X_hat=1), c10 for (X=1, X_hat=0)."""

    c01: float
    c10: float

    def __post_init__(self):
        c01, c10 = float(self.c01), float(self.c10)
        if not (np.isfinite(c01) and np.isfinite(c10)) or c01 < 0 or c10 < 0:
            raise ParameterError(f"costs must be finite and >= 0, got c01={c01}, c10={c10}")
        if c01 == 0 and c10 == 0:
            raise ParameterError("at least one of c01, c10 must be positive")
        object.__setattr__(self, "c01", c01)
        object.__setattr__(self, "c10", c10)

    def matrix(self, n_states: int = 2) -> np.ndarray:
        if n_states == 2:
            return np.array([[0.0, self.c01], [self.c10, 0.0]])
        # No per-pair weights are defined beyond the two-state case; treat
        # every mismatch as unit cost so cost reduces to the error indicator.
        m = np.ones((n_states, n_states)) - np.eye(n_states)
        return m


@dataclass(frozen=True)
class JointChain:
    """Joint (source, reconstruction) chain: ordered state list plus row-stochastic matrix."""

    states: tuple[tuple[int, int], ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (len(self.states), len(self.states)):
            raise ParameterError("matrix shape does not match state list")
        if np.any(m < -1e-15) or np.any(m > 1.0 + 1e-15):
            raise ParameterError("transition probabilities must lie in [0, 1]")
        rs = m.sum(axis=1)
        if np.any(np.abs(rs - 1.0) > ROW_SUM_TOL):
            raise ParameterError(f"rows must sum to 1 within {ROW_SUM_TOL}; worst off by {np.abs(rs - 1).max():.3e}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "states", tuple(tuple(s) for s in self.states))

    @property
    def n_source_states(self) -> int:
        return int(np.sqrt(len(self.states)))


@dataclass(frozen=True)
class JointStationary:
    """Stationary distribution over (source, reconstruction) pairs.

    ``probs[i, j]`` is the long-run probability of source state i with
    reconstruction j.  Entries are nonnegative and sum to one within 1e-12.
    """

    probs: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.probs, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ParameterError("stationary distribution must be a square matrix")
        if np.any(m < -1e-12):
            raise ParameterError(f"negative stationary mass: min={m.min():.3e}")
        m = np.where((m < 0) & (m > -1e-12), 0.0, m)
        if abs(m.sum() - 1.0) > STATIONARY_TOL:
            raise ParameterError(f"stationary mass must sum to 1 within {STATIONARY_TOL}, got {m.sum()!r}")
        m.flags.writeable = False
        object.__setattr__(self, "probs", m)

    @property
    def pi00(self) -> float:
        return float(self.probs[0, 0])

    @property
    def pi01(self) -> float:
        return float(self.probs[0, 1])

    @property
    def pi10(self) -> float:
        return float(self.probs[1, 0])

    @property
    def pi11(self) -> float:
        return float(self.probs[1, 1])

    def error_mass(self) -> float:
        """Total probability of mismatched (source, reconstruction) pairs."""
        return float(self.probs.sum() - np.trace(self.probs))


# ---------------------------------------------------------------------------
# Joint-chain construction
# ---------------------------------------------------------------------------

def effective_rates(ch: ChannelParams, pol: RsPolicy, n_states: int = 2) -> np.ndarray:
    """Per-state probability that a slot yields a successful refresh: pa_i * ps_i."""
    return pol.pa_vector(n_states) * ch.ps_vector(n_states)


def source_marginal(src: SourceParams) -> tuple[float, float]:
    """Stationary split of the two-state source: (time in 0, time in 1)."""
    s = src.p + src.q
    return src.q / s, src.p / s


def _pair_states(n: int) -> tuple[tuple[int, int], ...]:
    return tuple((i, j) for i in range(n) for j in range(n))


def _refresh_joint_matrix(src_matrix: np.ndarray, eff: np.ndarray) -> np.ndarray:
    """Joint matrix for policies that refresh the reconstruction with a
    state-keyed per-slot probability ``eff[new_state]``."""
    n = src_matrix.shape[0]
    m = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            row = i * n + j
            for i2 in range(n):
                m[row, i2 * n + i2] += src_matrix[i, i2] * eff[i2]
                m[row, i2 * n + j] += src_matrix[i, i2] * (1.0 - eff[i2])
    return m


def build_joint_chain_rs(src: SourceParams, ch: ChannelParams, pol: RsPolicy) -> JointChain:
    """Four-state joint chain for the randomized stationary policy.

    A slot refreshes the reconstruction with probability pa_i * ps_i where i
    is the state the source has just moved to.
    """
    eff = effective_rates(ch, pol, 2)
    return JointChain(_pair_states(2), _refresh_joint_matrix(src.transition_matrix(), eff))


def build_joint_chain_change_aware(src: SourceParams, ch: ChannelParams) -> JointChain:
    """Joint chain for the change-aware policy (sample iff the source moved).

    A transmission happens only on source transitions, succeeding with the
    probability of the new state.  When the source moves onto the current
    reconstruction the pair re-syncs regardless of the channel.
    """
    p, q = src.p, src.q
    ps0, ps1 = ch.ps0, ch.ps1
    m = np.zeros((4, 4))
    # rows/cols ordered (0,0),(0,1),(1,0),(1,1)
    m[0, 0] = 1 - p
    m[0, 3] = p * ps1
    m[0, 2] = p * (1 - ps1)
    m[1, 1] = 1 - p            # no change, no sample, error persists
    m[1, 3] = p                # source joins the reconstruction
    m[2, 2] = 1 - q
    m[2, 0] = q
    m[3, 3] = 1 - q
    m[3, 0] = q * ps0
    m[3, 1] = q * (1 - ps0)
    return JointChain(_pair_states(2), m)


def build_joint_chain_semantics_aware(src: SourceParams, ch: ChannelParams) -> JointChain:
    """Joint chain for the semantics-aware policy (sample iff new source state
    differs from the current reconstruction)."""
    p, q = src.p, src.q
    ps0, ps1 = ch.ps0, ch.ps1
    m = np.zeros((4, 4))
    m[0, 0] = 1 - p
    m[0, 3] = p * ps1
    m[0, 2] = p * (1 - ps1)
    m[1, 0] = (1 - p) * ps0    # stale reconstruction is re-targeted every slot
    m[1, 1] = (1 - p) * (1 - ps0)
    m[1, 3] = p
    m[2, 3] = (1 - q) * ps1
    m[2, 2] = (1 - q) * (1 - ps1)
    m[2, 0] = q
    m[3, 3] = 1 - q
    m[3, 0] = q * ps0
    m[3, 1] = q * (1 - ps0)
    return JointChain(_pair_states(2), m)


def build_joint_chain_rs3(src: SourceParams3, ch: ChannelParams, pol: RsPolicy) -> JointChain:
    """Nine-state joint chain for the randomized stationary policy over the
    three-state source, with the same per-slot refresh semantics."""
    eff = effective_rates(ch, pol, 3)
    return JointChain(_pair_states(3), _refresh_joint_matrix(src.transition_matrix(), eff))


# ---------------------------------------------------------------------------
# Stationary distributions
# ---------------------------------------------------------------------------

def stationary_numeric(chain: JointChain) -> JointStationary:
    """Solve pi P = pi, sum(pi) = 1 directly.

    One balance equation is replaced by the normalization row, which is exact
    at these sizes.  This is the oracle every closed form is tested against.
    Raises :class:`ReducibleChainError` when the system is singular or the
    solution fails the stationarity residual (multiple recurrent classes).
    """
    m = chain.matrix
    n = m.shape[0]
    a = m.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise ReducibleChainError(
            f"joint chain has no unique stationary distribution (singular system): states={chain.states}"
        ) from exc
    residual = np.abs(pi @ m - pi).max()
    if residual > 1e-9 or np.any(pi < -1e-9):
        raise ReducibleChainError(
            f"stationary solve failed (residual {residual:.3e}, min {pi.min():.3e}); "
            f"the chain is likely reducible: states={chain.states}, matrix=\n"
            f"{np.array2string(m, precision=6)}")
    pi = np.where(np.abs(pi) < 1e-15, 0.0, pi)
    k = chain.n_source_states
    return JointStationary(pi.reshape(k, k))


def _rs_denominator(p: float, q: float, e0: float, e1: float) -> float:
    """Shared denominator aggregate of the randomized-stationary closed forms."""
    return p * e1 * (1.0 - e0) + e0 * (q + (1.0 - q) * e1)


def stationary_rs(src: SourceParams, ch: ChannelParams, pol: RsPolicy) -> JointStationary:
    """Closed-form stationary distribution under the randomized stationary policy.

    Requires at least one state to have a positive effective refresh rate;
    otherwise the reconstruction never updates and the joint chain has no
    unique stationary distribution.
    """
    p, q = src.p, src.q
    e0, e1 = effective_rates(ch, pol, 2)
    phi = _rs_denominator(p, q, e0, e1)
    if phi <= 0.0:
        raise DegenerateModelError(
            f"policy never refreshes the reconstruction (pa0*ps0={e0}, pa1*ps1={e1})")
    den = (p + q) * phi
    probs = np.array([
        [q * e0 * (q + (1 - q) * e1) / den, p * q * e1 * (1 - e0) / den],
        [p * q * e0 * (1 - e1) / den, p * e1 * (p + (1 - p) * e0) / den],
    ])
    return JointStationary(probs)


def stationary_change_aware(src: SourceParams, ch: ChannelParams) -> JointStationary:
    """Closed-form stationary distribution under the change-aware policy."""
    p, q = src.p, src.q
    ps0, ps1 = ch.ps0, ch.ps1
    den = (p + q) * (ps0 + ps1 - ps0 * ps1)
    probs = np.array([
        [q * ps0 / den, q * ps1 * (1 - ps0) / den],
        [p * ps0 * (1 - ps1) / den, p * ps1 / den],
    ])
    return JointStationary(probs)


def stationary_semantics_aware(src: SourceParams, ch: ChannelParams) -> JointStationary:
    """Closed-form stationary distribution under the semantics-aware policy."""
    p, q = src.p, src.q
    ps0, ps1 = ch.ps0, ch.ps1
    theta = q * ps0 + (1 - q) * ps0 * ps1 + p * ps1 * (1 - ps0)
    den = (p + q) * theta
    probs = np.array([
        [q * ps0 * (q + (1 - q) * ps1) / den, p * q * ps1 * (1 - ps0) / den],
        [p * q * ps0 * (1 - ps1) / den, p * ps1 * (p + (1 - p) * ps0) / den],
    ])
    return JointStationary(probs)


def stationary_three_state(src3: SourceParams3, ch: ChannelParams, pol: RsPolicy) -> JointStationary:
    """Stationary distribution of the nine-state joint chain (numeric solve).

    The direct solve of the joint chain is the primary evaluator for the
    three-state source; use :func:`compare_three_state_forms` to check it
    against the algebraic expressions of :func:`three_state_closed_form`.
    """
    return stationary_numeric(build_joint_chain_rs3(src3, ch, pol))


def three_state_closed_form(src3: SourceParams3, ch: ChannelParams, pol: RsPolicy) -> np.ndarray:
    """Algebraic stationary expressions for the three-state source, verbatim.

    Kept as a secondary evaluator only: the expressions are long and are
    *not* trusted over the numeric solve.  The returned 3x3 array is not
    validated as a distribution; see :func:`compare_three_state_forms`.
    """
    p, q = src3.p, src3.q
    e0, e1, e2 = effective_rates(ch, pol, 3)

    z2 = (2 * p**3 * e2 * (e1 - 1)
          + q * e1 * (2 * q + e2 * (1 - 2 * q))
          + p**2 * (-3 * q * e1 + e2 * (1 - 5 * q + e1 * (8 * q - 3)))
          + p * (2 * q * (1 - q) * e2 + e1 * (q - 6 * q**2 + e2 * (1 - 7 * q + 8 * q**2))))
    z1 = ((2 * p + q)
          * (2 * p**3 * e2 * (e1 - 1)
             + q * e1 * (2 * q + e2 * (1 - 2 * q))
             + p**2 * (-3 * q * e1 + e2 * (1 - 5 * q + e1 * (8 * q - 3)))
             + p * (-2 * q * (q - 1) * e2 + e1 * (q - 6 * q**2 + e2 * (1 - 7 * q + 8 * q**2))))
          * (2 * p**2 * e2 * (e0 - 1) * (e1 - 1)
             + e0 * (e1 * (q - 1) - q) * (-2 * q + e2 * (2 * q - 1))
             + p * (q * e2 + e1 * (3 * q + (2 - 4 * q) * e2)
                    + e0 * (q - 4 * q * e1 + e2 * (1 - 2 * q + e1 * (5 * q - 3))))))

    pi = np.empty((3, 3))
    pi[0, 0] = (q**2 * (3 * p - 1) * e0 * e1
                * (p * (e2 - 1) - 2 * q + (2 * q - 1) * e2)
                * (p * (e1 - 1) * ((q - 1) * e2 - q)
                   + (e1 * (q - 1) - q) * ((2 * q - 1) * e2 - 2 * q))) / z1
    pi[0, 1] = (p * q**2 * (3 * p - 1) * e1 * (e0 - 1)
                * (p * (e2 - 1) - 2 * q + (2 * q - 1) * e2)
                * (2 * p * e2 * (e1 - 1) - q * e2
                   + e1 * (4 * q * e2 - 2 * e2 - 3 * q))) / z1
    pi[0, 2] = (p * q * e2 * (p * (e1 - 1) - 2 * q + (2 * q - 1) * e1)) / z2
    pi[1, 0] = (p * q**2 * (3 * p - 1) * e0 * e1 * (e1 - 1)
                * (p * (e2 - 1) + (2 * q - 1) * e2 - 2 * q)
                * ((3 * q - 1) * e2 - 3 * q)) / z1
    pi[1, 1] = (p * q * (3 * p - 1) * e1
                * (2 * p * e2 * (e1 - 1) - q * e2
                   + e1 * (4 * q * e2 - 2 * e2 - 3 * q))
                * (p * (e0 - 1) * (-3 * q + (3 * q - 2) * e2)
                   + e0 * (2 * q + e2 * (1 - 2 * q)))) / z1
    pi[1, 2] = (p * q * e2 * (1 - 3 * p) * (1 - e1)) / z2
    pi[2, 0] = (p * q**2 * (3 * p - 1) * e0 * e1 * (e2 - 1)
                * (2 * p * (e1 - 1) + (q - 1) * e1 - q)
                * (p * (e2 - 1) - 2 * q + (2 * q - 1) * e2)) / z1
    pi[2, 1] = (q * p**2 * (3 * p - 1) * e1 * (e2 - 1)
                * (2 * p * (e0 - 1) + (q - 1) * e0 - q)
                * (2 * p * e2 * (e1 - 1) - q * e2
                   + e1 * (4 * q * e2 - 2 * e2 - 3 * q))) / z1
    pi[2, 2] = (p * e2 * (p + 2 * p**2 * (e1 - 1) + p * (q - 3) * e1
                          + q - p * q + e1 * (1 - q))) / z2
    return pi


@dataclass(frozen=True)
class ThreeStateComparison:
    """Numeric solve vs algebraic expressions for the three-state stationary."""

    numeric: np.ndarray
    closed_form: np.ndarray
    max_abs_diff: float
    mismatched: bool
    tolerance: float

    def summary(self) -> str:
        if not self.mismatched:
            return f"closed form agrees with the numeric solve within {self.tolerance:g}"
        return (f"closed form disagrees with the numeric solve: max |diff| = "
                f"{self.max_abs_diff:.3e} (tolerance {self.tolerance:g}); "
                "the numeric solve is authoritative")


def compare_three_state_forms(src3: SourceParams3, ch: ChannelParams, pol: RsPolicy,
                              tolerance: float = 1e-8) -> ThreeStateComparison:
    """Check the three-state algebraic expressions against the numeric solve.

    Any entrywise difference above ``tolerance`` marks the comparison as
    mismatched; callers should report the summary rather than silently trust
    either side (the numeric solve wins on disagreement).
    """
    numeric = stationary_three_state(src3, ch, pol).probs
    closed = three_state_closed_form(src3, ch, pol)
    diff = float(np.abs(numeric - closed).max())
    return ThreeStateComparison(
        numeric=numeric,
        closed_form=closed,
        max_abs_diff=diff,
        mismatched=diff > tolerance,
        tolerance=tolerance,
    )
