"""Exact long-run analysis of the joint (nature x automaton) chain.

Round order, fixed here and mirrored by the simulator: the agent first
collects the reward of its current state under the current nature state;
if risky, a signal is drawn from the current state's distribution and the
automaton transitions (safe states take their no-signal transition); then
nature flips with probability pi. The joint one-step matrix therefore
factors as P[(t,q) -> (t',q')] = A_t(q -> q') * T(t -> t').

The long-run average payoff of an irreducible chain equals the stationary
expectation of the reward vector (via the Cesaro limit, so periodic chains
need no special handling). The stationary distribution comes from a dense
direct solve of (P^T - I) x = 0 with the last equation replaced by
normalization; dimensions stay small at desk scale.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .automaton import NO_SIGNAL, RISKY, SAFE, AutomatonPolicy, check_policy
from .dynamic_env import DynamicSetting
from .errors import (
    BadEtaError,
    DimensionMismatchError,
    ReducibleChainError,
    SolveFailedError,
    ValidationError,
)

NATURE_STATES = ("G", "B")

STATIONARY_TOL = 1e-10


@dataclass(frozen=True)
class JointChainModel:
    """Transition matrix and rewards over (nature, automaton-state) pairs.

    Row index = nature_index * num_agent_states + agent_state, with nature
    index 0 = G, 1 = B.
    """

    dim: int
    P: np.ndarray
    reward: np.ndarray
    num_agent_states: int

    def index_of(self, nature: str, agent_state: int) -> int:
        return NATURE_STATES.index(nature) * self.num_agent_states + agent_state

    def state_of(self, row: int) -> tuple[str, int]:
        return NATURE_STATES[row // self.num_agent_states], row % self.num_agent_states


@dataclass(frozen=True)
class StationaryDist:
    mu: np.ndarray
    residual: float


def agent_step_matrix(policy: AutomatonPolicy, signal_probs) -> np.ndarray:
    """One-step matrix of the automaton under a fixed signal distribution.

    Safe states take their no-signal row; every other state averages its
    signal rows under ``signal_probs``.
    """
    m = policy.num_states
    k = len(signal_probs)
    out = np.zeros((m, m))
    for q in range(m):
        if policy.actions[q] == SAFE:
            for nxt, p in policy.kernel[(q, NO_SIGNAL)].items():
                out[q, nxt] += p
        else:
            for s in range(1, k + 1):
                ps = signal_probs[s - 1]
                if ps == 0.0:
                    continue
                for nxt, p in policy.kernel[(q, s)].items():
                    out[q, nxt] += ps * p
    return out


def build_joint_chain(setting: DynamicSetting, policy: AutomatonPolicy) -> JointChainModel:
    """Compose the automaton with switching nature into one Markov chain."""
    if not all(a in (SAFE, RISKY) for a in policy.actions):
        raise DimensionMismatchError(
            "joint chain needs Safe/Risky action labels, got "
            f"{sorted(set(policy.actions))}"
        )
    try:
        check_policy(policy, setting.k)
    except ValidationError as exc:
        raise DimensionMismatchError(
            f"policy does not consume signals 1..{setting.k}: {exc}"
        ) from exc
    m = policy.num_states
    a_good = agent_step_matrix(policy, setting.pG)
    a_bad = agent_step_matrix(policy, setting.pB)
    pi = setting.pi
    dim = 2 * m
    P = np.zeros((dim, dim))
    P[:m, :m] = a_good * (1.0 - pi)
    P[:m, m:] = a_good * pi
    P[m:, :m] = a_bad * pi
    P[m:, m:] = a_bad * (1.0 - pi)
    reward = np.zeros(dim)
    for q in range(m):
        if policy.actions[q] == RISKY:
            reward[q] = setting.xG
            reward[m + q] = setting.xB
    return JointChainModel(dim=dim, P=P, reward=reward, num_agent_states=m)


def _connectivity_gaps(P: np.ndarray) -> tuple[set[int], set[int]]:
    """States unreachable from row 0 and states that cannot reach row 0."""
    n = P.shape[0]
    adj = P > 0.0

    def reach(transpose: bool) -> set[int]:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            row = adj[:, u] if transpose else adj[u]
            for v in np.flatnonzero(row):
                v = int(v)
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    forward = reach(False)
    backward = reach(True)
    return set(range(n)) - forward, set(range(n)) - backward


def check_irreducible(chain: JointChainModel) -> None:
    """Raise ReducibleChainError naming the cut-off states, if any."""
    not_from_start, not_to_start = _connectivity_gaps(chain.P)
    if not_from_start or not_to_start:
        labels = []
        for row in sorted(not_from_start | not_to_start):
            nature, q = chain.state_of(row)
            labels.append(f"({nature}, q={q})")
        raise ReducibleChainError(
            "joint chain is not irreducible; cut-off states: " + ", ".join(labels),
            unreachable=labels,
        )


def stationary(chain: JointChainModel) -> StationaryDist:
    """Unique stationary distribution of an irreducible chain."""
    check_irreducible(chain)
    n = chain.dim
    A = chain.P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        mu = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SolveFailedError(f"stationary solve failed: {exc}") from exc
    # The solve can leave harmless -1e-17 style noise; anything worse means
    # the system was ill-conditioned beyond what we accept.
    if mu.min() < -1e-12:
        raise SolveFailedError(f"stationary solve produced mass {mu.min()!r}")
    mu = np.where(mu < 0.0, 0.0, mu)
    residual = float(np.max(np.abs(mu @ chain.P - mu)))
    if residual > STATIONARY_TOL or abs(mu.sum() - 1.0) > STATIONARY_TOL:
        raise SolveFailedError(
            f"stationary residual {residual!r} / mass {mu.sum()!r} out of tolerance"
        )
    return StationaryDist(mu=mu, residual=residual)


def exact_average_payoff(setting: DynamicSetting, policy: AutomatonPolicy) -> float:
    """Long-run expected per-round payoff of ``policy`` in ``setting``."""
    chain = build_joint_chain(setting, policy)
    dist = stationary(chain)
    return float(dist.mu @ chain.reward)


def stopped_state_distribution(P: np.ndarray, d0: np.ndarray, eta: float) -> np.ndarray:
    """Distribution of the state at a geometric stopping time.

    The process takes a step, then halts with probability eta, so the
    result is eta * d0 * P * (I - (1-eta) P)^-1; eta=1 reduces to d0 * P.
    The inverse exists for eta in (0, 1] because I - (1-eta)P is strictly
    diagonally dominant in the induced norm.
    """
    if not (0.0 < eta <= 1.0):
        raise BadEtaError(f"eta must be in (0, 1], got {eta}")
    P = np.asarray(P, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or d0.shape != (P.shape[0],):
        raise DimensionMismatchError(
            f"shape mismatch: P {P.shape}, d0 {d0.shape}"
        )
    resolvent = np.eye(P.shape[0]) - (1.0 - eta) * P
    return eta * np.linalg.solve(resolvent.T, (d0 @ P))


def chain_csv(chain: JointChainModel, dist: StationaryDist | None = None) -> str:
    """CSV with one row per joint state: nature, q, reward, stationary mass."""
    buf = io.StringIO()
    buf.write("nature,agent_state,reward,stationary_mass\n")
    for row in range(chain.dim):
        nature, q = chain.state_of(row)
        mass = "" if dist is None else f"{dist.mu[row]:.12g}"
        buf.write(f"{nature},{q},{chain.reward[row]:.12g},{mass}\n")
    return buf.getvalue()
