"""Parameter search for ladder automata in a given setting.

Covers four jobs: picking the default one-signal-each partition from
likelihood ratios, optimizing the exploration probability on a log grid
with local refinement, exhausting all signal partitions for small k, and
tracing payoff along a schedule that shrinks the flip probability faster
than 1/n while the ladder grows. A vectorized brute-force search over all
tiny policies (at most 3 states, grid-valued rows) serves as an
independent near-optimality oracle.

No unimodality in p_exp is assumed anywhere: searches are coarse-grid plus
refinement, never golden-section.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .automaton import NO_SIGNAL, RISKY, SAFE, AFamilyParams, AutomatonPolicy, build_a_family
from .dynamic_env import DynamicSetting, is_nontrivial, validate_setting
from .errors import (
    GridTooLargeError,
    ReducibleChainError,
    TooManySignalsError,
    TrivialSettingError,
    ValidationError,
)
from .markov_exact import exact_average_payoff

DEFAULT_PEXP_GRID = tuple(np.logspace(-5, 0, 40))

BRUTE_FORCE_CAP = 10**7
_BRUTE_CHUNK = 1 << 16


@dataclass(frozen=True)
class OptResult:
    best_pexp: float
    best_payoff: float
    grid_trace: tuple[tuple[float, float], ...]
    partition: tuple[frozenset[int], frozenset[int]]


@dataclass(frozen=True)
class CurvePoint:
    n: int
    pi: float
    p_exp: float
    payoff: float


def default_partition(setting: DynamicSetting) -> tuple[frozenset[int], frozenset[int]]:
    """Single best signal for each side, by likelihood ratio.

    pos holds the argmax of pG/pB, neg the argmax of pB/pG; ties break to
    the lowest index and a zero denominator counts as an infinite ratio.
    Comparisons use cross-multiplication, so no division is involved.
    """
    if not is_nontrivial(setting):
        raise TrivialSettingError("all signals are uninformative")

    def argmax_ratio(num, den):
        best = None
        for i in range(setting.k):
            if num[i] == 0.0 and den[i] == 0.0:
                continue  # signal never occurs; cannot win either side
            if best is None or num[i] * den[best] > num[best] * den[i]:
                best = i
        return best

    pos = argmax_ratio(setting.pG, setting.pB)
    neg = argmax_ratio(setting.pB, setting.pG)
    return frozenset({pos + 1}), frozenset({neg + 1})


def _eval_pexp(args) -> float:
    setting, n, pos, neg, r_u, r_d, p_exp = args
    policy = build_a_family(
        setting.k, AFamilyParams(n=n, p_exp=p_exp, pos=pos, neg=neg, r_u=r_u, r_d=r_d)
    )
    return exact_average_payoff(setting, policy)


def _map_points(args_list, workers: int) -> list[float]:
    # Reduction is by index, so results never depend on scheduling.
    if workers <= 1 or len(args_list) <= 1:
        return [_eval_pexp(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_eval_pexp, args_list))


def optimize_pexp(
    setting: DynamicSetting,
    n: int,
    partition: tuple[frozenset[int], frozenset[int]] | None = None,
    r_u: float = 1.0,
    r_d: float = 1.0,
    grid: Sequence[float] | None = None,
    refine_rounds: int = 2,
    refine_points: int = 10,
    workers: int = 1,
) -> OptResult:
    """Best exploration probability on a grid, with local linear refinement."""
    if partition is None:
        partition = default_partition(setting)
    pos, neg = frozenset(partition[0]), frozenset(partition[1])
    grid = tuple(grid) if grid is not None else DEFAULT_PEXP_GRID
    if not grid:
        raise ValidationError("p_exp grid must be nonempty")
    for p in grid:
        if not (0.0 < p <= 1.0):
            raise ValidationError(f"grid p_exp {p} outside (0, 1]")

    trace: list[tuple[float, float]] = []
    seen: set[float] = set()

    def evaluate(points):
        fresh = [p for p in points if p not in seen]
        seen.update(fresh)
        vals = _map_points(
            [(setting, n, pos, neg, r_u, r_d, p) for p in fresh], workers
        )
        trace.extend(zip(fresh, vals))

    evaluate(grid)
    for _ in range(refine_rounds):
        best_p, _ = max(trace, key=lambda t: (t[1], -t[0]))
        xs = sorted(p for p, _ in trace)
        i = xs.index(best_p)
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, len(xs) - 1)]
        evaluate([float(p) for p in np.linspace(lo, hi, refine_points)])

    best_p, best_v = max(trace, key=lambda t: (t[1], -t[0]))
    return OptResult(
        best_pexp=best_p,
        best_payoff=best_v,
        grid_trace=tuple(trace),
        partition=(pos, neg),
    )


def legal_partitions(k: int):
    """All (pos, neg) pairs from assigning each signal to pos/neg/ignore."""
    for assign in itertools.product((0, 1, 2), repeat=k):
        pos = frozenset(i + 1 for i, a in enumerate(assign) if a == 0)
        neg = frozenset(i + 1 for i, a in enumerate(assign) if a == 1)
        if pos and neg:
            yield pos, neg


def exhaustive_partition_search(
    setting: DynamicSetting,
    n: int,
    r_u: float = 1.0,
    r_d: float = 1.0,
    grid: Sequence[float] | None = None,
    workers: int = 1,
) -> OptResult:
    """Best OptResult over every legal signal partition. Needs k <= 6."""
    if setting.k > 6:
        raise TooManySignalsError(
            f"partition search enumerates 3^k assignments; k={setting.k} > 6"
        )
    best: OptResult | None = None
    for pos, neg in legal_partitions(setting.k):
        result = optimize_pexp(
            setting, n, (pos, neg), r_u=r_u, r_d=r_d, grid=grid, workers=workers
        )
        if best is None or result.best_payoff > best.best_payoff:
            best = result
    return best


DEFAULT_RATE_GRID = (0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class RateSearchResult:
    r_u: float
    r_d: float
    result: OptResult


def optimize_rates(
    setting: DynamicSetting,
    n: int,
    partition: tuple[frozenset[int], frozenset[int]] | None = None,
    rate_grid: Sequence[float] = DEFAULT_RATE_GRID,
    grid: Sequence[float] | None = None,
    workers: int = 1,
) -> RateSearchResult:
    """Optimize p_exp for every (r_u, r_d) pair on a small rate grid.

    The experiments elsewhere fix r_u = r_d = 1; this search exists to
    check that nothing better hides at other rates. Ties break toward
    higher rates so the default corner wins when it is not beaten.
    """
    for r in rate_grid:
        if not (0.0 < r <= 1.0):
            raise ValidationError(f"rate {r} outside (0, 1]")
    best: RateSearchResult | None = None
    descending = sorted(set(float(r) for r in rate_grid), reverse=True)
    for r_u in descending:
        for r_d in descending:
            result = optimize_pexp(
                setting, n, partition, r_u=r_u, r_d=r_d, grid=grid, workers=workers
            )
            if (
                best is None
                or result.best_payoff > best.result.best_payoff + 1e-15
            ):
                best = RateSearchResult(r_u=r_u, r_d=r_d, result=result)
    return best


@dataclass(frozen=True)
class ScheduleSpec:
    """Flip-probability and exploration schedules c1/n^a and c2/n^b.

    Valid when n*pi(n) and pi(n)/pexp(n) are strictly decreasing along
    n_list, checked numerically at the supplied values.
    """

    c1: float
    a: float
    c2: float
    b: float
    n_list: tuple[int, ...]

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValidationError("schedule constants must be positive")
        if self.a <= 1:
            raise ValidationError(f"need a > 1 so that n*pi(n) shrinks, got a={self.a}")
        if self.b <= 0:
            raise ValidationError(f"need b > 0, got b={self.b}")
        ns = tuple(int(n) for n in self.n_list)
        object.__setattr__(self, "n_list", ns)
        if len(ns) < 2 or any(x >= y for x, y in zip(ns, ns[1:])):
            raise ValidationError("n_list must be increasing with at least 2 entries")
        n_pi = [n * self.pi_of_n(n) for n in ns]
        ratio = [self.pi_of_n(n) / self.pexp_of_n(n) for n in ns]
        if any(x <= y for x, y in zip(n_pi, n_pi[1:])):
            raise ValidationError("n*pi(n) is not strictly decreasing on n_list")
        if any(x <= y for x, y in zip(ratio, ratio[1:])):
            raise ValidationError("pi(n)/pexp(n) is not strictly decreasing on n_list")

    def pi_of_n(self, n: int) -> float:
        return self.c1 / n**self.a

    def pexp_of_n(self, n: int) -> float:
        return self.c2 / n**self.b


def limit_schedule_curve(
    setting_base: DynamicSetting,
    schedule: ScheduleSpec,
    partition: tuple[frozenset[int], frozenset[int]] | None = None,
    r_u: float = 1.0,
    r_d: float = 1.0,
) -> list[CurvePoint]:
    """Exact payoff along the schedule; setting_base's pi is replaced per point."""
    if partition is None:
        partition = default_partition(setting_base)
    pos, neg = partition
    curve = []
    for n in schedule.n_list:
        pi_n = schedule.pi_of_n(n)
        pexp_n = schedule.pexp_of_n(n)
        setting = validate_setting(
            setting_base.k, setting_base.pG, setting_base.pB,
            setting_base.xG, setting_base.xB, pi_n,
        )
        policy = build_a_family(
            setting.k,
            AFamilyParams(n=n, p_exp=pexp_n, pos=pos, neg=neg, r_u=r_u, r_d=r_d),
        )
        curve.append(
            CurvePoint(n=n, pi=pi_n, p_exp=pexp_n,
                       payoff=exact_average_payoff(setting, policy))
        )
    return curve


def curve_csv(curve: Sequence[CurvePoint]) -> str:
    lines = ["n,pi,p_exp,payoff"]
    for pt in curve:
        lines.append(f"{pt.n},{pt.pi:.12g},{pt.p_exp:.12g},{pt.payoff:.12g}")
    return "\n".join(lines) + "\n"


def trace_csv(result: OptResult) -> str:
    lines = ["p_exp,payoff"]
    for p, v in result.grid_trace:
        lines.append(f"{p:.12g},{v:.12g}")
    return "\n".join(lines) + "\n"


def _row_options(q: int, m: int, grid: Sequence[float]) -> list[tuple[float, ...]]:
    """Distinct rows at state q: grid-weighted mixtures of stay/up/down.

    Moves past either end fold into stay, then duplicates are removed, so
    the candidate count reflects genuinely distinct rows.
    """
    rows = set()
    for ws in grid:
        for wu in grid:
            for wd in grid:
                if abs(ws + wu + wd - 1.0) > 1e-9:
                    continue
                row = [0.0] * m
                row[q] += ws
                if q + 1 < m:
                    row[q + 1] += wu
                else:
                    row[q] += wu
                if q - 1 >= 0:
                    row[q - 1] += wd
                else:
                    row[q] += wd
                rows.add(tuple(row))
    return sorted(rows)


def brute_force_policy_search(
    setting: DynamicSetting,
    num_states: int,
    prob_grid: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
) -> tuple[AutomatonPolicy, float]:
    """Exact-evaluated maximum over all tiny grid-valued policies.

    Enumerates every action labeling and every kernel built from
    stay/up/down rows with grid weights. Candidates whose joint chain is
    reducible are skipped (their long-run payoff depends on the start
    state, so they have no single exact value). Evaluation is batched
    numpy with the same joint-chain semantics as the exact solver.
    """
    if not (1 <= num_states <= 3):
        raise ValidationError(f"brute force supports 1..3 states, got {num_states}")
    grid = sorted(set(float(g) for g in prob_grid))
    if any(g < 0.0 or g > 1.0 for g in grid):
        raise ValidationError("prob_grid entries must lie in [0, 1]")
    m = num_states
    k = setting.k
    options = [_row_options(q, m, grid) for q in range(m)]

    total = 0
    labelings = list(itertools.product((SAFE, RISKY), repeat=m))
    for acts in labelings:
        per_state = [
            len(options[q]) if acts[q] == SAFE else len(options[q]) ** k
            for q in range(m)
        ]
        total += int(np.prod(per_state))
    if total > BRUTE_FORCE_CAP:
        raise GridTooLargeError(
            f"{total} candidates exceed the cap of {BRUTE_FORCE_CAP}"
        )

    pG = np.asarray(setting.pG)
    pB = np.asarray(setting.pB)
    pi = setting.pi
    dim = 2 * m
    eye = np.eye(dim)
    eye_bool = np.eye(dim, dtype=bool)

    best_val = -np.inf
    best_acts = None
    best_idx = -1
    best_counts = None

    for acts in labelings:
        # Per state: SAFE picks one row; RISKY picks one row per signal.
        # A choice is indexed mixed-radix over states, signal-major within
        # a risky state.
        n_rows = [len(options[q]) for q in range(m)]
        digits = []  # (state, signal or None) per mixed-radix digit
        radixes = []
        for q in range(m):
            if acts[q] == SAFE:
                digits.append((q, None))
                radixes.append(n_rows[q])
            else:
                for s in range(k):
                    digits.append((q, s))
                    radixes.append(n_rows[q])
        n_cand = int(np.prod(radixes))
        reward = np.zeros(dim)
        for q in range(m):
            if acts[q] == RISKY:
                reward[q] = setting.xG
                reward[m + q] = setting.xB

        opt_arrays = [np.asarray(options[q]) for q in range(m)]

        for lo in range(0, n_cand, _BRUTE_CHUNK):
            hi = min(lo + _BRUTE_CHUNK, n_cand)
            idx = np.arange(lo, hi)
            a_good = np.zeros((hi - lo, m, m))
            a_bad = np.zeros((hi - lo, m, m))
            rem = idx
            for (q, s), radix in zip(reversed(digits), reversed(radixes)):
                choice = rem % radix
                rem = rem // radix
                rows = opt_arrays[q][choice]  # (chunk, m)
                if s is None:
                    a_good[:, q, :] = rows
                    a_bad[:, q, :] = rows
                else:
                    a_good[:, q, :] += pG[s] * rows
                    a_bad[:, q, :] += pB[s] * rows
            P = np.zeros((hi - lo, dim, dim))
            P[:, :m, :m] = a_good * (1.0 - pi)
            P[:, :m, m:] = a_good * pi
            P[:, m:, :m] = a_bad * pi
            P[:, m:, m:] = a_bad * (1.0 - pi)

            # Strong connectivity from the nonzero pattern: boolean closure
            # by repeated squaring of (I | P>0) up to path length >= dim-1.
            reach = ((P > 0.0) | eye_bool).astype(np.float32)
            steps = 1
            while steps < dim - 1:
                reach = (reach @ reach > 0.0).astype(np.float32)
                steps *= 2
            irreducible = (reach > 0.0).all(axis=(1, 2))
            if not irreducible.any():
                continue
            sub = P[irreducible]
            A = np.transpose(sub, (0, 2, 1)) - eye
            A[:, -1, :] = 1.0
            b = np.zeros((sub.shape[0], dim))
            b[:, -1] = 1.0
            try:
                mu = np.linalg.solve(A, b[..., None])[..., 0]
            except np.linalg.LinAlgError:
                # Rare near-singular batch: fall back to one-by-one.
                mu = np.full((sub.shape[0], dim), np.nan)
                for i in range(sub.shape[0]):
                    try:
                        mu[i] = np.linalg.solve(A[i], b[i])
                    except np.linalg.LinAlgError:
                        pass
            vals = mu @ reward
            vals = np.where(np.isnan(vals), -np.inf, vals)
            local = int(np.argmax(vals))
            if vals[local] > best_val:
                best_val = float(vals[local])
                best_acts = acts
                best_idx = int(idx[irreducible.nonzero()[0]][local])
                best_counts = (digits, radixes)

    if best_acts is None:
        raise ReducibleChainError("every enumerated candidate was reducible")

    # Decode the winning candidate back into a policy.
    digits, radixes = best_counts
    choice_of: dict[tuple[int, int | None], int] = {}
    rem = best_idx
    for (q, s), radix in zip(reversed(digits), reversed(radixes)):
        choice_of[(q, s)] = rem % radix
        rem //= radix
    kernel: dict[tuple[int, int | None], dict[int, float]] = {}
    for q in range(m):
        if best_acts[q] == SAFE:
            row = options[q][choice_of[(q, None)]]
            kernel[(q, NO_SIGNAL)] = {i: p for i, p in enumerate(row) if p > 0.0}
        else:
            for s in range(k):
                row = options[q][choice_of[(q, s)]]
                kernel[(q, s + 1)] = {i: p for i, p in enumerate(row) if p > 0.0}
    policy = AutomatonPolicy(
        num_states=m, initial_state=0, actions=tuple(best_acts), kernel=kernel
    )
    return policy, best_val
