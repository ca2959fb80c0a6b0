"""Costly sequential evidence reading with an exactly optimal stopping rule.

A hidden bit is 1 with probability prior1; each of n available signals
independently equals the bit with probability rho > 1/2, and reading one
costs c. Guessing right pays 1 minus total reading cost, guessing wrong
pays minus the cost alone. The posterior depends on the evidence only
through d = #ones - #zeros, so backward induction runs on the O(n^2)
grid of (reads so far, count difference):

    W(n, d) = max(post, 1 - post)
    W(i, d) = max(W_stop, -c + P(next=1 | d) W(i+1, d+1)
                          + P(next=0 | d) W(i+1, d-1))

W values are net of future reading costs and exclude sunk ones, so the
total expected utility of the optimal reader is W(0, 0). Ties between
stopping and continuing resolve to stop, which makes the boundary
deterministic and is what produces order effects: two readings of the
same evidence can exit at different boundary points.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import (
    LengthMismatchError,
    MismatchedProblemsError,
    ValidationError,
)


@dataclass(frozen=True)
class ReaderProblem:
    n: int
    rho: float
    c: float
    prior1: float = 0.5

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"n must be positive, got {self.n}")
        if not (0.5 < self.rho < 1.0):
            raise ValidationError(f"rho must be in (0.5, 1), got {self.rho}")
        if self.c < 0.0:
            raise ValidationError(f"cost must be nonnegative, got {self.c}")
        if not (0.0 < self.prior1 < 1.0):
            raise ValidationError(f"prior1 must be in (0, 1), got {self.prior1}")


def posterior(problem: ReaderProblem, d: int) -> float:
    """P(bit = 1) after count difference d, via log-odds for stability."""
    if abs(d) > problem.n:
        raise ValidationError(f"|d| = {abs(d)} exceeds n = {problem.n}")
    if d == 0:
        return problem.prior1
    logit = math.log(problem.prior1 / (1.0 - problem.prior1))
    logit += d * math.log(problem.rho / (1.0 - problem.rho))
    if logit >= 0:
        return 1.0 / (1.0 + math.exp(-logit))
    e = math.exp(logit)
    return e / (1.0 + e)


@dataclass(frozen=True)
class ReaderDPTable:
    """Tables over the full grid |d| <= i, indexed [i][d + i].

    Row i covers d = -i..i in steps of 1. Walks only visit d with the
    parity of i, but the recursion is parity-independent, so the whole
    rectangle is computed; that makes boundary statements checkable at
    every (i, d), not just reachable ones.
    """

    problem: ReaderProblem
    W: tuple[tuple[float, ...], ...]
    stop: tuple[tuple[bool, ...], ...]

    def value(self, i: int, d: int) -> float:
        return self.W[i][self._offset(i, d)]

    def should_stop(self, i: int, d: int) -> bool:
        return self.stop[i][self._offset(i, d)]

    def _offset(self, i: int, d: int) -> int:
        if abs(d) > i or not (0 <= i <= self.problem.n):
            raise ValidationError(f"(i={i}, d={d}) is outside the table")
        return d + i


def solve_reader_dp(problem: ReaderProblem) -> ReaderDPTable:
    """Backward induction over (reads, count difference)."""
    n, rho, c = problem.n, problem.rho, problem.c
    W: list[tuple[float, ...]] = [()] * (n + 1)
    stop: list[tuple[bool, ...]] = [()] * (n + 1)
    last_w = []
    for d in range(-n, n + 1):
        p = posterior(problem, d)
        last_w.append(max(p, 1.0 - p))
    W[n] = tuple(last_w)
    stop[n] = (True,) * (2 * n + 1)
    for i in range(n - 1, -1, -1):
        row_w, row_stop = [], []
        for d in range(-i, i + 1):
            p = posterior(problem, d)
            stop_value = max(p, 1.0 - p)
            p_next_one = p * rho + (1.0 - p) * (1.0 - rho)
            up = W[i + 1][d + 1 + i + 1]
            down = W[i + 1][d - 1 + i + 1]
            cont = -c + p_next_one * up + (1.0 - p_next_one) * down
            if cont > stop_value:
                row_w.append(cont)
                row_stop.append(False)
            else:
                row_w.append(stop_value)
                row_stop.append(True)
        W[i] = tuple(row_w)
        stop[i] = tuple(row_stop)
    return ReaderDPTable(problem=problem, W=tuple(W), stop=tuple(stop))


@dataclass(frozen=True)
class ReaderRun:
    guess: int
    reads: int
    trajectory: tuple[int, ...]  # count difference after each processed read


def _guess_from_d(problem: ReaderProblem, d: int) -> int:
    return 1 if posterior(problem, d) >= 0.5 else 0


def simulate_reader(
    problem: ReaderProblem, table: ReaderDPTable, sequence: Sequence[int]
) -> ReaderRun:
    """Walk an explicit bit sequence, stopping at the first stop state."""
    seq = list(sequence)
    if len(seq) != problem.n:
        raise LengthMismatchError(
            f"sequence length {len(seq)} != n = {problem.n}"
        )
    if any(b not in (0, 1) for b in seq):
        raise ValidationError("sequence entries must be bits")
    i = 0
    d = 0
    trajectory = []
    while i < problem.n and not table.should_stop(i, d):
        d += 1 if seq[i] else -1
        i += 1
        trajectory.append(d)
    return ReaderRun(
        guess=_guess_from_d(problem, d), reads=i, trajectory=tuple(trajectory)
    )


@dataclass(frozen=True)
class FirstImpressionReport:
    guess_forward: int
    guess_reversed: int
    differs: bool
    full_info_guess: int


def first_impression_reader(
    problem: ReaderProblem, sequence: Sequence[int]
) -> FirstImpressionReport:
    """Run the optimal reader on a sequence and its reversal.

    full_info_guess uses all n bits and is order-free; a differing pair of
    guesses around it is pure order sensitivity.
    """
    table = solve_reader_dp(problem)
    fwd = simulate_reader(problem, table, sequence)
    rev = simulate_reader(problem, table, list(sequence)[::-1])
    d_total = sum(1 if b else -1 for b in sequence)
    return FirstImpressionReport(
        guess_forward=fwd.guess,
        guess_reversed=rev.guess,
        differs=fwd.guess != rev.guess,
        full_info_guess=_guess_from_d(problem, d_total),
    )


def polarization_reader(
    problem_a: ReaderProblem, problem_b: ReaderProblem, sequence: Sequence[int]
) -> tuple[int, int, bool]:
    """Two readers differing only in prior see the same evidence."""
    if (problem_a.n, problem_a.rho, problem_a.c) != (
        problem_b.n,
        problem_b.rho,
        problem_b.c,
    ):
        raise MismatchedProblemsError(
            "problems must be identical except for the prior"
        )
    guess_a = simulate_reader(problem_a, solve_reader_dp(problem_a), sequence).guess
    guess_b = simulate_reader(problem_b, solve_reader_dp(problem_b), sequence).guess
    return guess_a, guess_b, guess_a != guess_b


def disregard_index(table: ReaderDPTable) -> int:
    """First read count at which every reachable d stops.

    Reachable means d with the parity of i (paths change d by one per
    read), so this bounds the reads m along any path. Row n stops by
    construction, so the index always exists.
    """
    n = table.problem.n
    for i in range(n + 1):
        if all(table.should_stop(i, d) for d in range(-i, i + 1, 2)):
            return i
    raise AssertionError("unreachable: terminal row always stops")


def dp_table_csv(table: ReaderDPTable) -> str:
    buf = io.StringIO()
    buf.write("i,d,W,stop\n")
    for i in range(table.problem.n + 1):
        for d in range(-i, i + 1):
            buf.write(
                f"{i},{d},{table.value(i, d):.12g},{int(table.should_stop(i, d))}\n"
            )
    return buf.getvalue()
