"""Closed-form scores for the championship machines, as exact rationals.

Everything here is a consequence of one random variable: in self-play (or
against a dead channel) the coin-flip phase of the duel machines ends with
a first solo success after Y fruitless slots, where

    P[Y = i] = (1/2)^(i+1)   for i < T,      P[Y = T] = (1/2)^T

over a horizon of T slots.  After that first success the pair alternates
perfectly, so per-player self-play value, and the streaming scores against
a dead channel, all reduce to expectations of simple functions of Y.

Returning Fractions keeps every value exact at any horizon; callers that
want floats can convert, and for the horizons anyone prints the conversion
is itself exact to well below double precision rounding.

``exact_self_play_alpha`` cross-checks the closed form the hard way: when
every transmit probability is 0, 1/2, or 1, a game is a deterministic
function of one fair bit per player per slot, so running the batch engine
over all 2^(2T) joint bit patterns averages the score exactly.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .batch import CompiledMachine, compile_machine, run_games_with_uniforms
from .dsl import StrategyMachine


def _check_horizon(horizon: int) -> int:
    if not isinstance(horizon, int) or horizon < 1:
        raise ValueError("horizon must be a positive integer")
    return horizon


def first_success_pmf(horizon: int) -> tuple[Fraction, ...]:
    """Distribution of Y, the number of slots before the first solo
    success; index i is P[Y = i], i = 0..horizon."""
    T = _check_horizon(horizon)
    pmf = [Fraction(1, 2 ** (i + 1)) for i in range(T)]
    pmf.append(Fraction(1, 2**T))
    return tuple(pmf)


def expected_y(horizon: int) -> Fraction:
    """E[Y] = 1 - 2^-T: the coin-flip phase costs just under one slot."""
    T = _check_horizon(horizon)
    return 1 - Fraction(1, 2**T)


def alpha_optimal(horizon: int) -> Fraction:
    """Per-player self-play value of the duel machines:
    (T-1)/2 + 2^-(T+1).  This is the best symmetric machines can do."""
    T = _check_horizon(horizon)
    return Fraction(T - 1, 2) + Fraction(1, 2 ** (T + 1))


def beta4(horizon: int) -> Fraction:
    """four_state against a dead channel: T - 2 + 3 * 2^-T.

    One slot lost finding the channel empty, one lost yielding after the
    first success, then streaming; the 3 * 2^-T corrects the edge cases
    where the coin phase runs into the end of the game.
    """
    T = _check_horizon(horizon)
    return T - 2 + Fraction(3, 2**T)


def beta3(horizon: int) -> Fraction:
    """three_state against a dead channel.

    The machine politely alternates with nobody, scoring on every other
    slot after its first success: ceil((T - Y) / 2) points, which works out
    to T/2 - 1/3 + (1/3) 2^-T for even T and T/2 - 1/6 + (1/3) 2^-T for
    odd T (the parity of the remaining slots shifts the rounding).
    """
    T = _check_horizon(horizon)
    correction = Fraction(1, 3) if T % 2 == 0 else Fraction(1, 6)
    return Fraction(T, 2) - correction + Fraction(1, 3 * 2**T)


def exact_self_play_alpha(
    machine: StrategyMachine | CompiledMachine,
    horizon: int,
    chunk_size: int = 1 << 20,
) -> Fraction:
    """Average per-player self-play score by exhaustive enumeration.

    Valid only for machines whose transmit probabilities are all 0, 1/2, or
    1: then each game is determined by T fair bits per player, the 2^(2T)
    joint patterns are equally likely, and summing integer scores over all
    of them gives the exact expectation.  Cost grows as 4^T; horizons up to
    the mid-teens are fine.
    """
    T = _check_horizon(horizon)
    compiled = compile_machine(machine)
    if not set(np.unique(compiled.probs)) <= {0.0, 0.5, 1.0}:
        raise ValueError("exact enumeration needs transmit probabilities in {0, 1/2, 1}")
    total_games = 1 << (2 * T)
    total_score = 0
    for lo in range(0, total_games, chunk_size):
        idx = np.arange(lo, min(lo + chunk_size, total_games), dtype=np.int64)
        # player 0 owns the high T bits, player 1 the low T bits; bit t-1
        # decides slot t, and 0.75/0.25 turn a bit into a uniform that
        # crosses the 1/2 threshold exactly when the bit is set
        ua = np.empty((len(idx), T))
        ub = np.empty((len(idx), T))
        for t in range(T):
            ua[:, t] = 0.75 - 0.5 * ((idx >> (T + t)) & 1)
            ub[:, t] = 0.75 - 0.5 * ((idx >> t) & 1)
        batch = run_games_with_uniforms(compiled, compiled, ua, ub)
        total_score += int(batch.scores_a.sum(dtype=np.int64))
        total_score += int(batch.scores_b.sum(dtype=np.int64))
    return Fraction(total_score, 2 * total_games)
