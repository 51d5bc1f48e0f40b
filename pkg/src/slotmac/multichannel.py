"""Capture with several parallel channels.

Slots now carry m channels; each user picks a subset of channels to
transmit on and everyone sees the per-channel transmitter counts.  Capture
means some channel has exactly one transmitter.

Two users: a user learns nothing it can act on beyond "same subset or
not", so the policy is a distribution over subsets repeated until the two
picks differ; the expected capture time is 1 / (1 - sum q_i^2), minimized
by the uniform distribution at 1 / (1 - 2^-m).

Three users, two channels: policies are parametrized (p, q, r): transmit
on channel 1 with probability p, on channel 2 with probability q if on
channel 1 and r otherwise.  A first slot either captures, repeats (all
three picked the same subset, probability beta), or leaves a pattern that
identifies a single user (probability theta), who then transmits alone in
the follow-up slot.  Renewal gives E[Z] = (1 + theta) / (1 - beta).

The follow-up designation needs care: after a theta slot every user knows
only its own subset and the channel counts, yet exactly one may transmit.
Ranking subsets by their code ({} < {ch1} < {ch2} < {ch1,ch2}) works: in
every theta pattern the minimum code is held by exactly one user, and each
user can decide from its own view whether that is them (in the one
ambiguous view, both possible worlds say "not you").  The 64-pattern space
is small enough that tests simply enumerate it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .capture import (
    CaptureTable,
    GroupSplittingPolicy,
    SimSummary,
    simulate_capture,
    solve_capture_table,
    summarize_times,
)
from .optimize import golden_section, scan_then_golden
from .rng import DOMAIN_MULTICHANNEL, RngStream


def two_user_capture_time(channels: int) -> Fraction:
    """Optimal expected capture time for two users on m channels:
    1 / (1 - 2^-m), exactly."""
    if channels < 1:
        raise ValueError("need at least one channel")
    return Fraction(2**channels, 2**channels - 1)


def two_user_value(distribution) -> float:
    """Expected capture time for two users repeating a subset distribution:
    1 / (1 - sum q_i^2).  Infinite when the distribution is a point mass."""
    q = _checked_distribution(distribution)
    collide = float(np.dot(q, q))
    if collide >= 1.0:
        return math.inf
    return 1.0 / (1.0 - collide)


def _checked_distribution(distribution) -> np.ndarray:
    q = np.asarray(distribution, dtype=np.float64)
    if q.ndim != 1 or len(q) < 2:
        raise ValueError("need a distribution over at least two subsets")
    if np.any(q < 0) or not math.isclose(float(q.sum()), 1.0, abs_tol=1e-9):
        raise ValueError("subset probabilities must be non-negative and sum to 1")
    return q


# ---------------------------------------------------------------------------
# three users, two channels


@dataclass(frozen=True)
class BetaTheta:
    """First-slot outcome probabilities: beta repeats, theta resolves in
    one follow-up slot, everything else captures immediately."""

    beta: float
    theta: float


def renewal_value(bt: BetaTheta) -> float:
    """Expected slots to capture when each round costs 1 slot plus theta
    follow-ups and repeats with probability beta."""
    if bt.beta >= 1.0:
        return math.inf
    return (1.0 + bt.theta) / (1.0 - bt.beta)


def beta_theta_full(p: float, q: float, r: float) -> BetaTheta:
    """(beta, theta) for the full family: channel 1 with probability p,
    channel 2 with probability q on top of channel 1 and r otherwise."""
    for x in (p, q, r):
        if not 0.0 <= x <= 1.0:
            raise ValueError("family parameters must lie in [0, 1]")
    beta = p**3 * (q**3 + (1 - q) ** 3) + (1 - p) ** 3 * (r**3 + (1 - r) ** 3)
    theta = (
        p**3 * 3 * q**2 * (1 - q)
        + (1 - p) ** 3 * 3 * r**2 * (1 - r)
        + 3 * p**2 * (1 - p) * (1 - 2 * q * (1 - q) * (1 - r) - r * (1 - q) ** 2)
    )
    return BetaTheta(beta, theta)


def beta_theta_independent(p: float) -> BetaTheta:
    """(beta, theta) when each user treats the channels independently with
    the same probability p (the q = r = p slice of the full family)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    same = p**3 + (1 - p) ** 3
    pair = 3 * p**2 * (1 - p)
    return BetaTheta(same * same, pair * (same + 1 - 3 * p * (1 - p) ** 2))


@dataclass(frozen=True)
class FamilyOptimum:
    params: tuple[float, ...]
    value: float


@dataclass(frozen=True)
class ThreeUserOptimum:
    full: FamilyOptimum
    independent: FamilyOptimum

    def to_json_dict(self) -> dict:
        return {
            "full": {"p": self.full.params[0], "q": self.full.params[1], "r": self.full.params[2], "value": self.full.value},
            "independent": {"p": self.independent.params[0], "value": self.independent.value},
        }


def _z_full(p: float, q: float, r: float) -> float:
    return renewal_value(beta_theta_full(p, q, r))


def optimize_three_user_two_channel(grid: int = 101, tol: float = 1e-6) -> ThreeUserOptimum:
    """Minimize expected capture time over both families.

    Full family: a grid^3 scan locates the basin, then coordinate-wise
    golden-section passes with a shrinking trust interval polish it.
    Independent family: dense 1-D scan plus golden-section.
    """
    if grid < 11:
        raise ValueError("grid is too coarse to be useful")
    xs = np.linspace(0.0, 1.0, grid)
    P, Q, R = np.meshgrid(xs, xs, xs, indexing="ij")
    beta = P**3 * (Q**3 + (1 - Q) ** 3) + (1 - P) ** 3 * (R**3 + (1 - R) ** 3)
    theta = (
        P**3 * 3 * Q**2 * (1 - Q)
        + (1 - P) ** 3 * 3 * R**2 * (1 - R)
        + 3 * P**2 * (1 - P) * (1 - 2 * Q * (1 - Q) * (1 - R) - R * (1 - Q) ** 2)
    )
    z = np.full(beta.shape, math.inf)
    ok = beta < 1.0 - 1e-9
    z[ok] = (1.0 + theta[ok]) / (1.0 - beta[ok])
    i, j, k = np.unravel_index(np.argmin(z), z.shape)
    point = [float(xs[i]), float(xs[j]), float(xs[k])]
    value = float(z[i, j, k])
    step = 1.0 / (grid - 1)
    while step > tol / 4:
        for d in range(3):
            def along(v: float, d: int = d) -> float:
                trial = point.copy()
                trial[d] = v
                return _z_full(*trial)

            lo = max(0.0, point[d] - step)
            hi = min(1.0, point[d] + step)
            x, fx = golden_section(along, lo, hi, tol=step * 1e-4)
            if fx < value:
                point[d] = x
                value = fx
        step *= 0.5
    full = FamilyOptimum(tuple(point), value)

    p_ind, z_ind = scan_then_golden(
        lambda p: renewal_value(beta_theta_independent(p)), 0.001, 0.999, 999, tol=1e-12
    )
    return ThreeUserOptimum(full, FamilyOptimum((p_ind,), z_ind))


# ---------------------------------------------------------------------------
# follow-up designation after a theta slot

# subsets as 2-bit codes: bit 0 = channel 1, bit 1 = channel 2


def slot_outcome(codes: tuple[int, int, int]) -> str:
    """Classify a three-user slot: "capture", "repeat" (all same subset,
    nothing learned), or "followup" (a single user is identified)."""
    c1 = sum(c & 1 for c in codes)
    c2 = sum((c >> 1) & 1 for c in codes)
    if c1 == 1 or c2 == 1:
        return "capture"
    if codes[0] == codes[1] == codes[2]:
        return "repeat"
    return "followup"


def followup_will_transmit(own: int, c1: int, c2: int) -> bool:
    """One user's follow-up decision after a theta slot, from its own
    subset code and the channel counts alone.

    The user transmits iff its code is below both other codes in every
    completion of the counts consistent with its view.  In theta patterns
    this selects exactly one user.
    """
    rem1 = c1 - (own & 1)
    rem2 = c2 - ((own >> 1) & 1)
    pairs = [
        (x, y)
        for x in range(4)
        for y in range(4)
        if (x & 1) + (y & 1) == rem1 and ((x >> 1) & 1) + ((y >> 1) & 1) == rem2
    ]
    if not pairs:
        raise ValueError("channel counts are inconsistent with the claimed subset")
    return all(own < min(x, y) for x, y in pairs)


def followup_transmitter(codes: tuple[int, int, int]) -> int:
    """Index of the user designated to transmit after a theta slot (the
    unique minimum subset code)."""
    if slot_outcome(codes) != "followup":
        raise ValueError("not a follow-up pattern")
    low = min(codes)
    assert codes.count(low) == 1
    return codes.index(low)


# ---------------------------------------------------------------------------
# simulation


def _draw_codes(gen: np.random.Generator, cum: np.ndarray, rows: int, users: int) -> np.ndarray:
    u = gen.random((rows, users))
    return np.searchsorted(cum, u, side="right")


def simulate_two_user(
    channels: int,
    episodes: int,
    seed: int,
    distribution=None,
    max_slots: int = 10_000,
    chunk_size: int = 65_536,
) -> SimSummary:
    """Two users repeat a subset distribution until their picks differ
    (some channel then has exactly one transmitter).  Defaults to the
    uniform distribution over all 2^m subsets, which is optimal."""
    if channels < 1 or episodes < 1:
        raise ValueError("need channels >= 1 and episodes >= 1")
    n_subsets = 1 << channels
    if distribution is None:
        distribution = np.full(n_subsets, 1.0 / n_subsets)
    q = _checked_distribution(distribution)
    if len(q) != n_subsets:
        raise ValueError(f"distribution must cover all {n_subsets} subsets")
    cum = np.cumsum(q)
    cum[-1] = 1.0
    times: list[np.ndarray] = []
    censored = 0
    for chunk, lo in enumerate(range(0, episodes, chunk_size)):
        n = min(lo + chunk_size, episodes) - lo
        gen = RngStream(seed, (DOMAIN_MULTICHANNEL, 2, channels, chunk)).generator()
        done_at = np.zeros(n, dtype=np.int64)
        for t in range(1, max_slots + 1):
            open_idx = np.flatnonzero(done_at == 0)
            if len(open_idx) == 0:
                break
            codes = _draw_codes(gen, cum, len(open_idx), 2)
            done_at[open_idx[codes[:, 0] != codes[:, 1]]] = t
        censored += int(np.count_nonzero(done_at == 0))
        times.append(done_at[done_at > 0])
    return summarize_times(np.concatenate(times), censored)


def simulate_three_user_two_channel(
    params: tuple[float, float, float] = (0.5, 0.0, 1.0),
    episodes: int = 100_000,
    seed: int = 0,
    max_slots: int = 10_000,
    chunk_size: int = 65_536,
) -> SimSummary:
    """Three users on two channels under family parameters (p, q, r).

    Each round draws real per-user subsets.  Capture ends the episode at t;
    an all-same slot repeats; any other pattern designates a single user
    (minimum subset code) who transmits alone at t + 1, ending the episode
    then.  The follow-up slot is deterministic for everyone, so it consumes
    no randomness.
    """
    p, q, r = params
    bt = beta_theta_full(p, q, r)  # validates the parameters
    if episodes < 1:
        raise ValueError("need episodes >= 1")
    if bt.beta >= 1.0:
        raise ValueError("these parameters never capture (beta = 1)")
    dist = np.array([(1 - p) * (1 - r), p * (1 - q), (1 - p) * r, p * q])
    cum = np.cumsum(dist)
    cum[-1] = 1.0
    times: list[np.ndarray] = []
    censored = 0
    for chunk, lo in enumerate(range(0, episodes, chunk_size)):
        n = min(lo + chunk_size, episodes) - lo
        gen = RngStream(seed, (DOMAIN_MULTICHANNEL, 3, 2, chunk)).generator()
        done_at = np.zeros(n, dtype=np.int64)
        for t in range(1, max_slots + 1):
            open_idx = np.flatnonzero(done_at == 0)
            if len(open_idx) == 0:
                break
            codes = _draw_codes(gen, cum, len(open_idx), 3)
            c1 = (codes & 1).sum(axis=1)
            c2 = ((codes >> 1) & 1).sum(axis=1)
            capture = (c1 == 1) | (c2 == 1)
            same = (codes[:, 0] == codes[:, 1]) & (codes[:, 1] == codes[:, 2])
            followup = ~capture & ~same
            done_at[open_idx[capture]] = t
            if t < max_slots:
                done_at[open_idx[followup]] = t + 1
        censored += int(np.count_nonzero(done_at == 0))
        times.append(done_at[done_at > 0])
    return summarize_times(np.concatenate(times), censored)


def simulate_multichannel(
    users: int,
    channels: int,
    episodes: int,
    seed: int,
    params: tuple[float, float, float] | None = None,
    distribution=None,
    table: CaptureTable | None = None,
    max_slots: int = 10_000,
) -> SimSummary:
    """Simulate the supported user/channel configurations.

    Two users on any number of channels (optionally with an explicit
    subset distribution); three users on two channels (optionally with
    explicit (p, q, r)); three users on one channel, which is just the
    single-channel capture problem under the group-splitting policy.
    """
    if users == 2:
        return simulate_two_user(channels, episodes, seed, distribution, max_slots)
    if users == 3 and channels == 2:
        return simulate_three_user_two_channel(params or (0.5, 0.0, 1.0), episodes, seed, max_slots)
    if users == 3 and channels == 1:
        policy = GroupSplittingPolicy(table if table is not None else solve_capture_table(3))
        return simulate_capture(policy, 3, episodes, seed, max_slots)
    raise ValueError(f"unsupported configuration: {users} users on {channels} channels")
