"""Minimum expected capture time for n symmetric users on one channel.

n users want some single user to transmit alone as soon as possible; all
anyone learns each slot is how many transmitted.  The good policies are
group-splitting: everyone in the active group transmits with a probability
tuned to the group size, a solo transmission ends the episode, an all-or-
nothing slot reveals nothing, and any other count splits the group into
transmitters and non-transmitters, keeping whichever side is faster to
finish.  That gives the recursion

    z_n = min over p of
        (1 + sum_{i=2}^{n-1} min(z_i, z_{n-i}) C(n,i) p^i (1-p)^{n-i})
        / (1 - p^n - (1-p)^n)

with z_1 = 1.  The minimizing p_n and the values z_n are tabulated by
``solve_capture_table``; note z_3 < z_2, three users finish faster than
two because a 2-of-3 collision identifies a pair AND an odd man out.

``converse_checks`` collects the supporting evidence that these values are
not an artifact of the policy family: a virtual-device argument pinning
z_2 = 2, a three-user relaxation whose infimum over all symmetric
memoryless behaviors reproduces z_3, and the e-bound z_n <= (1-1/n)^-(n-1)
<= e for all n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import CapturePolicy
from .optimize import golden_section, scan_then_golden
from .rng import DOMAIN_CAPTURE, DOMAIN_MISC, RngStream

SCAN_POINTS = 999  # dense scan over p in {0.001, ..., 0.999}


@dataclass(frozen=True)
class CaptureTable:
    """Solved table, 1-indexed: probs[n] and values[n] are p_n and z_n.
    Index 0 is a nan placeholder so code can say table.values[n]."""

    probs: tuple[float, ...]
    values: tuple[float, ...]

    @property
    def n_max(self) -> int:
        return len(self.values) - 1

    def rows(self) -> list[tuple[int, float, float]]:
        return [(n, self.probs[n], self.values[n]) for n in range(1, self.n_max + 1)]

    def to_csv(self) -> str:
        lines = ["n,p,z"]
        for n, p, z in self.rows():
            lines.append(f"{n},{p:.6f},{z:.6f}")
        return "\n".join(lines) + "\n"


def capture_objective(n: int, p: float, z_prefix) -> float:
    """Expected capture time for n users transmitting with probability p in
    the first slot and splitting optimally afterwards.

    ``z_prefix[i]`` must hold z_i for 1 <= i < n (index 0 is ignored).
    Defined for n >= 2 and 0 < p < 1.
    """
    if n < 2:
        raise ValueError("the objective needs at least two users")
    if not 0.0 < p < 1.0:
        raise ValueError("p must be strictly inside (0, 1)")
    q = 1.0 - p
    numer = 1.0
    for i in range(2, n):
        numer += min(z_prefix[i], z_prefix[n - i]) * math.comb(n, i) * p**i * q ** (n - i)
    return numer / (1.0 - p**n - q**n)


def solve_capture_table(n_max: int, tol: float = 1e-9) -> CaptureTable:
    """Solve the recursion up to n_max users.

    Each stage scans p densely and polishes the best bracket with
    golden-section search down to width tol, so every z_n is pinned far
    tighter than the table is ever printed.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    probs = [math.nan, 1.0]
    values = [math.nan, 1.0]
    for n in range(2, n_max + 1):
        p, z = scan_then_golden(
            lambda p: capture_objective(n, p, values), 0.001, 0.999, SCAN_POINTS, tol
        )
        probs.append(p)
        values.append(z)
    return CaptureTable(tuple(probs[: n_max + 1]), tuple(values[: n_max + 1]))


# ---------------------------------------------------------------------------
# policies


@dataclass(frozen=True)
class GroupSplittingPolicy:
    """The policy the recursion describes, driven by a solved table."""

    table: CaptureTable

    def transmit_prob(self, group_size: int) -> float:
        return self.table.probs[group_size]

    def survivor(self, group_size: int, transmitted: int) -> str:
        zs = self.table.values
        # ties go to the transmitters
        if zs[transmitted] <= zs[group_size - transmitted]:
            return "transmitters"
        return "silent"


@dataclass(frozen=True)
class FixedProbabilityPolicy:
    """Everyone transmits with the same probability every slot, learning
    nothing from collisions.  A useful baseline and stress case."""

    p: float

    def transmit_prob(self, group_size: int) -> float:
        return self.p

    def survivor(self, group_size: int, transmitted: int) -> str:
        return "repeat"


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class SimSummary:
    """Mean of a simulated stopping time.  Censored episodes (still running
    at max_slots) are counted and excluded from the mean, never folded in."""

    episodes: int
    completed: int
    censored: int
    mean: float
    stderr: float

    def to_json_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "completed": self.completed,
            "censored": self.censored,
            "mean": self.mean,
            "stderr": self.stderr,
        }


def summarize_times(times: np.ndarray, censored: int) -> SimSummary:
    completed = len(times)
    if completed == 0:
        return SimSummary(censored, 0, censored, math.nan, math.nan)
    mean = float(np.mean(times))
    stderr = float(np.std(times, ddof=1) / math.sqrt(completed)) if completed > 1 else math.nan
    return SimSummary(completed + censored, completed, censored, mean, stderr)


def _policy_tables(policy: CapturePolicy, users: int) -> tuple[np.ndarray, np.ndarray]:
    """Materialize a policy as lookup tables for the vectorized loop:
    per-size transmit probabilities and the post-split group size for every
    (size, transmitted) pair (size itself when the policy repeats)."""
    probs = np.zeros(users + 1)
    for m in range(1, users + 1):
        p = float(policy.transmit_prob(m))
        if not (math.isfinite(p) and 0.0 <= p <= 1.0):
            raise ValueError(f"policy transmit probability {p!r} is outside [0, 1]")
        probs[m] = p
    after = np.zeros((users + 1, users + 1), dtype=np.int64)
    for m in range(1, users + 1):
        after[m, 0] = after[m, m] = m
        for k in range(2, m):
            verdict = policy.survivor(m, k)
            if verdict == "transmitters":
                after[m, k] = k
            elif verdict == "silent":
                after[m, k] = m - k
            elif verdict == "repeat":
                after[m, k] = m
            else:
                raise ValueError(f"policy survivor verdict {verdict!r} is not recognized")
    return probs, after


def simulate_capture(
    policy: CapturePolicy,
    users: int,
    episodes: int,
    seed: int,
    max_slots: int = 10_000,
    chunk_size: int = 65_536,
) -> SimSummary:
    """Monte Carlo estimate of the expected capture time under a policy.

    Only the active-group size matters to the episode's future, so each
    episode is advanced by drawing the number of transmitters binomially.
    Chunked, stream-per-chunk draws keep the estimate reproducible.
    """
    if users < 1 or episodes < 1:
        raise ValueError("need users >= 1 and episodes >= 1")
    probs, after = _policy_tables(policy, users)
    times: list[np.ndarray] = []
    censored = 0
    for chunk, lo in enumerate(range(0, episodes, chunk_size)):
        n = min(lo + chunk_size, episodes) - lo
        gen = RngStream(seed, (DOMAIN_CAPTURE, users, chunk)).generator()
        group = np.full(n, users, dtype=np.int64)
        done_at = np.zeros(n, dtype=np.int64)
        for t in range(1, max_slots + 1):
            open_idx = np.flatnonzero(done_at == 0)
            if len(open_idx) == 0:
                break
            m = group[open_idx]
            k = gen.binomial(m, probs[m])
            captured = k == 1
            done_at[open_idx[captured]] = t
            rest = open_idx[~captured]
            group[rest] = after[group[rest], k[~captured]]
        censored += int(np.count_nonzero(done_at == 0))
        times.append(done_at[done_at > 0])
    return summarize_times(np.concatenate(times), censored)


def simulate_virtual_pair(episodes: int, seed: int, max_slots: int = 10_000) -> SimSummary:
    """Capture time for two devices that each send 0 or 1 packets per slot
    with equal probability, stopping when exactly one packet is sent.  The
    two-user floor argument says this takes 2 slots on average."""
    if episodes < 1:
        raise ValueError("need episodes >= 1")
    gen = RngStream(seed, (DOMAIN_MISC, 2)).generator()
    done_at = np.zeros(episodes, dtype=np.int64)
    for t in range(1, max_slots + 1):
        open_idx = np.flatnonzero(done_at == 0)
        if len(open_idx) == 0:
            break
        packets = gen.integers(0, 2, size=(len(open_idx), 2))
        done_at[open_idx[packets.sum(axis=1) == 1]] = t
    censored = int(np.count_nonzero(done_at == 0))
    return summarize_times(done_at[done_at > 0], censored)


# ---------------------------------------------------------------------------
# converse evidence


def three_user_relaxation(a: float, c: float) -> float:
    """Lower-bound objective for three users: a symmetric memoryless
    behavior sends 0, 1, or 2 packets per slot with probabilities (a, b, c),
    b = 1 - a - c, and the expected stopping time is at least

        1 + (1 - 3 b a^2) / (1 - a^3 - b^3 - c^3).
    """
    b = 1.0 - a - c
    denom = 1.0 - a**3 - b**3 - c**3
    return 1.0 + (1.0 - 3.0 * b * a * a) / denom


def _relaxation_feasible(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    b = 1.0 - a - c
    return (a >= 0) & (c >= 0) & (b >= 0) & (a**3 + b**3 + c**3 <= 0.75)


def minimize_three_user_relaxation(grid: int = 401, zooms: int = 8) -> tuple[float, float, float]:
    """Infimum of the relaxation over its feasible set, by grid scan and
    repeated zooming.  Returns (a, c, value)."""
    lo_a, hi_a, lo_c, hi_c = 0.0, 1.0, 0.0, 1.0
    best = (math.nan, math.nan, math.inf)
    for _ in range(zooms):
        a = np.linspace(lo_a, hi_a, grid)
        c = np.linspace(lo_c, hi_c, grid)
        A, C = np.meshgrid(a, c, indexing="ij")
        feasible = _relaxation_feasible(A, C)
        B = 1.0 - A - C
        denom = 1.0 - A**3 - B**3 - C**3
        value = np.where(feasible, 1.0 + (1.0 - 3.0 * B * A * A) / np.where(feasible, denom, 1.0), math.inf)
        i, j = np.unravel_index(np.argmin(value), value.shape)
        if value[i, j] < best[2]:
            best = (float(A[i, j]), float(C[i, j]), float(value[i, j]))
        span_a = (hi_a - lo_a) / (grid - 1)
        span_c = (hi_c - lo_c) / (grid - 1)
        lo_a, hi_a = max(0.0, best[0] - span_a), min(1.0, best[0] + span_a)
        lo_c, hi_c = max(0.0, best[1] - span_c), min(1.0, best[1] + span_c)
    return best


def capture_upper_bound(n: int) -> float:
    """(1 - 1/n)^-(n-1): what n users get by naively transmitting with
    probability 1/n until someone gets through.  Increases toward e."""
    if n < 2:
        return 1.0
    return (1.0 - 1.0 / n) ** -(n - 1)


@dataclass(frozen=True)
class ProbeWindow:
    """Near-optimal policies must put their transmit probability inside
    [low, high]; reported as a diagnostic next to the solved p_n."""

    n: int
    low: float
    p: float
    high: float

    @property
    def inside(self) -> bool:
        return self.low <= self.p <= self.high


@dataclass(frozen=True)
class ConverseReport:
    virtual_pair: SimSummary
    relaxation_argmin: tuple[float, float]
    relaxation_value: float
    z3: float
    bounds: tuple[tuple[int, float, float], ...]  # (n, z_n, naive bound)
    windows: tuple[ProbeWindow, ...]

    def to_json_dict(self) -> dict:
        return {
            "virtual_pair": self.virtual_pair.to_json_dict(),
            "relaxation": {
                "a": self.relaxation_argmin[0],
                "c": self.relaxation_argmin[1],
                "value": self.relaxation_value,
                "z3": self.z3,
            },
            "bounds": [
                {"n": n, "z": z, "naive": bound, "e": math.e}
                for n, z, bound in self.bounds
            ],
            "windows": [
                {"n": w.n, "low": w.low, "p": w.p, "high": w.high, "inside": w.inside}
                for w in self.windows
            ],
        }


def converse_checks(
    table: CaptureTable,
    episodes: int = 200_000,
    seed: int = 0,
) -> ConverseReport:
    """Assemble the evidence that the solved table sits on the floor.

    Simulates the two-device virtual pair (should average 2 slots),
    minimizes the three-user relaxation (should reproduce z_3 with the
    two-packet probability pinned at 0), tabulates z_n against the naive
    1/n bound and e, and reports the probe-probability window each p_n
    should occupy.
    """
    if table.n_max < 3:
        raise ValueError("the converse evidence needs the table up to n = 3")
    virtual = simulate_virtual_pair(episodes, seed)
    a, c, value = minimize_three_user_relaxation()
    bounds = tuple(
        (n, table.values[n], capture_upper_bound(n)) for n in range(2, table.n_max + 1)
    )
    half_life = 1.0 - 1.0 / (2.0 * math.e)
    windows = tuple(
        ProbeWindow(n, 1.0 - half_life ** (1.0 / n), table.probs[n], half_life ** (1.0 / n))
        for n in range(2, table.n_max + 1)
    )
    return ConverseReport(virtual, (a, c), value, table.values[3], bounds, windows)
