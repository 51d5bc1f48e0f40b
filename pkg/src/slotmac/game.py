"""Core game engine for the slotted channel game.

Two players share a channel for a fixed number of slots.  Each slot both
players simultaneously decide to transmit (1) or idle (0); a transmission
scores one point iff the other player idled.  Both then observe the same
feedback, the number of transmitters in the slot (0, 1, or 2), and nothing
else: neither player ever sees who transmitted, only how many.

The engine is the only place decisions and feedback meet.  Strategies are
driven through a two-call protocol per slot, ``decide`` then ``observe``,
so a decision at slot t can only depend on the strategy's own randomness
and what it observed in slots 1..t-1.

Slots are numbered from 1.  Player indices are 0 and 1.

The same module also runs multi-user capture episodes: n users follow a
common policy until some slot has exactly one transmitter, at which point
the channel is captured and the episode ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import math

from .dsl import IDLE, TRANSMIT, StrategyMachine, StrategyParseError, validate_machine
from .rng import RngStream

import numpy as np

# A decision is 0 (idle) or 1 (transmit); feedback is the number of
# transmitters in the slot.  Plain ints, validated where they are produced.
Decision = int
Feedback = int


@dataclass(frozen=True)
class SlotRecord:
    """What happened in one slot: both decisions, the shared feedback, and
    the scoring player's index (present iff exactly one player transmitted)."""

    t: int
    decisions: tuple[Decision, Decision]
    feedback: Feedback
    scorer: int | None

    def __post_init__(self) -> None:
        if self.feedback != sum(self.decisions):
            raise ValueError("feedback must equal the number of transmitters")


@dataclass(frozen=True)
class GameTranscript:
    horizon: int
    slots: tuple[SlotRecord, ...]
    scores: tuple[int, int]
    # per-player state id sequences, filled in when both sides are machines
    state_traces: tuple[tuple[str, ...], tuple[str, ...]] | None = None

    @property
    def first_success(self) -> int | None:
        """Slot of the first solo transmission, or None if there was none."""
        for rec in self.slots:
            if rec.feedback == 1:
                return rec.t
        return None

    @property
    def slots_before_success(self) -> int:
        """Number of leading slots in which nobody scored."""
        first = self.first_success
        return self.horizon if first is None else first - 1


@runtime_checkable
class StrategySession(Protocol):
    """One player's view of one game."""

    def decide(self, t: int) -> Decision: ...

    def observe(self, t: int, own: Decision, feedback: Feedback) -> None: ...


@runtime_checkable
class Strategy(Protocol):
    """Anything that can field a session: built-in machines are adapted to
    this automatically, and programmatic strategies implement it directly."""

    def begin(self, rng: np.random.Generator, horizon: int) -> StrategySession: ...


class MachineSession:
    """Runs one StrategyMachine for one game.

    Draws exactly one uniform per slot whatever the transmit probability is,
    so a machine's draw sequence depends only on its stream, not its states.

    When the machine was declared with the last-slot override it also runs a
    shadow copy of itself on the opponent's inferred actions.  The moment
    the opponent does something the shadow gives probability zero, the
    opponent has been exposed as foreign and the machine will transmit on
    the final slot regardless of its state.
    """

    def __init__(self, machine: StrategyMachine, rng: np.random.Generator, horizon: int):
        self.machine = machine
        self.rng = rng
        self.horizon = horizon
        self.state = machine.start
        self.trace: list[str] = []
        self.foreign = False
        self._shadow: str | None = machine.start if machine.last_slot_override else None

    def decide(self, t: int) -> Decision:
        self.trace.append(self.state)
        u = self.rng.random()
        p = self.machine.states[self.state].transmit_prob
        if self.foreign and t == self.horizon:
            p = 1.0
        return TRANSMIT if u < p else IDLE

    def observe(self, t: int, own: Decision, feedback: Feedback) -> None:
        spec = self.machine.states[self.state]
        target = spec.transitions.get((own, feedback))
        if target is None:
            if not (self.foreign and t == self.horizon):
                raise StrategyParseError([_missing(self.state, own, feedback)])
            # the forced final transmission may leave a prob-0 state with no
            # T transition; the game is over, stay put
            target = self.state
        self.state = target
        if self._shadow is not None and not self.foreign:
            opp = feedback - own
            shadow_prob = self.machine.states[self._shadow].transmit_prob
            if (opp == TRANSMIT and shadow_prob == 0.0) or (opp == IDLE and shadow_prob == 1.0):
                self.foreign = True
            else:
                nxt = self.machine.states[self._shadow].transitions.get((opp, feedback))
                if nxt is None:
                    self.foreign = True
                else:
                    self._shadow = nxt


def _missing(state: str, own: Decision, feedback: Feedback):
    from .dsl import Diagnostic

    letter = "T" if own == TRANSMIT else "I"
    return Diagnostic("error", f"state {state!r} has no transition for ({letter}, f={feedback})", state=state)


def _open_session(strategy, rng: RngStream, horizon: int) -> StrategySession:
    if isinstance(strategy, StrategyMachine):
        errors = [d for d in validate_machine(strategy) if d.severity == "error"]
        if errors:
            raise StrategyParseError(errors)
        return MachineSession(strategy, rng.generator(), horizon)
    if isinstance(strategy, Strategy):
        return strategy.begin(rng.generator(), horizon)
    raise TypeError(f"not a strategy: {strategy!r}")


def play_game(
    strategy_a,
    strategy_b,
    horizon: int,
    rng_a: RngStream,
    rng_b: RngStream,
) -> GameTranscript:
    """Play one game and return its full transcript.

    Invalid machines are rejected before slot 1.  Either argument may be a
    StrategyMachine or any object implementing the Strategy protocol; the
    two players' randomness comes from the two (independent) streams.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    session_a = _open_session(strategy_a, rng_a, horizon)
    session_b = _open_session(strategy_b, rng_b, horizon)
    records: list[SlotRecord] = []
    scores = [0, 0]
    for t in range(1, horizon + 1):
        xa = _checked(session_a.decide(t))
        xb = _checked(session_b.decide(t))
        feedback = xa + xb
        scorer: int | None = None
        if feedback == 1:
            scorer = 0 if xa == TRANSMIT else 1
            scores[scorer] += 1
        session_a.observe(t, xa, feedback)
        session_b.observe(t, xb, feedback)
        records.append(SlotRecord(t, (xa, xb), feedback, scorer))
    traces = None
    if isinstance(session_a, MachineSession) and isinstance(session_b, MachineSession):
        traces = (tuple(session_a.trace), tuple(session_b.trace))
    return GameTranscript(horizon, tuple(records), (scores[0], scores[1]), traces)


def _checked(x) -> Decision:
    if x not in (IDLE, TRANSMIT):
        raise ValueError(f"strategy produced a decision outside {{0, 1}}: {x!r}")
    return x


# ---------------------------------------------------------------------------
# n-user capture episodes


@runtime_checkable
class CapturePolicy(Protocol):
    """Common policy for a group of users trying to capture the channel.

    ``transmit_prob(m)`` is the per-slot transmit probability while the
    active group has m members.  After a slot in which k of m transmitted
    with 2 <= k <= m-1, ``survivor(m, k)`` names which side stays active:
    "transmitters", "silent", or "repeat" to keep everyone in.
    """

    def transmit_prob(self, group_size: int) -> float: ...

    def survivor(self, group_size: int, transmitted: int) -> str: ...


@dataclass(frozen=True)
class EpisodeResult:
    """Outcome of one capture episode.

    ``capture_slot`` is the 1-based slot of the first solo transmission, or
    None when the episode was cut off at max_slots; censored episodes must
    never be folded into a mean as if they had finished.
    ``decisions[t-1][i]`` is user i's decision in slot t.
    """

    users: int
    capture_slot: int | None
    decisions: tuple[tuple[Decision, ...], ...]

    @property
    def censored(self) -> bool:
        return self.capture_slot is None

    @property
    def winner(self) -> int | None:
        if self.capture_slot is None:
            return None
        return self.decisions[self.capture_slot - 1].index(TRANSMIT)


def play_capture_episode(
    policy: CapturePolicy,
    users: int,
    rng: RngStream,
    max_slots: int = 10_000,
) -> EpisodeResult:
    """Run one episode of the n-user capture game under a common policy.

    All users start active.  Each slot every active user transmits with the
    policy's probability for the current group size; inactive users stay
    silent.  Feedback 1 ends the episode.  Feedback 0 or m tells the group
    nothing, so it carries on.  Anything in between splits the group and the
    policy picks the side that survives.  Episodes still running after
    ``max_slots`` slots are censored, not truncated into a capture time.
    """
    if users < 1:
        raise ValueError("need at least one user")
    gen = rng.generator()
    active = [True] * users
    group = users
    log: list[tuple[Decision, ...]] = []
    for t in range(1, max_slots + 1):
        p = float(policy.transmit_prob(group))
        if not (math.isfinite(p) and 0.0 <= p <= 1.0):
            raise ValueError(f"policy transmit probability {p!r} is outside [0, 1]")
        draws = gen.random(users)
        x = tuple(
            TRANSMIT if active[i] and draws[i] < p else IDLE for i in range(users)
        )
        log.append(x)
        k = sum(x)
        if k == 1:
            return EpisodeResult(users, t, tuple(log))
        if 0 < k < group:
            verdict = policy.survivor(group, k)
            if verdict == "transmitters":
                active = [active[i] and x[i] == TRANSMIT for i in range(users)]
                group = k
            elif verdict == "silent":
                active = [active[i] and x[i] == IDLE for i in range(users)]
                group = group - k
            elif verdict != "repeat":
                raise ValueError(f"policy survivor verdict {verdict!r} is not recognized")
    return EpisodeResult(users, None, tuple(log))
