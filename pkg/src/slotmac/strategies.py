"""Built-in strategies for the two-player slotted channel game.

The two championship machines share a design: flip a fair coin until
somebody gets through alone, then alternate turns forever, using the
feedback to agree on whose turn it is without ever exchanging identities.

* ``three_state``: coin-flip state, then a two-state alternation (just
  scored -> yield, just yielded -> transmit).  Against a copy of itself it
  settles into perfect alternation after the first solo success.
* ``four_state``: same, but after yielding once it locks into a "my turn"
  state that holds the turn until a collision hands it back.  The lock-in
  state is never reached in self-play, and against a dead channel the
  machine streams instead of politely alternating with nobody.
* ``four_state_enhanced``: four_state plus the last-slot override: it
  simulates a copy of itself against the observed feedback, and the first
  time the opponent does something a copy never would, it marks the
  opponent foreign and transmits on the final slot no matter what.

``tft0`` and ``tft1`` repeat the opponent's previous action (inferred from
feedback), starting with idle and transmit respectively.  ``always`` and
``never`` do what their names say.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .dsl import IDLE, TRANSMIT, StateSpec, StrategyMachine, parse_strategy, reachable_states

T, I = TRANSMIT, IDLE


def _coin_flip_state() -> StateSpec:
    # fair coin; a solo success hands the turn over, a solo failure means
    # the opponent scored so it is our turn next
    return StateSpec(0.5, {(T, 1): "2", (T, 2): "1", (I, 0): "1", (I, 1): "3"})


_THREE_STATE = StrategyMachine(
    name="three_state",
    start="1",
    states={
        "1": _coin_flip_state(),
        # just scored: yield for one slot
        "2": StateSpec(0.0, {(I, 0): "3", (I, 1): "3"}),
        # our turn: transmit until it gets through
        "3": StateSpec(1.0, {(T, 1): "2", (T, 2): "3"}),
    },
)

_FOUR_STATE = StrategyMachine(
    name="four_state",
    start="1",
    states={
        "1": _coin_flip_state(),
        # just scored: yield once; a silent slot means nobody is alternating
        # with us, so grab the channel instead of yielding forever
        "2": StateSpec(0.0, {(I, 0): "4", (I, 1): "3"}),
        "3": StateSpec(1.0, {(T, 1): "2", (T, 2): "3"}),
        # hold the channel; only a collision makes us offer the turn back
        "4": StateSpec(1.0, {(T, 1): "4", (T, 2): "2"}),
    },
)

_FOUR_STATE_ENHANCED = StrategyMachine(
    name="four_state_enhanced",
    start=_FOUR_STATE.start,
    states=_FOUR_STATE.states,
    last_slot_override=True,
)


def _echo_states() -> dict[str, StateSpec]:
    # state id is the opponent's last inferred action
    return {
        "0": StateSpec(0.0, {(I, 0): "0", (I, 1): "1"}),
        "1": StateSpec(1.0, {(T, 1): "0", (T, 2): "1"}),
    }


_BUILTINS: dict[str, StrategyMachine] = {
    "never": StrategyMachine("never", "off", {"off": StateSpec(0.0, {(I, 0): "off", (I, 1): "off"})}),
    "always": StrategyMachine("always", "on", {"on": StateSpec(1.0, {(T, 1): "on", (T, 2): "on"})}),
    "tft0": StrategyMachine("tft0", "0", _echo_states()),
    "tft1": StrategyMachine("tft1", "1", _echo_states()),
    "three_state": _THREE_STATE,
    "four_state": _FOUR_STATE,
    "four_state_enhanced": _FOUR_STATE_ENHANCED,
}

BUILTIN_NAMES: tuple[str, ...] = tuple(_BUILTINS)

# tournament lineup in the customary reporting order
DEFAULT_LINEUP: tuple[str, ...] = (
    "four_state",
    "three_state",
    "tft0",
    "tft1",
    "always",
    "never",
)


def builtin(name: str) -> StrategyMachine:
    """Look up a built-in machine by name.  See BUILTIN_NAMES."""
    try:
        return _BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown builtin strategy {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None


def never_transmits(machine: StrategyMachine) -> bool:
    """True when no reachable state can ever transmit.  Used to locate a
    dead-channel opponent in a tournament lineup whatever it is named."""
    return all(machine.states[s].transmit_prob == 0.0 for s in reachable_states(machine))


def corpus_dir() -> Path:
    """Directory holding the bundled .strat sources for every builtin."""
    return Path(str(resources.files(__package__).joinpath("strategies")))


def load_strategy_file(path: str | Path) -> StrategyMachine:
    return parse_strategy(Path(path).read_text(encoding="utf-8"))


def load_strategy_dir(path: str | Path) -> dict[str, StrategyMachine]:
    """Parse every .strat file in a directory, keyed by declared machine
    name, in sorted filename order."""
    machines: dict[str, StrategyMachine] = {}
    for file in sorted(Path(path).glob("*.strat")):
        machine = load_strategy_file(file)
        if machine.name in machines:
            raise ValueError(f"duplicate machine name {machine.name!r} in {file}")
        machines[machine.name] = machine
    return machines
