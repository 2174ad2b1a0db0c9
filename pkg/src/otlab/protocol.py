"""Exact state machine for the qutrit one-time-table generation protocol.

One honest run: Alice encodes her input bit ``x`` and a fresh coin ``t`` in
the qutrit state ``(|x> + (-1)^t |2>)/sqrt(2)`` and sends it; Bob applies the
diagonal phase gate keyed by his input ``y`` and a fresh output bit ``r`` and
returns the qutrit; Alice measures in the basis
``{(|x>+|2>)/sqrt2, (|x>-|2>)/sqrt2, |1-x>}`` and outputs 0 exactly when the
outcome matches what she sent.  The resulting four bits ``(x, y, e, f)``
satisfy ``e XOR f = x AND y`` and realize a PR-box style one-time table,
which :func:`and_eval` then consumes to compute a distributed AND of fresh
inputs with one-time-pad-masked messages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import InvalidStateError, PureState

__all__ = [
    "OneTimeTable",
    "HonestRunTrace",
    "AndEvalResult",
    "alice_prepare",
    "bob_gate",
    "alice_basis",
    "alice_measure",
    "run_honest",
    "and_eval",
]

_SQRT_HALF = 1.0 / np.sqrt(2.0)


def _check_bit(value: int, name: str) -> int:
    value = int(value)
    if value not in (0, 1):
        raise ValueError(f"{name} must be 0 or 1, got {value}")
    return value


@dataclass(frozen=True)
class OneTimeTable:
    """Four-bit correlation record: inputs ``x, y`` and outputs ``e, f``."""

    x: int
    y: int
    e: int
    f: int

    def __post_init__(self):
        for name in ("x", "y", "e", "f"):
            _check_bit(getattr(self, name), name)

    @property
    def correlation_ok(self) -> bool:
        """Whether ``e XOR f = x AND y`` holds (true on every honest run)."""
        return (self.e ^ self.f) == (self.x & self.y)


@dataclass(frozen=True, eq=False)
class HonestRunTrace:
    """Full record of one honest run, including the quantum states.

    ``outcome`` is the index of the measured analysis vector
    ``(|x> + (-1)^outcome |2>)/sqrt(2)``; honestly it always equals
    ``t XOR (x AND y) XOR r`` and Alice's output bit is ``outcome XOR t``.
    """

    x: int
    t: int
    y: int
    r: int
    sent: PureState
    returned: PureState
    outcome: int


@dataclass(frozen=True)
class AndEvalResult:
    alice_out: int
    bob_out: int
    messages: tuple  # (a_prime, b_prime) as announced


def alice_prepare(x: int, t: int) -> PureState:
    """Sent state ``(|x> + (-1)^t |2>)/sqrt(2)``; amplitudes are machine constants."""
    x, t = _check_bit(x, "x"), _check_bit(t, "t")
    amps = np.zeros(3, dtype=complex)
    amps[x] = _SQRT_HALF
    amps[2] = -_SQRT_HALF if t else _SQRT_HALF
    return PureState(3, amps)


def bob_gate(y: int, r: int) -> np.ndarray:
    """Diagonal phase gate ``diag((-1)^r, (-1)^(y+r), 1)``."""
    y, r = _check_bit(y, "y"), _check_bit(r, "r")
    return np.diag([(-1.0) ** r, (-1.0) ** (y + r), 1.0]).astype(complex)


def alice_basis(x: int) -> np.ndarray:
    """Rows of Alice's three-outcome analysis basis for input ``x``."""
    x = _check_bit(x, "x")
    rows = np.zeros((3, 3), dtype=complex)
    rows[0, x] = rows[1, x] = _SQRT_HALF
    rows[0, 2] = _SQRT_HALF
    rows[1, 2] = -_SQRT_HALF
    rows[2, 1 - x] = 1.0
    return rows


def _measure_index(amplitudes: np.ndarray, x: int, rng: np.random.Generator) -> int:
    """Projective outcome in Alice's basis: exact Born weights, one uniform draw."""
    probs = np.abs(alice_basis(x) @ amplitudes) ** 2
    edges = np.cumsum(probs)
    return int(min(np.searchsorted(edges, rng.random() * edges[-1], side="right"), 2))


def alice_measure(state, x: int, t: int, rng: np.random.Generator) -> int:
    """Alice's output bit for a returned qutrit.

    Returns 0 exactly when the measurement outcome matches the state she sent
    (index ``t``).  The third outcome ``|1-x>`` cannot occur under honest
    operation; when it does occur the output is an unbiased coin, since
    nothing in the run gives Alice information to bias the guess.
    """
    if not isinstance(state, PureState):
        state = PureState.from_amplitudes(state)  # raises InvalidStateError if unnormalized
    if state.dim != 3:
        raise InvalidStateError(f"expected a qutrit state, got dim {state.dim}")
    x, t = _check_bit(x, "x"), _check_bit(t, "t")
    idx = _measure_index(state.amplitudes, x, rng)
    if idx == 2:
        return int(rng.integers(0, 2))
    return idx ^ t


def run_honest(x: int, y: int, rng: np.random.Generator):
    """One honest protocol run; returns ``(OneTimeTable, HonestRunTrace)``.

    Draw order is fixed (t, then r, then the measurement draw) so traces are
    reproducible from the generator state.
    """
    x, y = _check_bit(x, "x"), _check_bit(y, "y")
    t = int(rng.integers(0, 2))
    r = int(rng.integers(0, 2))
    sent = alice_prepare(x, t)
    returned_amps = bob_gate(y, r) @ sent.amplitudes
    returned = PureState(3, returned_amps)
    idx = _measure_index(returned_amps, x, rng)
    if idx == 2:  # impossible for honest parties; kept as a hard failure
        raise RuntimeError("third measurement outcome in an honest run")
    e = idx ^ t
    table = OneTimeTable(x=x, y=y, e=e, f=r)
    trace = HonestRunTrace(x=x, t=t, y=y, r=r, sent=sent, returned=returned, outcome=idx)
    return table, trace


def and_eval(table: OneTimeTable, a: int, b: int) -> AndEvalResult:
    """Distributed AND of fresh inputs ``(a, b)`` using one one-time table.

    Alice announces ``a' = a XOR x`` and Bob ``b' = b XOR y``; the outputs
    ``(x AND b') XOR e`` and ``(a' AND b) XOR f`` XOR to ``a AND b`` whenever
    the table satisfies its correlation.  Works on any table, honest or not.
    """
    a, b = _check_bit(a, "a"), _check_bit(b, "b")
    a_prime = a ^ table.x
    b_prime = b ^ table.y
    alice_out = (table.x & b_prime) ^ table.e
    bob_out = (a_prime & b) ^ table.f
    return AndEvalResult(alice_out=alice_out, bob_out=bob_out, messages=(a_prime, b_prime))
