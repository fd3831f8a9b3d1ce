"""Exact state-vector mechanics for independent three-qubit registers.

Basis labels are ``b1 b2 b3`` with slot 1 the most significant bit, so the
amplitude of ``|b1 b2 b3>`` lives at index ``4*b1 + 2*b2 + b3``. Slot 1 is
the dealer's particle, slots 2 and 3 belong to the two agents.

Two code paths live here on purpose:

* the sampling kernels (``_sample_z`` and friends) operate on stacks of
  state vectors and back both :class:`TripletRegister` and the batched
  :class:`RegisterBank` used by the protocol engine;
* :func:`outcome_distribution` enumerates measurement branches with explicit
  8x8 projectors and never samples. Tests compare the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence, Union

import numpy as np

TOL = 1e-9
# probabilities below this are floating-point residue, not physics
_ZERO_PROB = 1e-14

_S = 1 / np.sqrt(2)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _S

StateVector3 = np.ndarray


class ContractViolation(RuntimeError):
    """Raised when a measurement is requested on an invalid slot selection."""


class BellOutcome(IntEnum):
    PHI_PLUS = 0
    PHI_MINUS = 1
    PSI_PLUS = 2
    PSI_MINUS = 3

    def __str__(self) -> str:
        return {0: "PhiPlus", 1: "PhiMinus", 2: "PsiPlus", 3: "PsiMinus"}[self.value]


# BELL_VECTORS[k, x, y] = <x y | Bell_k>
BELL_VECTORS = np.zeros((4, 2, 2), dtype=complex)
BELL_VECTORS[BellOutcome.PHI_PLUS] = [[_S, 0], [0, _S]]
BELL_VECTORS[BellOutcome.PHI_MINUS] = [[_S, 0], [0, -_S]]
BELL_VECTORS[BellOutcome.PSI_PLUS] = [[0, _S], [_S, 0]]
BELL_VECTORS[BellOutcome.PSI_MINUS] = [[0, _S], [-_S, 0]]


def basis_index(label: str | Sequence[int]) -> int:
    bits = [int(c) for c in label]
    if len(bits) != 3 or any(b not in (0, 1) for b in bits):
        raise ValueError(f"bad basis label {label!r}")
    return 4 * bits[0] + 2 * bits[1] + bits[2]


def basis_label(index: int) -> str:
    return format(index, "03b")


def basis_state(label: str | Sequence[int]) -> StateVector3:
    state = np.zeros(8, dtype=complex)
    state[basis_index(label)] = 1.0
    return state


def make_ghz(sign: int = 1) -> StateVector3:
    """(|000> + sign*|111>)/sqrt(2)."""
    state = np.zeros(8, dtype=complex)
    state[0] = _S
    state[7] = sign * _S
    return state


def make_ghz_like() -> StateVector3:
    """1/2 (|000> + |011> + |110> + |101>)."""
    state = np.zeros(8, dtype=complex)
    state[[0b000, 0b011, 0b110, 0b101]] = 0.5
    return state


def _check_slot(slot: int) -> int:
    if slot not in (1, 2, 3):
        raise ValueError(f"slot must be 1, 2 or 3, got {slot!r}")
    return slot


def apply_single(state: StateVector3, gate: np.ndarray, slot: int) -> StateVector3:
    _check_slot(slot)
    t = np.asarray(state, dtype=complex).reshape(2, 2, 2)
    t = np.moveaxis(np.tensordot(gate, t, axes=([1], [slot - 1])), 0, slot - 1)
    return t.reshape(8)


def apply_hadamard(state: StateVector3, slot: int) -> StateVector3:
    return apply_single(state, HADAMARD, slot)


def hadamard_all(state: StateVector3) -> StateVector3:
    for slot in (1, 2, 3):
        state = apply_hadamard(state, slot)
    return state


def _joint_basis() -> np.ndarray:
    rows = []
    for b in range(4):
        lo, hi = b, 7 - b  # |0 b2 b3> and its bitwise complement
        for sign in (1, -1):
            v = np.zeros(8, dtype=complex)
            v[lo] = _S
            v[hi] = sign * _S
            rows.append(hadamard_all(v))
    return np.array(rows)


# row j is the j-th joint measurement vector; row 0 is the GHZ-like state
JOINT_BASIS = _joint_basis()


def norm(state: StateVector3) -> float:
    return float(np.sqrt(np.sum(np.abs(state) ** 2)))


def states_close(a: StateVector3, b: StateVector3, tol: float = TOL) -> bool:
    return bool(np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol)


# --------------------------------------------------------------------------
# batched sampling kernels: ``states`` has shape (k, 8), ``u`` shape (k,)


def _pick(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    probs = np.where(probs < _ZERO_PROB, 0.0, probs)
    cum = np.cumsum(probs, axis=1)
    target = u * cum[:, -1]
    choice = np.sum(cum <= target[:, None], axis=1)
    return np.minimum(choice, probs.shape[1] - 1)


def _sample_z(states: np.ndarray, slot: int, u: np.ndarray):
    t = states.reshape(-1, 2, 2, 2)
    ax = slot  # axis 0 is the stack
    one = np.take(t, 1, axis=ax)
    p1 = np.sum(np.abs(one.reshape(len(t), 4)) ** 2, axis=1)
    p1 = np.where(p1 < _ZERO_PROB, 0.0, p1)
    bits = (u < p1).astype(np.int8)
    mask = np.zeros((len(t), 2, 2, 2), dtype=bool)
    idx = [slice(None)] * 4
    idx[ax] = 0
    mask[tuple(idx)] = (bits == 0)[:, None, None]
    idx[ax] = 1
    mask[tuple(idx)] = (bits == 1)[:, None, None]
    out = np.where(mask, t, 0).reshape(-1, 8)
    out /= np.sqrt(np.sum(np.abs(out) ** 2, axis=1, keepdims=True))
    return bits, out


def _pair_axes(slot_a: int, slot_b: int) -> tuple[int, int, int]:
    rest = ({1, 2, 3} - {slot_a, slot_b}).pop()
    return slot_a - 1, slot_b - 1, rest - 1


def _sample_bell(states: np.ndarray, slot_a: int, slot_b: int, u: np.ndarray):
    a, b, r = _pair_axes(slot_a, slot_b)
    t = np.transpose(states.reshape(-1, 2, 2, 2), (0, a + 1, b + 1, r + 1))
    # conditional (unnormalised) amplitude of the remaining slot per outcome
    rem = np.einsum("kxyr,oxy->kor", t, BELL_VECTORS.conj())
    probs = np.sum(np.abs(rem) ** 2, axis=2)
    choice = _pick(probs, u)
    k = np.arange(len(t))
    r_amp = rem[k, choice]
    r_amp /= np.sqrt(np.sum(np.abs(r_amp) ** 2, axis=1, keepdims=True))
    post = np.einsum("kxy,kr->kxyr", BELL_VECTORS[choice], r_amp)
    inv = np.argsort((0, a + 1, b + 1, r + 1))
    return choice.astype(np.int8), np.transpose(post, inv).reshape(-1, 8)


def _sample_joint(states: np.ndarray, u: np.ndarray):
    amps = states @ JOINT_BASIS.conj().T
    choice = _pick(np.abs(amps) ** 2, u)
    return choice.astype(np.int8), JOINT_BASIS[choice].copy()


def _check_pair(slot_a: int, slot_b: int) -> None:
    _check_slot(slot_a)
    _check_slot(slot_b)
    if slot_a == slot_b:
        raise ContractViolation("Bell measurement needs two distinct slots")


# --------------------------------------------------------------------------


Outcome = Union[int, BellOutcome]


@dataclass
class TripletRegister:
    """One GHZ-like triplet with per-slot collapse bookkeeping."""

    id: int
    state: StateVector3 = field(default_factory=make_ghz_like)
    collapsed: list = field(default_factory=lambda: [False, False, False])
    recorded_outcomes: list = field(default_factory=lambda: [None, None, None])

    def is_collapsed(self, slot: int) -> bool:
        return self.collapsed[_check_slot(slot) - 1]

    def _record(self, slot: int, outcome) -> None:
        self.collapsed[slot - 1] = True
        self.recorded_outcomes[slot - 1] = outcome


def measure_z(register: TripletRegister, slot: int, rng: np.random.Generator) -> int:
    """Z-basis measurement of one slot; returns the classical bit."""
    if register.is_collapsed(slot):
        raise ContractViolation(f"slot {slot} of register {register.id} already measured")
    bits, post = _sample_z(register.state[None, :], slot, rng.random(1))
    register.state = post[0]
    bit = int(bits[0])
    register._record(slot, bit)
    return bit


def measure_bell(
    register: TripletRegister, slot_a: int, slot_b: int, rng: np.random.Generator
) -> BellOutcome:
    _check_pair(slot_a, slot_b)
    if register.is_collapsed(slot_a) or register.is_collapsed(slot_b):
        raise ContractViolation("Bell measurement on a collapsed slot")
    choice, post = _sample_bell(register.state[None, :], slot_a, slot_b, rng.random(1))
    register.state = post[0]
    outcome = BellOutcome(int(choice[0]))
    register._record(slot_a, outcome)
    register._record(slot_b, outcome)
    return outcome


def measure_joint(register: TripletRegister, rng: np.random.Generator) -> int:
    """Projective measurement onto ``JOINT_BASIS``; returns the row index."""
    if any(register.collapsed):
        raise ContractViolation("joint measurement needs three uncollapsed slots")
    choice, post = _sample_joint(register.state[None, :], rng.random(1))
    register.state = post[0]
    index = int(choice[0])
    for slot in (1, 2, 3):
        register._record(slot, index)
    return index


class RegisterBank:
    """Stack of independent triplet registers, measured in vectorised batches.

    ``outcomes`` holds the recorded result code per slot (-1 when the slot is
    uncollapsed): a bit for Z, a :class:`BellOutcome` value for Bell pairs and
    the joint-basis index for joint measurements.
    """

    def __init__(self, n: int, state: StateVector3 | None = None):
        base = make_ghz_like() if state is None else np.asarray(state, dtype=complex)
        self.states = np.tile(base, (n, 1))
        self.collapsed = np.zeros((n, 3), dtype=bool)
        self.outcomes = np.full((n, 3), -1, dtype=np.int8)

    def __len__(self) -> int:
        return len(self.states)

    def register(self, i: int) -> TripletRegister:
        """Snapshot of register ``i`` as a standalone :class:`TripletRegister`."""
        outs = [None if o < 0 else int(o) for o in self.outcomes[i]]
        return TripletRegister(i, self.states[i].copy(), list(map(bool, self.collapsed[i])), outs)

    def _guard(self, idx: np.ndarray, slots: Sequence[int]) -> None:
        cols = [s - 1 for s in slots]
        if self.collapsed[idx][:, cols].any():
            raise ContractViolation(f"measurement on collapsed slot(s) {list(slots)}")

    def measure_z(self, idx, slot: int, rng: np.random.Generator) -> np.ndarray:
        _check_slot(slot)
        idx = np.asarray(idx, dtype=np.intp)
        self._guard(idx, [slot])
        bits, post = _sample_z(self.states[idx], slot, rng.random(len(idx)))
        self.states[idx] = post
        self.collapsed[idx, slot - 1] = True
        self.outcomes[idx, slot - 1] = bits
        return bits

    def measure_bell(self, idx, slot_a: int, slot_b: int, rng: np.random.Generator) -> np.ndarray:
        _check_pair(slot_a, slot_b)
        idx = np.asarray(idx, dtype=np.intp)
        self._guard(idx, [slot_a, slot_b])
        labels, post = _sample_bell(self.states[idx], slot_a, slot_b, rng.random(len(idx)))
        self.states[idx] = post
        for s in (slot_a, slot_b):
            self.collapsed[idx, s - 1] = True
            self.outcomes[idx, s - 1] = labels
        return labels

    def measure_joint(self, idx, rng: np.random.Generator) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.intp)
        self._guard(idx, [1, 2, 3])
        labels, post = _sample_joint(self.states[idx], rng.random(len(idx)))
        self.states[idx] = post
        self.collapsed[idx] = True
        self.outcomes[idx] = labels[:, None]
        return labels


# --------------------------------------------------------------------------
# brute-force oracle


def _embed(op2: np.ndarray, slots: Sequence[int]) -> np.ndarray:
    """8x8 matrix acting as ``op2`` on ``slots`` (in that order), identity elsewhere."""
    n_act = len(slots)
    full = np.zeros((8, 8), dtype=complex)
    for row in range(8):
        rb = [(row >> (2 - i)) & 1 for i in range(3)]
        for col in range(8):
            cb = [(col >> (2 - i)) & 1 for i in range(3)]
            if any(rb[i] != cb[i] for i in range(3) if i + 1 not in slots):
                continue
            r = sum(rb[s - 1] << (n_act - 1 - j) for j, s in enumerate(slots))
            c = sum(cb[s - 1] << (n_act - 1 - j) for j, s in enumerate(slots))
            full[row, col] = op2[r, c]
    return full


def _projectors(step) -> list[tuple[Outcome, np.ndarray]]:
    kind = step[0]
    if kind == "Z":
        slot = _check_slot(step[1])
        return [(b, _embed(np.diag([1.0 - b, float(b)]), [slot])) for b in (0, 1)]
    if kind == "Bell":
        _check_pair(step[1], step[2])
        out = []
        for o in BellOutcome:
            v = BELL_VECTORS[o].reshape(4)
            out.append((o, _embed(np.outer(v, v.conj()), [step[1], step[2]])))
        return out
    if kind == "Joint":
        return [(j, np.outer(JOINT_BASIS[j], JOINT_BASIS[j].conj())) for j in range(8)]
    raise ValueError(f"unknown measurement descriptor {step!r}")


def _plan_slots(step) -> set[int]:
    return {"Z": lambda s: {s[1]}, "Bell": lambda s: {s[1], s[2]}}.get(
        step[0], lambda s: {1, 2, 3}
    )(step)


def outcome_distribution(state: StateVector3, plan: Sequence[tuple]) -> dict[tuple, float]:
    """Exact probability of every outcome tuple for a sequence of measurements.

    ``plan`` is a list of descriptors ``("Z", slot)``, ``("Bell", a, b)`` or
    ``("Joint",)``. Branches are enumerated with explicit projectors; nothing
    is sampled. Zero-probability branches are omitted from the result.
    """
    used: set[int] = set()
    for step in plan:
        slots = _plan_slots(step)
        if used & slots:
            raise ContractViolation(f"plan measures slot(s) {sorted(used & slots)} twice")
        used |= slots
    projectors = [_projectors(step) for step in plan]

    dist: dict[tuple, float] = {}

    def branch(vec: np.ndarray, depth: int, prefix: tuple) -> None:
        if depth == len(plan):
            dist[prefix] = dist.get(prefix, 0.0) + float(np.vdot(vec, vec).real)
            return
        for outcome, proj in projectors[depth]:
            nxt = proj @ vec
            if float(np.vdot(nxt, nxt).real) > _ZERO_PROB:
                branch(nxt, depth + 1, prefix + (outcome,))

    branch(np.asarray(state, dtype=complex), 0, ())
    return dist
