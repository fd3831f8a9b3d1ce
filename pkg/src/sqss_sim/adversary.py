"""Dishonest-insider strategies that tap the quantum channel.

Strategies see only what passes through their taps and what the parties
announce on the public board; the register bank is handed to ``harvest``
solely so the adversary can measure particles physically in its memory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .channel import ChannelError, Leg, PhotonBundle, PhotonKind, TapPoint
from .quantum import RegisterBank

SHARE, CHECK = 0, 1

NONE = "none"
PASSIVE = "passive"
INTERCEPT_RESEND = "intercept-resend"
TROJAN_HORSE = "trojan-horse"
KINDS = (NONE, PASSIVE, INTERCEPT_RESEND, TROJAN_HORSE)

# "close to" the legitimate band, but outside it
INVISIBLE_WAVELENGTH = 1


@dataclass(frozen=True)
class AdversarySpec:
    kind: str = NONE
    allowed_case3: int = 0
    invisible_per_slot: int = 1
    delay_per_slot: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        if self.allowed_case3 < 0:
            raise ValueError("allowed_case3 must be >= 0")
        if self.invisible_per_slot < 0 or self.delay_per_slot < 0:
            raise ValueError("spy photon counts must be >= 0")
        if self.kind == TROJAN_HORSE and self.invisible_per_slot + self.delay_per_slot == 0:
            raise ValueError("a Trojan-horse attack needs at least one spy photon per slot")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "allowed_case3": self.allowed_case3,
            "invisible_per_slot": self.invisible_per_slot,
            "delay_per_slot": self.delay_per_slot,
        }


@dataclass
class AttackOutcome:
    succeeded: bool
    detected: bool
    bits_recovered: int


class Adversary:
    """Honest channel: no taps, no knowledge."""

    kind = NONE
    protocols: tuple[str, ...] = ("randomization", "measure-resend")
    controls_bob_modes = False

    def __init__(self):
        self.rng: np.random.Generator | None = None
        self.recovered_k_c: np.ndarray | None = None

    def bind(self, rng: np.random.Generator) -> None:
        self.rng = rng

    def taps(self) -> list[TapPoint]:
        return []

    def choose_bob_modes(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def harvest(self, board: Mapping, bank: RegisterBank) -> np.ndarray | None:
        return None

    def knowledge(self) -> dict:
        return {}


class PassiveTap(Adversary):
    """Forwards every bundle untouched; only counts photons."""

    kind = PASSIVE

    def __init__(self):
        super().__init__()
        self.seen: dict[str, int] = {}

    def _forward(self, leg: Leg):
        def handler(bundle: PhotonBundle) -> PhotonBundle:
            self.seen[leg.value] = self.seen.get(leg.value, 0) + len(bundle)
            return bundle

        return handler

    def taps(self) -> list[TapPoint]:
        return [TapPoint(leg, self._forward(leg)) for leg in Leg]

    def knowledge(self) -> dict:
        return {"photons_seen": dict(self.seen)}


def intercept_resend_choose_modes(
    charlie_check_positions, n: int, allowed_case3: int, rng: np.random.Generator
) -> np.ndarray:
    """Bob's modes: SHARE wherever Charlie shared, a fair coin elsewhere.

    With ``allowed_case3 = m > 0`` exactly ``m`` of Charlie's SHARE positions
    get CHECK instead, each producing one case-3 triplet.
    """
    check = np.zeros(n, dtype=bool)
    check[np.asarray(charlie_check_positions, dtype=np.int64)] = True
    modes = np.full(n, SHARE, dtype=np.int8)
    coins = rng.random(n) < 0.5
    modes[check & coins] = CHECK
    if allowed_case3:
        charlie_share = np.flatnonzero(~check)
        if allowed_case3 > len(charlie_share):
            raise ValueError(
                f"cannot force {allowed_case3} case-3 triplets: Charlie shared only "
                f"{len(charlie_share)} positions"
            )
        forced = rng.choice(charlie_share, size=allowed_case3, replace=False)
        modes[forced] = CHECK
    return modes


def _case1_positions(board: Mapping) -> np.ndarray:
    bob, charlie = board["bob_modes"], board["charlie_modes"]
    return np.flatnonzero((bob == SHARE) & (charlie == SHARE))


class InterceptResend(Adversary):
    """Bob swaps S_C for wavelength-tagged fakes and swaps the genuine
    photons back into Charlie's reflected sequence."""

    kind = INTERCEPT_RESEND
    protocols = ("randomization",)
    controls_bob_modes = True

    def __init__(self, allowed_case3: int = 0):
        super().__init__()
        self.allowed_case3 = allowed_case3
        self.stored: PhotonBundle | None = None
        self.fake_bits: np.ndarray | None = None
        self.position_of_wavelength: dict[int, int] = {}
        self.charlie_check_positions: np.ndarray | None = None
        self.bob_modes: np.ndarray | None = None

    def taps(self) -> list[TapPoint]:
        return [
            TapPoint(Leg.ALICE_TO_CHARLIE, self.tap_outbound),
            TapPoint(Leg.CHARLIE_TO_ALICE, self.tap_return),
        ]

    def tap_outbound(self, bundle: PhotonBundle) -> PhotonBundle:
        n = bundle.n_slots
        self.stored = bundle
        self.fake_bits = self.rng.integers(0, 2, n)
        wavelengths = np.arange(1, n + 1)
        self.position_of_wavelength = dict(zip(wavelengths.tolist(), range(n)))
        return PhotonBundle.standalone(self.fake_bits, PhotonKind.FAKE, wavelengths=wavelengths)

    def tap_return(self, bundle: PhotonBundle) -> PhotonBundle:
        prim = bundle.primary()
        try:
            origin = [self.position_of_wavelength[w] for w in bundle.wavelength[prim].tolist()]
        except KeyError as exc:
            raise ChannelError(f"reflected photon with unknown wavelength {exc.args[0]}") from None
        origin = np.asarray(origin, dtype=np.int64)
        self.charlie_check_positions = np.sort(origin)
        # same slot arrangement Charlie produced, genuine photons inside
        return self.stored.take_slots(origin)

    def choose_bob_modes(self, n: int) -> np.ndarray:
        checks = self.charlie_check_positions
        if checks is None:
            checks = np.zeros(0, dtype=np.int64)
        self.bob_modes = intercept_resend_choose_modes(checks, n, self.allowed_case3, self.rng)
        return self.bob_modes

    def harvest(self, board: Mapping, bank: RegisterBank) -> np.ndarray:
        pos = _case1_positions(board)
        registers = self.stored.register[self.stored.primary()[pos]]
        self.recovered_k_c = bank.measure_z(registers, 3, self.rng).astype(np.int8)
        return self.recovered_k_c

    def knowledge(self) -> dict:
        return {
            "stored_photons": 0 if self.stored is None else len(self.stored),
            "wavelength_map_size": len(self.position_of_wavelength),
            "charlie_check_positions": (
                0 if self.charlie_check_positions is None else len(self.charlie_check_positions)
            ),
            "forced_case3": self.allowed_case3,
            "variant": "extension: forced case-3" if self.allowed_case3 else "as published",
        }


class TrojanHorse(Adversary):
    """Bob attaches invisible and delay spies to S_C and reads Charlie's
    fresh photons wherever the spies did not come back."""

    kind = TROJAN_HORSE
    protocols = ("measure-resend",)

    def __init__(self, invisible_per_slot: int = 1, delay_per_slot: int = 1):
        super().__init__()
        self.invisible_per_slot = invisible_per_slot
        self.delay_per_slot = delay_per_slot
        self.spies_attached = 0
        self.recorded: dict[int, int] = {}
        self.partial_slots = 0

    def taps(self) -> list[TapPoint]:
        return [
            TapPoint(Leg.ALICE_TO_CHARLIE, self.tap_outbound),
            TapPoint(Leg.CHARLIE_TO_ALICE, self.tap_return),
        ]

    def tap_outbound(self, bundle: PhotonBundle) -> PhotonBundle:
        n = bundle.n_slots
        if n == 0:
            return bundle
        host_wl = bundle.wavelength[bundle.primary()]
        slots = np.arange(n)
        parts = []
        for _ in range(self.invisible_per_slot):
            parts.append((slots, np.full(n, INVISIBLE_WAVELENGTH), np.zeros(n), PhotonKind.INVISIBLE_SPY))
        for _ in range(self.delay_per_slot):
            parts.append((slots, host_wl, np.ones(n), PhotonKind.DELAY_SPY))
        out = bundle
        for s, wl, tw, kind in parts:
            spy = PhotonBundle(
                n, slot=s, kind=np.full(n, kind), register=np.full(n, -1),
                particle=np.full(n, -1), bit=np.full(n, -1), wavelength=wl,
                time_window=tw, position=s,
            )
            out = out.with_photons(spy)
        self.spies_attached += n * len(parts)
        return out

    def tap_return(self, bundle: PhotonBundle) -> PhotonBundle:
        spy_counts = np.bincount(bundle.slot[bundle.is_spy()], minlength=bundle.n_slots)
        expected = self.invisible_per_slot + self.delay_per_slot
        # partial survival only happens behind Charlie's filters
        self.partial_slots += int(np.sum((spy_counts > 0) & (spy_counts != expected)))
        vanished = np.flatnonzero(spy_counts == 0)
        prim = bundle.primary()[vanished]
        if np.any(prim < 0) or np.any(bundle.kind[prim] != PhotonKind.FRESH):
            raise ChannelError("slot without spies does not hold a freshly prepared photon")
        # Z-measuring a classical-basis photon returns its bit and leaves it intact
        self.recorded.update(zip(vanished.tolist(), bundle.bit[prim].tolist()))
        return bundle.without_spies()

    def harvest(self, board: Mapping, bank: RegisterBank) -> np.ndarray:
        pos = _case1_positions(board)
        self.recovered_k_c = np.array([self.recorded[p] for p in pos.tolist()], dtype=np.int8)
        return self.recovered_k_c

    def knowledge(self) -> dict:
        return {
            "spies_attached": self.spies_attached,
            "share_positions_inferred": len(self.recorded),
            "partial_spy_slots": self.partial_slots,
        }


def make_adversary(spec: AdversarySpec) -> Adversary:
    if spec.kind == INTERCEPT_RESEND:
        return InterceptResend(spec.allowed_case3)
    if spec.kind == TROJAN_HORSE:
        return TrojanHorse(spec.invisible_per_slot, spec.delay_per_slot)
    if spec.kind == PASSIVE:
        return PassiveTap()
    return Adversary()
