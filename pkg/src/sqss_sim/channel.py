"""Photon sequences in transit: tags, delay-line reordering, taps and filters.

A :class:`PhotonBundle` is stored column-wise. Every photon occupies one
time slot of the carrying sequence; an honest bundle has exactly one photon
per slot, an attacked one may carry spy photons alongside the primary.
Wavelength and time window are abstract integer tags with the legitimate
band and the host window both equal to 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Callable, Iterable, Sequence

import numpy as np

LEGIT_BAND = frozenset({0})


class PhotonKind(IntEnum):
    GENUINE = 0
    FAKE = 1
    FRESH = 2
    INVISIBLE_SPY = 3
    DELAY_SPY = 4

    @property
    def is_spy(self) -> bool:
        return self >= PhotonKind.INVISIBLE_SPY


class Leg(str, Enum):
    ALICE_TO_BOB = "AliceToBob"
    ALICE_TO_CHARLIE = "AliceToCharlie"
    BOB_TO_ALICE = "BobToAlice"
    CHARLIE_TO_ALICE = "CharlieToAlice"


class ChannelError(RuntimeError):
    pass


@dataclass(frozen=True)
class Photon:
    """Row view of one photon in a bundle.

    ``payload`` is ``(register_id, particle)`` for genuine photons and the
    classical bit for standalone ones (fake, fresh). Spies carry ``None``.
    """

    slot: int
    kind: PhotonKind
    payload: object
    wavelength: int
    time_window: int
    position: int


_COLUMNS = ("slot", "kind", "register", "particle", "bit", "wavelength", "time_window", "position")


class PhotonBundle:
    def __init__(self, n_slots: int, **cols: np.ndarray):
        self.n_slots = int(n_slots)
        n = len(cols["slot"])
        for name in _COLUMNS:
            arr = cols.get(name)
            if arr is None:
                arr = np.full(n, -1, dtype=np.int64)
            elif not (isinstance(arr, np.ndarray) and arr.dtype == np.int64):
                arr = np.asarray(arr, dtype=np.int64)
            setattr(self, name, arr)

    # constructors ---------------------------------------------------------

    @classmethod
    def empty(cls, n_slots: int = 0) -> "PhotonBundle":
        return cls(n_slots, **{c: np.zeros(0, dtype=np.int64) for c in _COLUMNS})

    @classmethod
    def genuine(cls, register_ids, particle: int) -> "PhotonBundle":
        """One genuine photon per slot carrying ``particle`` of each register."""
        reg = np.asarray(register_ids, dtype=np.int64)
        n = len(reg)
        return cls(
            n,
            slot=np.arange(n),
            kind=np.full(n, PhotonKind.GENUINE),
            register=reg,
            particle=np.full(n, particle),
            bit=np.full(n, -1),
            wavelength=np.zeros(n),
            time_window=np.zeros(n),
            position=np.arange(n),
        )

    @classmethod
    def standalone(
        cls, bits, kind: PhotonKind, wavelengths=None, positions=None, slots=None, n_slots=None
    ) -> "PhotonBundle":
        """Classical-basis photons |bit>, by default one per slot."""
        bits = np.asarray(bits, dtype=np.int64)
        n = len(bits)
        return cls(
            n if n_slots is None else n_slots,
            slot=np.arange(n) if slots is None else slots,
            kind=np.full(n, kind),
            register=np.full(n, -1),
            particle=np.full(n, -1),
            bit=bits,
            wavelength=np.zeros(n) if wavelengths is None else wavelengths,
            time_window=np.zeros(n),
            position=(np.arange(n) if slots is None else slots) if positions is None else positions,
        )

    # views ------------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.slot)

    def _cols(self) -> dict:
        return {c: getattr(self, c) for c in _COLUMNS}

    def _subset(self, mask, n_slots: int | None = None) -> "PhotonBundle":
        cols = {c: v[mask] for c, v in self._cols().items()}
        return PhotonBundle(self.n_slots if n_slots is None else n_slots, **cols)

    def photon(self, i: int) -> Photon:
        kind = PhotonKind(int(self.kind[i]))
        if kind == PhotonKind.GENUINE:
            payload = (int(self.register[i]), int(self.particle[i]))
        elif kind in (PhotonKind.FAKE, PhotonKind.FRESH):
            payload = int(self.bit[i])
        else:
            payload = None
        return Photon(
            int(self.slot[i]), kind, payload, int(self.wavelength[i]),
            int(self.time_window[i]), int(self.position[i]),
        )

    def photons(self) -> list[Photon]:
        order = np.lexsort((self.kind, self.slot))
        return [self.photon(i) for i in order]

    def is_spy(self) -> np.ndarray:
        return self.kind >= PhotonKind.INVISIBLE_SPY

    def slot_counts(self) -> np.ndarray:
        return np.bincount(self.slot, minlength=self.n_slots)

    def primary(self) -> np.ndarray:
        """Index of the primary (non-spy) photon in each slot, -1 if vacant."""
        out = np.full(self.n_slots, -1, dtype=np.int64)
        idx = np.flatnonzero(~self.is_spy())
        if len(np.unique(self.slot[idx])) != len(idx):
            raise ChannelError("slot carries more than one primary photon")
        out[self.slot[idx]] = idx
        return out

    def take_slots(self, order) -> "PhotonBundle":
        """New bundle whose slot ``j`` holds the contents of old slot ``order[j]``."""
        order = np.asarray(order, dtype=np.int64)
        new_of_old = np.full(self.n_slots, -1, dtype=np.int64)
        new_of_old[order] = np.arange(len(order))
        keep = new_of_old[self.slot] >= 0
        out = self._subset(keep, n_slots=len(order))
        out.slot = new_of_old[out.slot]
        return out

    def relocate(self, positions, n_slots: int) -> "PhotonBundle":
        """Move the contents of slot ``j`` to slot ``positions[j]`` of a wider bundle."""
        positions = np.asarray(positions, dtype=np.int64)
        if len(positions) != self.n_slots:
            raise ChannelError("one target position per slot required")
        out = self.copy()
        out.n_slots = int(n_slots)
        out.slot = positions[self.slot] if len(self) else out.slot
        return out

    def with_photons(self, other: "PhotonBundle") -> "PhotonBundle":
        """Merge ``other``'s photons into this bundle's slots."""
        if other.n_slots != self.n_slots:
            raise ChannelError("slot counts differ")
        cols = {c: np.concatenate([getattr(self, c), getattr(other, c)]) for c in _COLUMNS}
        return PhotonBundle(self.n_slots, **cols)

    def without_spies(self) -> "PhotonBundle":
        return self._subset(~self.is_spy())

    def copy(self) -> "PhotonBundle":
        return PhotonBundle(self.n_slots, **{c: v.copy() for c, v in self._cols().items()})

    def multiset(self) -> list[tuple]:
        """Sorted photon identities, ignoring slot placement."""
        rows = zip(*(getattr(self, c).tolist() for c in _COLUMNS[1:]))
        return sorted(rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhotonBundle) or other.n_slots != self.n_slots:
            return False
        return all(np.array_equal(getattr(self, c), getattr(other, c)) for c in _COLUMNS)

    def __repr__(self) -> str:
        return f"PhotonBundle(n_slots={self.n_slots}, photons={len(self)})"


# --------------------------------------------------------------------------

TapHandler = Callable[[PhotonBundle], PhotonBundle]


@dataclass(frozen=True)
class TapPoint:
    leg: Leg
    handler: TapHandler


def tap_table(taps: Iterable[TapPoint]) -> dict[Leg, TapHandler]:
    table: dict[Leg, TapHandler] = {}
    for tap in taps:
        if tap.leg in table:
            raise ChannelError(f"second tap registered on {tap.leg.value}")
        table[tap.leg] = tap.handler
    return table


def transmit(bundle: PhotonBundle, leg: Leg, taps: Sequence[TapPoint] | dict = ()) -> PhotonBundle:
    """Deliver ``bundle`` over a noiseless, lossless leg, passing any tap first."""
    table = taps if isinstance(taps, dict) else tap_table(taps)
    handler = table.get(leg)
    return bundle if handler is None else handler(bundle)


def random_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(n)


def reorder(bundle: PhotonBundle, permutation) -> tuple[PhotonBundle, np.ndarray]:
    """Delay-line reordering: output slot ``j`` carries input slot ``permutation[j]``."""
    perm = np.asarray(permutation, dtype=np.int64)
    if len(perm) != bundle.n_slots or not np.array_equal(np.sort(perm), np.arange(bundle.n_slots)):
        raise ChannelError("reordering must be a bijection on the bundle's slots")
    return bundle.take_slots(perm), perm


def restore(bundle: PhotonBundle, permutation) -> PhotonBundle:
    """Undo :func:`reorder` given the announced permutation."""
    perm = np.asarray(permutation, dtype=np.int64)
    return bundle.take_slots(np.argsort(perm))


def wavelength_filter(bundle: PhotonBundle, passband=LEGIT_BAND) -> tuple[PhotonBundle, int]:
    inside = np.isin(bundle.wavelength, list(passband))
    return bundle._subset(inside), int(np.sum(~inside))


def photon_number_split(bundle: PhotonBundle) -> tuple[np.ndarray, float]:
    """Per-slot photon counts and the fraction of slots holding more than one."""
    counts = bundle.slot_counts()
    if bundle.n_slots == 0:
        return counts, 0.0
    return counts, float(np.mean(counts > 1))
