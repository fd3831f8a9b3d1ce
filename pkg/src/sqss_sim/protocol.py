"""The two semi-quantum secret sharing protocols as step machines.

Both variants share Steps 1, 4, 5 and 6. They differ in what an agent does
with a SHARE photon (randomization-based: measure and keep; measure-resend:
measure and return a fresh photon in the measured state) and in whether
reflected CHECK photons are reordered through delay lines (randomization-based
only).

Each run keeps an ordered event log. Announcements go on a public board that
the adversary may read; everything else stays private to its party.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any, Optional, Union

import numpy as np

from . import adversary as adv
from .channel import (
    Leg,
    PhotonBundle,
    PhotonKind,
    photon_number_split,
    reorder,
    tap_table,
    transmit,
    wavelength_filter,
)
from .quantum import (
    BellOutcome,
    RegisterBank,
    TripletRegister,
    measure_bell,
    measure_joint,
    measure_z,
)
from .stats import binomial_lower_pvalue



class Mode(IntEnum):
    SHARE = 0
    CHECK = 1


SHARE, CHECK = int(Mode.SHARE), int(Mode.CHECK)


class Protocol(str, Enum):
    RANDOMIZATION = "randomization"
    MEASURE_RESEND = "measure-resend"


class AbortReason(str, Enum):
    ERROR_RATE = "ErrorRateExceeded"
    CASE3_DEFICIENT = "Case3Deficient"
    MULTI_PHOTON = "MultiPhotonExceeded"
    FILTERED_PHOTONS = "FilteredPhotonExceeded"


class ProtocolError(RuntimeError):
    pass


@dataclass
class RunConfig:
    n: int = 1000
    protocol: Protocol = Protocol.RANDOMIZATION
    share_probability: float = 0.5
    error_threshold: float = 0.0
    solution1: bool = False
    significance: float = 0.001
    solution2: bool = False
    multiphoton_threshold: float = 0.01

    def __post_init__(self):
        self.protocol = Protocol(self.protocol)
        if self.n < 1:
            raise ValueError(f"N must be >= 1, got {self.n}")
        if not 0.0 <= self.share_probability <= 1.0:
            raise ValueError(f"share_probability must lie in [0, 1], got {self.share_probability}")
        for name in ("error_threshold", "significance", "multiphoton_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def case3_probability(self) -> float:
        return (1.0 - self.share_probability) * self.share_probability


def case_of(bob_modes, charlie_modes) -> np.ndarray:
    """Case number: 1 SHARE/SHARE, 2 SHARE/CHECK, 3 CHECK/SHARE, 4 CHECK/CHECK."""
    return (1 + np.asarray(charlie_modes) + 2 * np.asarray(bob_modes)).astype(np.int8)


# ---------------------------------------------------------------------------
# records


@dataclass
class CaseRecord:
    triplet: int
    case: int
    alice_result: Union[int, BellOutcome]
    bob_announced: Optional[int] = None
    charlie_announced: Optional[int] = None
    consistent: Optional[bool] = None


class CaseTable:
    """Column store of per-triplet case records.

    ``bob_bits``/``charlie_bits`` are the agents' private SHARE results;
    ``bob_announced``/``charlie_announced`` hold only what was published in
    Step 5 (Bob's bit in case 2, Charlie's in case 3). -1 marks absence.
    """

    def __init__(self, cases: np.ndarray):
        n = len(cases)
        self.case = np.asarray(cases, dtype=np.int8)
        self.alice_result = np.full(n, -1, dtype=np.int8)
        self.bob_bits = np.full(n, -1, dtype=np.int8)
        self.charlie_bits = np.full(n, -1, dtype=np.int8)
        self.bob_announced = np.full(n, -1, dtype=np.int8)
        self.charlie_announced = np.full(n, -1, dtype=np.int8)
        self.consistent = np.full(n, -1, dtype=np.int8)

    @classmethod
    def from_records(cls, records: list[CaseRecord]) -> "CaseTable":
        t = cls(np.array([r.case for r in records], dtype=np.int8))
        for i, r in enumerate(records):
            t.alice_result[i] = int(r.alice_result)
            if r.bob_announced is not None:
                t.bob_announced[i] = r.bob_announced
            if r.charlie_announced is not None:
                t.charlie_announced[i] = r.charlie_announced
        return t

    def __len__(self) -> int:
        return len(self.case)

    def counts(self) -> dict[int, int]:
        c = np.bincount(self.case, minlength=5)
        return {k: int(c[k]) for k in (1, 2, 3, 4)}

    def record(self, i: int) -> CaseRecord:
        case = int(self.case[i])
        res = int(self.alice_result[i])
        opt = lambda v: None if v < 0 else int(v)  # noqa: E731
        return CaseRecord(
            triplet=i,
            case=case,
            alice_result=BellOutcome(res) if case in (2, 3) and res >= 0 else res,
            bob_announced=opt(self.bob_announced[i]),
            charlie_announced=opt(self.charlie_announced[i]),
            consistent=None if self.consistent[i] < 0 else bool(self.consistent[i]),
        )


@dataclass
class KeyTriple:
    k_a: np.ndarray
    k_b: np.ndarray
    k_c: np.ndarray

    @property
    def relation_holds(self) -> bool:
        return bool(np.array_equal(self.k_a, self.k_b ^ self.k_c))

    def __len__(self) -> int:
        return len(self.k_a)

    @staticmethod
    def bits(a: np.ndarray) -> str:
        return "".join("1" if b else "0" for b in a.tolist())


@dataclass
class CheckVerdict:
    error_rate: float
    checked: int
    inconsistent: int
    case3_count: int
    n: int
    case3_pvalue: Optional[float] = None
    abort_reason: Optional[AbortReason] = None

    @property
    def case3_occurrence(self) -> float:
        return self.case3_count / self.n if self.n else 0.0

    @property
    def passed(self) -> bool:
        return self.abort_reason is None

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "abort_reason": None if self.abort_reason is None else self.abort_reason.value,
            "error_rate": self.error_rate,
            "checked": self.checked,
            "inconsistent": self.inconsistent,
            "case3_count": self.case3_count,
            "case3_occurrence": self.case3_occurrence,
            "case3_pvalue": self.case3_pvalue,
        }


# ---------------------------------------------------------------------------
# checks


def consistency(table: CaseTable) -> np.ndarray:
    """Per-triplet GHZ-like correlation predicate; -1 for case 1."""
    case, res = table.case, table.alice_result
    out = np.full(len(table), -1, dtype=np.int8)
    expect_bell = lambda bit: np.where(bit == 0, BellOutcome.PHI_PLUS, BellOutcome.PSI_PLUS)  # noqa: E731
    for c, announced in ((2, table.bob_announced), (3, table.charlie_announced)):
        m = case == c
        ok = (announced[m] >= 0) & (res[m] == expect_bell(announced[m]))
        out[m] = ok
    m4 = case == 4
    out[m4] = res[m4] == 0
    return out


def eavesdrop_check(
    table: CaseTable, error_threshold: float = 0.0, extra_mismatch: np.ndarray | None = None
) -> CheckVerdict:
    """Step-5 check over cases 2-4; sets ``table.consistent``.

    ``extra_mismatch`` flags triplets that fail an additional comparison
    (used by the measure-resend variant for returned fresh photons).
    """
    ok = consistency(table)
    if extra_mismatch is not None:
        ok = np.where((ok >= 0) & extra_mismatch, 0, ok).astype(np.int8)
    table.consistent = ok
    checked = int(np.sum(ok >= 0))
    bad = int(np.sum(ok == 0))
    rate = bad / checked if checked else 0.0
    return CheckVerdict(
        error_rate=rate,
        checked=checked,
        inconsistent=bad,
        case3_count=int(np.sum(table.case == 3)),
        n=len(table),
        abort_reason=AbortReason.ERROR_RATE if rate > error_threshold else None,
    )


def case3_pvalue(case3_count: int, n: int, p: float = 0.25) -> float:
    return binomial_lower_pvalue(case3_count, n, p)


def case3_occurrence_test(table: CaseTable, significance: float = 0.001, p: float = 0.25) -> bool:
    """Lower-tail test of the case-3 count against Binomial(N, p); True = pass."""
    return case3_pvalue(int(np.sum(table.case == 3)), len(table), p) >= significance


def extract_keys(table: CaseTable, verdict: CheckVerdict) -> KeyTriple:
    if not verdict.passed:
        raise ProtocolError(f"no keys from an aborted run ({verdict.abort_reason.value})")
    m = table.case == 1
    return KeyTriple(
        table.alice_result[m].astype(np.int8),
        table.bob_bits[m].astype(np.int8),
        table.charlie_bits[m].astype(np.int8),
    )


def alice_action(case: int, register: TripletRegister, returned: dict, rng: np.random.Generator):
    """Alice's case action for one triplet.

    ``returned`` maps ``"bob"``/``"charlie"`` to the genuine photon the agent
    reflected (a :class:`~sqss_sim.channel.Photon`), or ``None``.
    """

    def particle(agent: str, expected: int) -> int:
        ph = returned.get(agent)
        if ph is None:
            raise ProtocolError(f"case {case}: no photon returned by {agent}")
        if ph.kind != PhotonKind.GENUINE or ph.payload != (register.id, expected):
            raise ProtocolError(f"case {case}: {agent} returned a foreign photon {ph}")
        return expected

    if case == 1:
        return measure_z(register, 1, rng)
    if case == 2:
        return measure_bell(register, 1, particle("charlie", 3), rng)
    if case == 3:
        return measure_bell(register, 1, particle("bob", 2), rng)
    if case == 4:
        particle("bob", 2)
        particle("charlie", 3)
        return measure_joint(register, rng)
    raise ValueError(f"case must be 1..4, got {case}")


# ---------------------------------------------------------------------------
# event log


@dataclass
class Event:
    seq: int
    step: str
    kind: str
    party: str
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"seq": self.seq, "step": self.step, "kind": self.kind, "party": self.party,
                "data": {k: _jsonable(v) for k, v in self.data.items()}}


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, Enum):
        return v.value
    return v


class EventLog(list):
    def emit(self, step: str, kind: str, party: str, **data) -> int:
        seq = len(self)
        self.append(Event(seq, step, kind, party, data))
        return seq


# ---------------------------------------------------------------------------
# run report


@dataclass
class RunReport:
    protocol: Protocol
    n: int
    case_counts: dict[int, int]
    verdict: CheckVerdict
    keys: Optional[KeyTriple]
    screening: dict[str, dict]
    adversary_kind: str
    adversary_knowledge: dict
    recovered_k_c: Optional[np.ndarray]
    attack: Optional[adv.AttackOutcome]
    share_bit_mismatches: Optional[int]
    photon_counts: dict[str, int]
    events: EventLog
    aborted_at: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.verdict.passed

    @property
    def key_relation_holds(self) -> Optional[bool]:
        return None if self.keys is None else self.keys.relation_holds

    def to_dict(self, trace: bool = False) -> dict:
        out: dict[str, Any] = {
            "protocol": self.protocol.value,
            "n": self.n,
            "case_counts": {str(k): v for k, v in self.case_counts.items()},
            "verdict": self.verdict.to_dict(),
            "aborted_at": self.aborted_at,
            "keys": None if self.keys is None else {
                "K_A": KeyTriple.bits(self.keys.k_a),
                "K_B": KeyTriple.bits(self.keys.k_b),
                "K_C": KeyTriple.bits(self.keys.k_c),
                "relation_holds": self.keys.relation_holds,
            },
            "screening": self.screening,
            "photon_counts": self.photon_counts,
            "adversary": {
                "kind": self.adversary_kind,
                "knowledge": self.adversary_knowledge,
                "recovered_K_C": None if self.recovered_k_c is None else KeyTriple.bits(self.recovered_k_c),
                "share_bit_mismatches": self.share_bit_mismatches,
                "outcome": None if self.attack is None else {
                    "succeeded": self.attack.succeeded,
                    "detected": self.attack.detected,
                    "bits_recovered": self.attack.bits_recovered,
                },
            },
        }
        if trace:
            out["events"] = [e.to_dict() for e in self.events]
        return out


# ---------------------------------------------------------------------------
# engine


class _Abort(Exception):
    def __init__(self, step: str, reason: AbortReason, party: str = "Alice"):
        super().__init__(reason.value)
        self.step = step
        self.reason = reason
        self.party = party


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


class _Run:
    def __init__(self, config: RunConfig, adversary: adv.Adversary | None, rng):
        self.cfg = config
        self.adv = adversary if adversary is not None else adv.Adversary()
        if config.protocol.value not in self.adv.protocols:
            raise ValueError(
                f"{self.adv.kind} attack targets {self.adv.protocols}, not {config.protocol.value}"
            )
        # one independent stream per party, so taps never shift honest draws
        alice, bob, charlie, eve = _as_generator(rng).spawn(4)
        self.rng = {"Alice": alice, "Bob": bob, "Charlie": charlie}
        self.adv.bind(eve)
        self.taps = tap_table(self.adv.taps())
        self.events = EventLog()
        self.board: dict[str, Any] = {}
        self.screening: dict[str, dict] = {}
        self.photons: dict[str, int] = {}
        self.n = config.n
        self.reorders = config.protocol == Protocol.RANDOMIZATION

    # -- channel ------------------------------------------------------------

    def send(self, bundle: PhotonBundle, leg: Leg, step: str, sender: str) -> PhotonBundle:
        out = transmit(bundle, leg, self.taps)
        self.photons[leg.value] = len(out)
        self.events.emit(step, "transmit", sender, leg=leg.value, sent=len(bundle),
                         delivered=len(out), tapped=leg in self.taps)
        return out

    def announce(self, step: str, party: str, key: str, value) -> int:
        self.board[key] = value
        return self.events.emit(step, "announce", party, key=key, value=value)

    # -- agents -------------------------------------------------------------

    def screen(self, agent: str, bundle: PhotonBundle) -> PhotonBundle:
        """Solution 2: wavelength filter followed by a photon number splitter."""
        filtered, flagged = wavelength_filter(bundle)
        _, rate = photon_number_split(filtered)
        vacant = int(np.sum(filtered.primary() < 0))
        self.screening[agent] = {"filtered": flagged, "multiphoton_rate": rate, "vacant_slots": vacant}
        self.events.emit("2", "screen", agent, filtered=flagged, multiphoton_rate=rate, vacant=vacant)
        if rate > self.cfg.multiphoton_threshold:
            raise _Abort("2", AbortReason.MULTI_PHOTON, agent)
        if vacant or flagged / max(bundle.n_slots, 1) > self.cfg.multiphoton_threshold:
            raise _Abort("2", AbortReason.FILTERED_PHOTONS, agent)
        return filtered

    def honest_modes(self, agent: str) -> np.ndarray:
        u = self.rng[agent].random(self.n)
        return np.where(u < self.cfg.share_probability, SHARE, CHECK).astype(np.int8)

    def measure_primaries(self, agent: str, bundle: PhotonBundle, positions: np.ndarray) -> np.ndarray:
        """Z-measure the primary photon in each listed slot."""
        prim = bundle.primary()[positions]
        if np.any(prim < 0):
            raise ProtocolError(f"{agent}: SHARE slot without a photon")
        bits = np.empty(len(positions), dtype=np.int8)
        kinds = bundle.kind[prim]
        standalone = kinds != PhotonKind.GENUINE
        bits[standalone] = bundle.bit[prim[standalone]]
        gen = np.flatnonzero(~standalone)
        for particle in np.unique(bundle.particle[prim[gen]]):
            sel = gen[bundle.particle[prim[gen]] == particle]
            bits[sel] = self.bank.measure_z(bundle.register[prim[sel]], int(particle), self.rng[agent])
        return bits

    def agent_step2(self, agent: str, bundle: PhotonBundle, modes: np.ndarray):
        """Measure SHARE photons, return the photons bound for Alice."""
        share = np.flatnonzero(modes == SHARE)
        check = np.flatnonzero(modes == CHECK)
        bits = np.full(self.n, -1, dtype=np.int8)
        bits[share] = self.measure_primaries(agent, bundle, share)
        self.events.emit("2", "measure", agent, share=len(share), check=len(check))
        if self.reorders:
            reflected = bundle.take_slots(check)
            reflected, perm = reorder(reflected, self.rng[agent].permutation(len(check)))
            # announced later: original position of each returned slot
            return bits, reflected, check[perm]
        fresh = PhotonBundle.standalone(bits[share], PhotonKind.FRESH, slots=share, n_slots=self.n)
        kept = bundle._subset(modes[bundle.slot] == CHECK)
        return bits, kept.with_photons(fresh), None

    # -- Alice --------------------------------------------------------------

    def dispatch(self, table: CaseTable, ret_b: PhotonBundle, ret_c: PhotonBundle) -> None:
        prim_b, prim_c = ret_b.primary(), ret_c.primary()

        def verify(bundle, prim, idx, particle, agent):
            p = prim[idx]
            ok = (p >= 0)
            ok &= bundle.kind[np.where(ok, p, 0)] == PhotonKind.GENUINE
            ok &= bundle.register[np.where(ok, p, 0)] == idx
            ok &= bundle.particle[np.where(ok, p, 0)] == particle
            if not np.all(ok):
                bad = idx[~ok][:5].tolist()
                raise ProtocolError(f"{agent} returned missing or foreign photons at {bad}")

        rng = self.rng["Alice"]
        for case in (1, 2, 3, 4):
            idx = np.flatnonzero(table.case == case)
            if not len(idx):
                continue
            if case == 1:
                res = self.bank.measure_z(idx, 1, rng)
            elif case == 2:
                verify(ret_c, prim_c, idx, 3, "Charlie")
                res = self.bank.measure_bell(idx, 1, 3, rng)
            elif case == 3:
                verify(ret_b, prim_b, idx, 2, "Bob")
                res = self.bank.measure_bell(idx, 1, 2, rng)
            else:
                verify(ret_b, prim_b, idx, 2, "Bob")
                verify(ret_c, prim_c, idx, 3, "Charlie")
                res = self.bank.measure_joint(idx, rng)
            table.alice_result[idx] = res
            self.events.emit("4", "dispatch", "Alice", case=case, count=len(idx))

    def fresh_mismatch(self, table: CaseTable, ret: PhotonBundle, modes, announced) -> np.ndarray:
        """Alice Z-measures returned fresh photons and compares with announcements."""
        out = np.zeros(self.n, dtype=bool)
        share = np.flatnonzero(modes == SHARE)
        prim = ret.primary()[share]
        if np.any(prim < 0) or np.any(ret.kind[prim] != PhotonKind.FRESH):
            raise ProtocolError("SHARE slot did not come back as a fresh photon")
        fresh = np.full(self.n, -1, dtype=np.int8)
        fresh[share] = ret.bit[prim]
        pub = announced >= 0
        out[pub] = fresh[pub] != announced[pub]
        return out

    # -- the run ------------------------------------------------------------

    def execute(self) -> RunReport:
        cfg, n, ev = self.cfg, self.n, self.events
        table: CaseTable | None = None
        verdict: CheckVerdict | None = None
        keys = None
        aborted_at = None
        try:
            # Step 1
            self.bank = RegisterBank(n)
            ev.emit("1", "prepare", "Alice", n=n, state="ghz-like")
            s_b = PhotonBundle.genuine(np.arange(n), 2)
            s_c = PhotonBundle.genuine(np.arange(n), 3)
            recv_b = self.send(s_b, Leg.ALICE_TO_BOB, "1", "Alice")
            recv_c = self.send(s_c, Leg.ALICE_TO_CHARLIE, "1", "Alice")

            # Step 2: Charlie first, then Bob
            if cfg.solution2:
                recv_c = self.screen("Charlie", recv_c)
                recv_b = self.screen("Bob", recv_b)
            modes_c = self.honest_modes("Charlie")
            ev.emit("2", "choose-mode", "Charlie", adversarial=False)
            bits_c, out_c, order_c = self.agent_step2("Charlie", recv_c, modes_c)
            ret_c = self.send(out_c, Leg.CHARLIE_TO_ALICE, "2", "Charlie")
            if self.adv.controls_bob_modes:
                modes_b = self.adv.choose_bob_modes(n)
            else:
                modes_b = self.honest_modes("Bob")
            ev.emit("2", "choose-mode", "Bob", adversarial=self.adv.controls_bob_modes)
            bits_b, out_b, order_b = self.agent_step2("Bob", recv_b, modes_b)
            ret_b = self.send(out_b, Leg.BOB_TO_ALICE, "2", "Bob")

            # Step 3
            ev.emit("3", "store", "Alice", received={"Bob": len(ret_b), "Charlie": len(ret_c)})
            self.announce("3", "Alice", "reception", True)
            if self.reorders:
                seq_c = self.announce("3", "Charlie", "charlie_order", order_c)
                seq_b = self.announce("3", "Bob", "bob_order", order_b)
                ret_c = ret_c.relocate(self.board["charlie_order"], n)
                ret_b = ret_b.relocate(self.board["bob_order"], n)
                ev.emit("3", "restore-order", "Alice", reads=[seq_c, seq_b])
            else:
                self.announce("3", "Charlie", "charlie_modes", modes_c)
                self.announce("3", "Bob", "bob_modes", modes_b)

            # Step 4
            if self.reorders:
                self.announce("4", "Bob", "bob_modes", modes_b)
                self.announce("4", "Charlie", "charlie_modes", modes_c)
            table = CaseTable(case_of(self.board["bob_modes"], self.board["charlie_modes"]))
            table.bob_bits[:] = bits_b
            table.charlie_bits[:] = bits_c
            self.dispatch(table, ret_b, ret_c)

            # Step 5
            m2, m3 = table.case == 2, table.case == 3
            table.bob_announced[m2] = bits_b[m2]
            table.charlie_announced[m3] = bits_c[m3]
            self.announce("5", "Bob", "bob_check_bits", table.bob_announced.copy())
            self.announce("5", "Charlie", "charlie_check_bits", table.charlie_announced.copy())
            extra = None
            if not self.reorders:
                extra = (self.fresh_mismatch(table, ret_b, modes_b, table.bob_announced)
                         | self.fresh_mismatch(table, ret_c, modes_c, table.charlie_announced))
            verdict = eavesdrop_check(table, cfg.error_threshold, extra)
            verdict.case3_pvalue = case3_pvalue(verdict.case3_count, n, cfg.case3_probability)
            if cfg.solution1 and verdict.case3_pvalue < cfg.significance:
                verdict.abort_reason = AbortReason.CASE3_DEFICIENT
            ev.emit("5", "check", "Alice", error_rate=verdict.error_rate,
                    case3_count=verdict.case3_count, case3_pvalue=verdict.case3_pvalue,
                    solution1=cfg.solution1, abort_reason=verdict.abort_reason)
            if not verdict.passed:
                raise _Abort("5", verdict.abort_reason)

            # Step 6
            keys = extract_keys(table, verdict)
            ev.emit("6", "keys", "all", length=len(keys))
        except _Abort as stop:
            aborted_at = stop.step
            if verdict is None:
                verdict = CheckVerdict(0.0, 0, 0, 0, n, abort_reason=stop.reason)
            ev.emit(stop.step, "abort", stop.party, reason=stop.reason)

        return self.report(table, verdict, keys, aborted_at)

    def report(self, table, verdict, keys, aborted_at) -> RunReport:
        recovered = attack = mismatches = None
        if keys is not None:
            recovered = self.adv.harvest(self.board, self.bank)
        if self.adv.kind not in (adv.NONE, adv.PASSIVE):
            true_shadow = None if keys is None else keys.k_a ^ keys.k_b
            attack = adv.AttackOutcome(
                succeeded=recovered is not None and bool(np.array_equal(recovered, true_shadow)),
                detected=keys is None,
                bits_recovered=0 if recovered is None else len(recovered),
            )
            if isinstance(self.adv, adv.TrojanHorse) and table is not None:
                share = np.flatnonzero(table.charlie_bits >= 0)
                got = self.adv.recorded
                mismatches = sum(
                    1 for p in share.tolist() if got.get(p) != int(table.charlie_bits[p])
                )
        counts = table.counts() if table is not None else {1: 0, 2: 0, 3: 0, 4: 0}
        photons = {"prepared_qubits": 3 * self.n, **self.photons,
                   "key_bits": 0 if keys is None else len(keys)}
        return RunReport(
            protocol=self.cfg.protocol,
            n=self.n,
            case_counts=counts,
            verdict=verdict,
            keys=keys,
            screening=self.screening,
            adversary_kind=self.adv.kind,
            adversary_knowledge=self.adv.knowledge(),
            recovered_k_c=recovered,
            attack=attack,
            share_bit_mismatches=mismatches,
            photon_counts=photons,
            events=self.events,
            aborted_at=aborted_at,
        )


def run_randomization_based(config: RunConfig, adversary: adv.Adversary | None = None, rng=None) -> RunReport:
    """Steps 1-6 with SHARE = measure and keep, CHECK = reflect through delay lines."""
    if config.protocol != Protocol.RANDOMIZATION:
        config = RunConfig(**{**config.__dict__, "protocol": Protocol.RANDOMIZATION})
    return _Run(config, adversary, rng).execute()


def run_measure_resend(config: RunConfig, adversary: adv.Adversary | None = None, rng=None) -> RunReport:
    """Starred variant: SHARE = measure and resend a fresh photon, CHECK = reflect in order."""
    if config.protocol != Protocol.MEASURE_RESEND:
        config = RunConfig(**{**config.__dict__, "protocol": Protocol.MEASURE_RESEND})
    return _Run(config, adversary, rng).execute()


def run_protocol(config: RunConfig, adversary: adv.Adversary | None = None, rng=None) -> RunReport:
    return _Run(config, adversary, rng).execute()
