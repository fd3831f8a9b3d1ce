import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqss_sim import quantum as q
from sqss_sim.channel import PhotonBundle
from sqss_sim.protocol import (
    CHECK,
    SHARE,
    AbortReason,
    CaseRecord,
    CaseTable,
    CheckVerdict,
    Protocol,
    ProtocolError,
    RunConfig,
    alice_action,
    case3_occurrence_test,
    case_of,
    eavesdrop_check,
    extract_keys,
    run_measure_resend,
    run_protocol,
    run_randomization_based,
)
from sqss_sim.quantum import BellOutcome

RAND = Protocol.RANDOMIZATION
MR = Protocol.MEASURE_RESEND


def _returned(reg_id, bob=True, charlie=True):
    out = {}
    if bob:
        out["bob"] = PhotonBundle.genuine([reg_id], 2).photon(0)
    if charlie:
        out["charlie"] = PhotonBundle.genuine([reg_id], 3).photon(0)
    return out


def _table(cases, results, bob=None, charlie=None):
    recs = [CaseRecord(i, c, r, None if bob is None else bob[i], None if charlie is None else charlie[i])
            for i, (c, r) in enumerate(zip(cases, results))]
    return CaseTable.from_records(recs)


def test_case_table_rows():
    bob = np.array([SHARE, SHARE, CHECK, CHECK])
    charlie = np.array([SHARE, CHECK, SHARE, CHECK])
    assert case_of(bob, charlie).tolist() == [1, 2, 3, 4]


# -- alice_action ------------------------------------------------------------


def test_case4_unperturbed_is_index_zero(rng):
    for i in range(50):
        assert alice_action(4, q.TripletRegister(i), _returned(i), rng) == 0


def test_case2_bob_zero_gives_phi_plus(rng):
    seen = 0
    while seen < 50:
        reg = q.TripletRegister(0)
        if q.measure_z(reg, 2, rng) != 0:
            continue
        seen += 1
        assert alice_action(2, reg, _returned(0, bob=False), rng) == BellOutcome.PHI_PLUS


def test_case1_parity_over_many_triplets(rng):
    for i in range(300):
        reg = q.TripletRegister(i)
        b, c = q.measure_z(reg, 2, rng), q.measure_z(reg, 3, rng)
        assert alice_action(1, reg, {}, rng) == b ^ c


def test_alice_action_rejects_foreign_photon(rng):
    with pytest.raises(ProtocolError):
        alice_action(3, q.TripletRegister(5), _returned(6), rng)
    with pytest.raises(ProtocolError):
        alice_action(2, q.TripletRegister(5), {}, rng)
    with pytest.raises(ValueError):
        alice_action(5, q.TripletRegister(5), {}, rng)


# -- eavesdrop_check --------------------------------------------------------


def test_check_all_consistent():
    t = _table([1, 2, 2, 3, 4], [0, BellOutcome.PHI_PLUS, BellOutcome.PSI_PLUS, BellOutcome.PSI_PLUS, 0],
               bob=[None, 0, 1, None, None], charlie=[None, None, None, 1, None])
    v = eavesdrop_check(t)
    assert v.error_rate == 0 and v.passed and v.checked == 4
    assert t.consistent[0] == -1


def test_check_flags_wrong_correlation():
    t = _table([2, 4], [BellOutcome.PSI_PLUS, 3], bob=[0, None])
    v = eavesdrop_check(t)
    assert v.inconsistent == 2 and v.abort_reason == AbortReason.ERROR_RATE


def test_check_threshold():
    t = _table([2, 2, 2, 2], [BellOutcome.PHI_PLUS] * 3 + [BellOutcome.PSI_MINUS], bob=[0, 0, 0, 0])
    assert eavesdrop_check(t, 0.25).passed
    assert not eavesdrop_check(t, 0.2).passed


def test_check_vacuous_on_case1_only():
    v = eavesdrop_check(_table([1, 1, 1], [0, 1, 0]))
    assert v.error_rate == 0 and v.passed and v.checked == 0


# -- Solution 1 ------------------------------------------------------------


@pytest.mark.parametrize("n,count,passes", [(10_000, 2500, True), (10_000, 0, False), (40, 10, True)])
def test_case3_occurrence_examples(n, count, passes):
    cases = np.array([3] * count + [1] * (n - count), dtype=np.int8)
    assert case3_occurrence_test(CaseTable(cases), 0.001) is passes


def test_case3_test_threshold_length():
    # (3/4)^N < 1e-3 first holds at N = 25
    assert case3_occurrence_test(CaseTable(np.ones(24, np.int8)))
    assert not case3_occurrence_test(CaseTable(np.ones(25, np.int8)))


# -- keys -------------------------------------------------------------------


def test_extract_keys_empty():
    t = _table([2], [BellOutcome.PHI_PLUS], bob=[0])
    keys = extract_keys(t, eavesdrop_check(t))
    assert len(keys) == 0 and keys.relation_holds


def test_extract_keys_refuses_aborted_run():
    t = CaseTable(np.array([1], np.int8))
    with pytest.raises(ProtocolError):
        extract_keys(t, CheckVerdict(1.0, 1, 1, 0, 1, abort_reason=AbortReason.ERROR_RATE))


# -- full runs --------------------------------------------------------------


@pytest.mark.parametrize("runner", [run_randomization_based, run_measure_resend])
def test_honest_completeness_n10000(runner):
    r = runner(RunConfig(n=10_000), None, 2024)
    assert r.passed and r.verdict.error_rate == 0
    assert r.keys.relation_holds and len(r.keys) == r.case_counts[1]
    assert sum(r.case_counts.values()) == 10_000
    for c in r.case_counts.values():
        assert 0.225 <= c / 10_000 <= 0.275


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 200), seed=st.integers(0, 2**63), proto=st.sampled_from([RAND, MR]),
       share=st.sampled_from([0.2, 0.5, 0.8]))
def test_honest_completeness_property(n, seed, proto, share):
    r = run_protocol(RunConfig(n=n, protocol=proto, share_probability=share), None, seed)
    assert r.passed and r.verdict.error_rate == 0 and r.keys.relation_holds
    assert sum(r.case_counts.values()) == n


def test_case_frequencies_at_1e5():
    r = run_protocol(RunConfig(n=100_000), None, 5)
    sigma = np.sqrt(3 / 16 * 100_000) / 100_000
    for c in r.case_counts.values():
        assert abs(c / 100_000 - 0.25) <= 6 * sigma


def test_solution1_size_and_false_abort_rate():
    from scipy.stats import binom

    # largest rejected count at N=64; the test's exact size stays below alpha
    crit = max(k for k in range(65) if binom.cdf(k, 64, 0.25) < 0.001)
    assert binom.cdf(crit, 64, 0.25) <= 0.001
    assert case3_occurrence_test(CaseTable(np.array([3] * (crit + 1) + [1] * (63 - crit), np.int8)))
    aborts = sum(not run_protocol(RunConfig(n=64, solution1=True), None, s).passed for s in range(1000))
    assert aborts / 1000 <= 0.002


def test_measure_resend_returns_fresh_photons_in_place():
    r = run_measure_resend(RunConfig(n=200), None, 9)
    # one photon per slot comes back from each agent
    assert r.photon_counts["BobToAlice"] == 200
    assert r.photon_counts["CharlieToAlice"] == 200
    assert not any(e.kind == "announce" and "order" in e.data["key"] for e in r.events)


def test_randomization_returns_only_check_photons():
    r = run_randomization_based(RunConfig(n=200), None, 9)
    n_check_c = r.case_counts[2] + r.case_counts[4]
    assert r.photon_counts["CharlieToAlice"] == n_check_c
    assert r.photon_counts["prepared_qubits"] == 600


# -- event log --------------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_restore_order_reads_only_earlier_announcements(seed):
    r = run_protocol(RunConfig(n=100), None, seed)
    ev = r.events
    assert [e.seq for e in ev] == list(range(len(ev)))
    restore_ev = [e for e in ev if e.kind == "restore-order"]
    assert len(restore_ev) == 1
    for s in restore_ev[0].data["reads"]:
        assert s < restore_ev[0].seq
        assert ev[s].kind == "announce" and ev[s].data["key"].endswith("_order")


def test_announcement_order_and_steps():
    ev = run_protocol(RunConfig(n=50), None, 1).events
    keys = [e.data["key"] for e in ev if e.kind == "announce"]
    assert keys == ["reception", "charlie_order", "bob_order", "bob_modes", "charlie_modes",
                    "bob_check_bits", "charlie_check_bits"]
    steps = [int(e.step) for e in ev]
    assert steps == sorted(steps)
    kinds = {e.kind for e in ev}
    assert {"prepare", "transmit", "choose-mode", "measure", "announce", "dispatch", "check"} <= kinds


def test_charlie_acts_before_bob():
    ev = run_protocol(RunConfig(n=50), None, 1).events
    order = [e.party for e in ev if e.kind == "choose-mode"]
    assert order == ["Charlie", "Bob"]


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(n=0)
    with pytest.raises(ValueError):
        RunConfig(share_probability=1.5)
    with pytest.raises(ValueError):
        RunConfig(protocol="teleport")


def test_same_seed_same_run():
    a = run_protocol(RunConfig(n=500), None, 33).to_dict(trace=True)
    b = run_protocol(RunConfig(n=500), None, 33).to_dict(trace=True)
    assert a == b
