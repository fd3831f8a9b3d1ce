import json
import math
from fractions import Fraction
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqss_sim import quantum as q
from sqss_sim.adversary import INTERCEPT_RESEND, TROJAN_HORSE, AdversarySpec
from sqss_sim.analysis import (
    ORACLE_CATALOGUE,
    ExperimentPlan,
    Summary,
    SupportViolation,
    binomial_lower_pvalue,
    chi_square_fit,
    oracle_equivalence,
    oracle_table,
    run_experiment,
    run_seed,
    sample_plan,
    with_seed,
)
from sqss_sim.claims import verify_claims
from sqss_sim.protocol import RunConfig, run_protocol


def _exact_lower_tail(k, n, p: Fraction) -> Fraction:
    return sum(Fraction(math.comb(n, i)) * p**i * (1 - p) ** (n - i) for i in range(k + 1))


# -- binomial ----------------------------------------------------------------


def test_binomial_examples():
    assert binomial_lower_pvalue(0, 4, 0.25) == pytest.approx(0.31640625, rel=1e-12)
    assert binomial_lower_pvalue(7, 7, 0.25) == 1.0
    assert binomial_lower_pvalue(0, 100, 0.25) == pytest.approx(float(Fraction(3, 4) ** 100), rel=1e-9)
    assert binomial_lower_pvalue(0, 100, 0.25) == pytest.approx(3.2e-13, rel=0.01)


@settings(max_examples=80, deadline=None)
@given(n=st.integers(1, 120), data=st.data(), p=st.sampled_from([Fraction(1, 4), Fraction(1, 2),
                                                                 Fraction(3, 16), Fraction(9, 10)]))
def test_binomial_matches_exact_rational(n, data, p):
    k = data.draw(st.integers(0, n))
    exact = float(_exact_lower_tail(k, n, p))
    assert binomial_lower_pvalue(k, n, float(p)) == pytest.approx(exact, rel=1e-9, abs=1e-300)


@pytest.mark.parametrize("args", [(5, 4, 0.25), (-1, 4, 0.25), (0, 4, 1.5)])
def test_binomial_domain(args):
    with pytest.raises(ValueError):
        binomial_lower_pvalue(*args)


# -- chi-square --------------------------------------------------------------


def test_chi_square_proportional_is_perfect():
    stat, p = chi_square_fit({"a": 25, "b": 25, "c": 50}, {"a": 0.25, "b": 0.25, "c": 0.5})
    assert stat == 0 and p == 1.0


def test_chi_square_closed_form_dof2():
    obs = {0: 30, 1: 50, 2: 20}
    exp = {0: 1 / 3, 1: 1 / 3, 2: 1 / 3}
    e = 100 / 3
    stat_oracle = sum((o - e) ** 2 / e for o in obs.values())
    stat, p = chi_square_fit(obs, exp)
    assert stat == pytest.approx(stat_oracle)
    # survival function of chi-square with 2 dof is exp(-x/2)
    assert p == pytest.approx(math.exp(-stat_oracle / 2))


def test_chi_square_hard_failure_on_impossible_outcome():
    exact = q.outcome_distribution(q.make_ghz_like(), [("Z", 1), ("Z", 2), ("Z", 3)])
    counts = {k: 10 for k in exact}
    counts[(1, 1, 1)] = 1
    with pytest.raises(SupportViolation):
        chi_square_fit(counts, exact)


def test_chi_square_single_outcome():
    assert chi_square_fit({(0,): 100}, {(0,): 1.0}) == (0.0, 1.0)


@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_triple_z_sampling_fits_uniform(seed):
    plan = [("Z", 1), ("Z", 2), ("Z", 3)]
    counts = sample_plan(q.make_ghz_like(), plan, 100_000, np.random.default_rng(seed))
    assert all(sum(k) % 2 == 0 for k in counts)
    assert chi_square_fit(counts, q.outcome_distribution(q.make_ghz_like(), plan))[1] > 0.001


@pytest.mark.parametrize("name", sorted(ORACLE_CATALOGUE))
def test_oracle_equivalence_catalogue(name):
    res = oracle_equivalence(name, 20_000, np.random.default_rng(17))
    assert res["support_match"] and res["p_value"] > 0.001


def test_oracle_tables():
    assert oracle_table("ghz-like-zzz") == {"000": 0.25, "011": 0.25, "101": 0.25, "110": 0.25}
    assert oracle_table("case2-conditional") == {"(0,PhiPlus)": 0.5, "(1,PsiPlus)": 0.5}
    assert oracle_table("joint-on-psi-prime") == {"0": 1.0}
    assert oracle_table("joint-on-000")["0"] == 0.25
    with pytest.raises(KeyError):
        oracle_table("nope")


# -- experiments -------------------------------------------------------------


def test_seed_derivation_is_pure():
    a = np.random.default_rng(run_seed(42, 3)).integers(0, 2**62, 4)
    b = np.random.default_rng(run_seed(42, 3)).integers(0, 2**62, 4)
    c = np.random.default_rng(run_seed(42, 4)).integers(0, 2**62, 4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_run_i_does_not_depend_on_run_count():
    short = run_experiment(ExperimentPlan(n=100, runs=2, seed=5))
    long = run_experiment(ExperimentPlan(n=100, runs=6, seed=5))
    assert short.runs[1].to_dict() == long.runs[1].to_dict()


def test_run_experiment_deterministic():
    plan = ExperimentPlan(n=200, runs=5, adversary=AdversarySpec(INTERCEPT_RESEND, 1), seed=99)
    a = json.dumps(run_experiment(plan).to_dict(trace=True))
    b = json.dumps(run_experiment(plan).to_dict(trace=True))
    assert a == b
    c = json.dumps(run_experiment(with_seed(plan, 100)).to_dict(trace=True))
    assert a != c


def test_honest_plan_never_detects():
    rep = run_experiment(ExperimentPlan(n=1000, runs=100, seed=1))
    d = rep.to_dict()
    assert rep.summary.aborted == 0
    assert d["summary"]["detection_rate"] == 0.0
    assert d["summary"]["attack"] is None
    assert d["schema_version"] == 1


def test_forced_case3_detection_rate():
    runs = 2000
    rep = run_experiment(ExperimentPlan(n=32, runs=runs, adversary=AdversarySpec(INTERCEPT_RESEND, 1),
                                        seed=8))
    rate = rep.summary.aborted / runs
    assert abs(rate - 0.5) <= 6 * math.sqrt(0.25 / runs)


def test_summary_recomputable_from_runs():
    rep = run_experiment(ExperimentPlan(n=64, runs=20, adversary=AdversarySpec(INTERCEPT_RESEND, 1),
                                        seed=3))
    s = rep.summary
    assert s.aborted == sum(not r.passed for r in rep.runs)
    assert s.case_totals == tuple(sum(r.case_counts[k] for r in rep.runs) for k in (1, 2, 3, 4))


_REPORTS = [
    run_protocol(RunConfig(n=40, protocol=p, solution1=s1), None, seed)
    for seed, (p, s1) in enumerate([("randomization", False), ("measure-resend", False),
                                    ("randomization", True)] * 3)
]
_SUMMARIES = [Summary.of_run(r) for r in _REPORTS]


@settings(max_examples=40, deadline=None)
@given(order=st.permutations(range(len(_SUMMARIES))), cut=st.integers(0, len(_SUMMARIES)))
def test_summary_merge_is_associative_and_commutative(order, cut):
    items = [_SUMMARIES[i] for i in order]
    left = reduce(Summary.merge, items[:cut], Summary())
    right = reduce(Summary.merge, items[cut:], Summary())
    flat = reduce(Summary.merge, _SUMMARIES, Summary())
    assert left.merge(right) == flat
    assert left.merge(right).to_dict() == flat.to_dict()


def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan(runs=0)
    with pytest.raises(ValueError):
        ExperimentPlan(seed=-1)
    with pytest.raises(ValueError):
        ExperimentPlan(n=0)


# -- claims ------------------------------------------------------------------


def test_verify_claims_honest():
    res = verify_claims(run_experiment(ExperimentPlan(n=2000, runs=5, seed=2)))
    assert res and all(r.passed for r in res)


def test_verify_claims_attacks_without_countermeasures():
    ir = run_experiment(ExperimentPlan(n=64, runs=20, adversary=AdversarySpec(INTERCEPT_RESEND), seed=2))
    th = run_experiment(ExperimentPlan(protocol="measure-resend", n=64, runs=20,
                                       adversary=AdversarySpec(TROJAN_HORSE), seed=2))
    assert all(r.passed for r in verify_claims(ir) + verify_claims(th))


def test_verify_claims_countermeasures():
    s1 = run_experiment(ExperimentPlan(n=64, runs=20, solution1=True,
                                       adversary=AdversarySpec(INTERCEPT_RESEND), seed=2))
    s2 = run_experiment(ExperimentPlan(protocol="measure-resend", n=64, runs=20, solution2=True,
                                       adversary=AdversarySpec(TROJAN_HORSE), seed=2))
    res = verify_claims(s1) + verify_claims(s2)
    assert res and all(r.passed for r in res)


def test_verify_claims_catches_undetected_countermeasure_failure():
    # Trojan attack claims evaluated against an honest-looking report must fail
    honest = run_experiment(ExperimentPlan(protocol="measure-resend", n=64, runs=3, solution2=True, seed=2))
    fake = type(honest)(ExperimentPlan(protocol="measure-resend", n=64, runs=3, solution2=True,
                                       adversary=AdversarySpec(TROJAN_HORSE), seed=2),
                        honest.runs, honest.summary)
    assert not all(r.passed for r in verify_claims(fake))
