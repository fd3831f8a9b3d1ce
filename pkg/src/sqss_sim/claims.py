"""Quantitative claims checked against experiment reports, and the full suite."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import quantum as q
from .adversary import INTERCEPT_RESEND, NONE, TROJAN_HORSE, AdversarySpec
from .analysis import (
    SCHEMA_VERSION,
    AggregateReport,
    ExperimentPlan,
    oracle_equivalence,
    run_experiment,
    sample_plan,
)
from .stats import chi_square_fit

SIGNIFICANCE = 0.001
FORCED_TOLERANCE = 0.02
FALSE_ABORT_LIMIT = 0.002
ATTACK_N = 64


@dataclass
class ClaimResult:
    criterion: int
    claim: str
    expected: Any
    observed: Any
    tolerance: Any
    passed: bool

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "claim": self.claim,
            "expected": self.expected,
            "observed": self.observed,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
        }


def _frac(count: int, total: int) -> float:
    return count / total if total else 0.0


def verify_claims(report: AggregateReport, criterion: int = 0) -> list[ClaimResult]:
    """Evaluate the claims that apply to the report's plan."""
    plan, runs, s = report.plan, report.runs, report.summary
    kind = plan.adversary.kind
    out: list[ClaimResult] = []

    def add(claim, expected, observed, tolerance, passed):
        out.append(ClaimResult(criterion, claim, expected, observed, tolerance, passed))

    tag = f"{plan.protocol} N={plan.n} runs={plan.runs}"
    if kind == NONE:
        if plan.solution1:
            rate = _frac(s.aborted, s.runs)
            add(f"honest false-abort rate under case-3 test ({tag})", f"<= {FALSE_ABORT_LIMIT}",
                rate, FALSE_ABORT_LIMIT, rate <= FALSE_ABORT_LIMIT)
        if plan.solution2:
            flagged = sum(r.screening.get("Charlie", {}).get("filtered", 0)
                          + r.screening.get("Bob", {}).get("filtered", 0) for r in runs)
            add(f"honest filters flag no photons ({tag})", 0, flagged, 0, flagged == 0)
            aborts = sum(r.aborted_at == "2" for r in runs)
            add(f"honest runs with filters never abort ({tag})", 0, aborts, 0, aborts == 0)
        if not plan.solution1:
            worst = max(r.verdict.error_rate for r in runs)
            add(f"honest error rate is zero in every run ({tag})", 0.0, worst, 0.0,
                worst == 0.0 and s.aborted == 0)
            holds = s.key_relation_holds
            add(f"K_A = K_B xor K_C in every run ({tag})", s.runs, holds, 0, holds == s.runs)
            sigma = math.sqrt(3 / 16 * plan.n) / plan.n
            lo, hi = 0.25 - 6 * sigma, 0.25 + 6 * sigma
            freqs = [c / r.n for r in runs for c in r.case_counts.values()]
            add(f"every case frequency within 1/4 +- 6 sigma ({tag})", [lo, hi],
                [min(freqs), max(freqs)], 6 * sigma, lo <= min(freqs) and max(freqs) <= hi)
        return out

    if kind == INTERCEPT_RESEND:
        m = plan.adversary.allowed_case3
        if plan.solution1:
            rate = _frac(s.abort_reasons.get("Case3Deficient", 0), s.runs)
            add(f"case-3 occurrence test aborts every intercept-resend run ({tag})", 1.0, rate, 0.0,
                rate == 1.0)
        elif m == 0:
            add(f"intercept-resend is never detected ({tag})", 0, s.aborted, 0, s.aborted == 0)
            ok = s.attack_succeeded
            add(f"K_B xor recovered K_C = K_A in every run ({tag})", s.runs, ok, 0, ok == s.runs)
        else:
            expected = 0.5 ** m
            undetected = _frac(s.runs - s.aborted, s.runs)
            add(f"undetected fraction with {m} forced case-3 triplets ({tag})", expected,
                undetected, FORCED_TOLERANCE, abs(undetected - expected) <= FORCED_TOLERANCE)
        return out

    if kind == TROJAN_HORSE:
        if plan.solution2:
            filtered = [r.screening.get("Charlie", {}).get("filtered") for r in runs]
            add(f"wavelength filter flags exactly N invisible photons ({tag})", plan.n,
                [min(filtered), max(filtered)], 0, all(f == plan.n for f in filtered))
            rates = [r.screening.get("Charlie", {}).get("multiphoton_rate") for r in runs]
            add(f"PNS multi-photon rate is 1.0 >= threshold ({tag})", 1.0, min(rates), 0.0,
                all(x == 1.0 and x >= plan.multiphoton_threshold for x in rates))
            rate = _frac(s.aborted, s.runs)
            add(f"Trojan-horse runs abort with filters ({tag})", 1.0, rate, 0.0, rate == 1.0)
        else:
            add(f"Trojan horse is never detected ({tag})", 0, s.aborted, 0, s.aborted == 0)
            add(f"recovered bits match Charlie's SHARE bits ({tag})", 0, s.share_bit_mismatches, 0,
                s.share_bit_mismatches == 0 and s.attack_succeeded == s.runs)
        return out
    return out


# ---------------------------------------------------------------------------


def _sub_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1, np.uint64)[0])


def _runs(n: int, scale: float) -> int:
    return max(1, int(round(n * scale)))


def _ghz_algebra(seed: int, scale: float) -> list[ClaimResult]:
    dev = float(np.max(np.abs(q.hadamard_all(q.make_ghz()) - q.make_ghz_like())))
    return [ClaimResult(1, "H(x)H(x)H on GHZ equals the GHZ-like state", 0.0, dev, q.TOL, dev <= q.TOL)]


def _parity(seed: int, scale: float) -> list[ClaimResult]:
    samples = _runs(100_000, scale)
    rng = np.random.default_rng(_sub_seed(seed, 2))
    plan = [("Z", 1), ("Z", 2), ("Z", 3)]
    counts = sample_plan(q.make_ghz_like(), plan, samples, rng)
    odd = sum(c for k, c in counts.items() if sum(k) % 2)
    uniform = {k: 0.25 for k in [(0, 0, 0), (0, 1, 1), (1, 1, 0), (1, 0, 1)]}
    try:
        _, p = chi_square_fit(counts, uniform)
    except ValueError:
        p = 0.0
    return [
        ClaimResult(2, f"MR1 = MR2 xor MR3 in all {samples} triple-Z samples", 0, odd, 0, odd == 0),
        ClaimResult(2, "triple-Z outcomes uniform over the four even-parity labels (chi-square p)",
                    f"> {SIGNIFICANCE}", p, SIGNIFICANCE, p > SIGNIFICANCE),
    ]


def _honest(seed: int, scale: float) -> list[ClaimResult]:
    out = []
    for j, proto in enumerate(("randomization", "measure-resend")):
        plan = ExperimentPlan(protocol=proto, n=10_000, runs=_runs(100, scale), seed=_sub_seed(seed, 30 + j))
        out += verify_claims(run_experiment(plan), 3)
    return out


def _ir_plain(seed: int, scale: float) -> list[ClaimResult]:
    plan = ExperimentPlan(n=ATTACK_N, runs=_runs(1000, scale),
                          adversary=AdversarySpec(INTERCEPT_RESEND), seed=_sub_seed(seed, 4))
    return verify_claims(run_experiment(plan), 4)


def _ir_forced(seed: int, scale: float) -> list[ClaimResult]:
    out = []
    for m in (1, 2, 3):
        plan = ExperimentPlan(n=ATTACK_N, runs=_runs(10_000, scale),
                              adversary=AdversarySpec(INTERCEPT_RESEND, allowed_case3=m),
                              seed=_sub_seed(seed, 50 + m))
        out += verify_claims(run_experiment(plan), 5)
    return out


def _solution1(seed: int, scale: float) -> list[ClaimResult]:
    attack = ExperimentPlan(n=ATTACK_N, runs=_runs(1000, scale), solution1=True,
                            significance=SIGNIFICANCE,
                            adversary=AdversarySpec(INTERCEPT_RESEND), seed=_sub_seed(seed, 60))
    honest = ExperimentPlan(n=ATTACK_N, runs=_runs(1000, scale), solution1=True,
                            significance=SIGNIFICANCE, seed=_sub_seed(seed, 61))
    return verify_claims(run_experiment(attack), 6) + verify_claims(run_experiment(honest), 6)


def _trojan_plain(seed: int, scale: float) -> list[ClaimResult]:
    plan = ExperimentPlan(protocol="measure-resend", n=ATTACK_N, runs=_runs(1000, scale),
                          adversary=AdversarySpec(TROJAN_HORSE), seed=_sub_seed(seed, 7))
    return verify_claims(run_experiment(plan), 7)


def _solution2(seed: int, scale: float) -> list[ClaimResult]:
    attack = ExperimentPlan(protocol="measure-resend", n=ATTACK_N, runs=_runs(1000, scale),
                            solution2=True, adversary=AdversarySpec(TROJAN_HORSE),
                            seed=_sub_seed(seed, 80))
    honest = ExperimentPlan(protocol="measure-resend", n=ATTACK_N, runs=_runs(1000, scale),
                            solution2=True, seed=_sub_seed(seed, 81))
    return verify_claims(run_experiment(attack), 8) + verify_claims(run_experiment(honest), 8)


def _oracles(seed: int, scale: float) -> list[ClaimResult]:
    out = []
    samples = _runs(100_000, scale)
    for j, name in enumerate(("case2-conditional", "case3-conditional", "joint-on-psi-prime")):
        res = oracle_equivalence(name, samples, np.random.default_rng(_sub_seed(seed, 90 + j)))
        out.append(ClaimResult(9, f"{name}: sampled support equals exact support", True,
                               res["support_match"], 0, res["support_match"]))
        out.append(ClaimResult(9, f"{name}: chi-square p-value at {samples} samples",
                               f"> {SIGNIFICANCE}", res["p_value"], SIGNIFICANCE,
                               res["p_value"] > SIGNIFICANCE))
    return out


SUITE: dict[int, Callable[[int, float], list[ClaimResult]]] = {
    1: _ghz_algebra,
    2: _parity,
    3: _honest,
    4: _ir_plain,
    5: _ir_forced,
    6: _solution1,
    7: _trojan_plain,
    8: _solution2,
    9: _oracles,
}


def run_suite(seed: int = 42, scale: float = 1.0, criteria=None) -> list[ClaimResult]:
    """Run every acceptance criterion (or the listed subset) and return the checklist."""
    results: list[ClaimResult] = []
    for k, fn in SUITE.items():
        if criteria is None or k in criteria:
            results += fn(seed, scale)
    return results


def checklist_document(results: list[ClaimResult], seed: int, scale: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "scale": scale,
        "passed": sum(r.passed for r in results),
        "failed": sum(not r.passed for r in results),
        "claims": [r.to_dict() for r in results],
    }
