"""Monte Carlo experiments, exact oracles and aggregate statistics."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import quantum as q
from .adversary import NONE, PASSIVE, AdversarySpec, make_adversary
from .protocol import Protocol, RunConfig, RunReport, run_protocol
from .stats import SupportViolation, binomial_lower_pvalue, chi_square_fit

__all__ = [
    "AggregateReport",
    "ExperimentPlan",
    "Summary",
    "ORACLE_CATALOGUE",
    "SupportViolation",
    "binomial_lower_pvalue",
    "chi_square_fit",
    "format_outcome",
    "run_experiment",
    "run_seed",
    "sample_plan",
]

SCHEMA_VERSION = 1
MAX_SEED = 2**64


@dataclass(frozen=True)
class ExperimentPlan:
    protocol: str = Protocol.RANDOMIZATION.value
    n: int = 1000
    runs: int = 100
    adversary: AdversarySpec = field(default_factory=AdversarySpec)
    solution1: bool = False
    significance: float = 0.001
    solution2: bool = False
    multiphoton_threshold: float = 0.01
    error_threshold: float = 0.0
    share_probability: float = 0.5
    seed: int = 42

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if not 0 <= self.seed < MAX_SEED:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.run_config()  # validates the remaining fields

    def run_config(self) -> RunConfig:
        return RunConfig(
            n=self.n,
            protocol=Protocol(self.protocol),
            share_probability=self.share_probability,
            error_threshold=self.error_threshold,
            solution1=self.solution1,
            significance=self.significance,
            solution2=self.solution2,
            multiphoton_threshold=self.multiphoton_threshold,
        )

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "n": self.n,
            "runs": self.runs,
            "adversary": self.adversary.to_dict(),
            "solution1": {"enabled": self.solution1, "significance": self.significance},
            "solution2": {"enabled": self.solution2, "threshold": self.multiphoton_threshold},
            "error_threshold": self.error_threshold,
            "share_probability": self.share_probability,
            "seed": self.seed,
        }


def run_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Seed of run ``index``; a pure function of the plan seed and the index."""
    return np.random.SeedSequence([seed, index])


def _fractions(x) -> Fraction:
    return Fraction(x) if not isinstance(x, Fraction) else x


@dataclass
class Summary:
    """Commutative, associative fold over run reports (exact rational sums)."""

    runs: int = 0
    aborted: int = 0
    abort_reasons: Counter = field(default_factory=Counter)
    completed: int = 0
    key_relation_holds: int = 0
    checked_runs: int = 0
    error_rate_sum: Fraction = Fraction(0)
    error_rate_sq: Fraction = Fraction(0)
    rho_sum: Fraction = Fraction(0)
    rho_sq: Fraction = Fraction(0)
    case_totals: tuple = (0, 0, 0, 0)
    triplets: int = 0
    attack_runs: int = 0
    attack_succeeded: int = 0
    attack_detected: int = 0
    bits_recovered: int = 0
    share_bit_mismatches: int = 0
    filtered_photons: int = 0
    screened_runs: int = 0
    multiphoton_rate_sum: Fraction = Fraction(0)

    @classmethod
    def of_run(cls, r: RunReport) -> "Summary":
        v = r.verdict
        reached_check = r.aborted_at != "2"
        er = Fraction(v.inconsistent, v.checked) if v.checked else Fraction(0)
        rho = Fraction(v.case3_count, r.n)
        s = cls(
            runs=1,
            aborted=int(not r.passed),
            abort_reasons=Counter({v.abort_reason.value: 1} if v.abort_reason else {}),
            completed=int(r.keys is not None),
            key_relation_holds=int(bool(r.key_relation_holds)),
            checked_runs=int(reached_check),
            error_rate_sum=er if reached_check else Fraction(0),
            error_rate_sq=er * er if reached_check else Fraction(0),
            rho_sum=rho if reached_check else Fraction(0),
            rho_sq=rho * rho if reached_check else Fraction(0),
            case_totals=tuple(r.case_counts[k] for k in (1, 2, 3, 4)),
            triplets=r.n if reached_check else 0,
        )
        if r.attack is not None:
            s.attack_runs = 1
            s.attack_succeeded = int(r.attack.succeeded)
            s.attack_detected = int(r.attack.detected)
            s.bits_recovered = r.attack.bits_recovered
        s.share_bit_mismatches = r.share_bit_mismatches or 0
        charlie = r.screening.get("Charlie")
        if charlie is not None:
            s.screened_runs = 1
            s.filtered_photons = charlie["filtered"]
            s.multiphoton_rate_sum = _fractions(charlie["multiphoton_rate"])
        return s

    def merge(self, o: "Summary") -> "Summary":
        out = Summary()
        for f in self.__dataclass_fields__:
            a, b = getattr(self, f), getattr(o, f)
            if f == "case_totals":
                setattr(out, f, tuple(x + y for x, y in zip(a, b)))
            else:
                setattr(out, f, a + b)
        return out

    @staticmethod
    def _mean_ci(total: Fraction, sq: Fraction, n: int):
        if n == 0:
            return None, None
        mean = total / n
        if n < 2:
            return float(mean), 0.0
        var = (sq - total * total / n) / (n - 1)
        half = 1.96 * math.sqrt(float(var) / n) if var > 0 else 0.0
        return float(mean), half

    def to_dict(self) -> dict:
        er_mean, er_ci = self._mean_ci(self.error_rate_sum, self.error_rate_sq, self.checked_runs)
        rho_mean, rho_ci = self._mean_ci(self.rho_sum, self.rho_sq, self.checked_runs)
        freq = (
            {str(k + 1): self.case_totals[k] / self.triplets for k in range(4)}
            if self.triplets else None
        )
        return {
            "runs": self.runs,
            "aborted": self.aborted,
            "abort_reasons": dict(sorted(self.abort_reasons.items())),
            "detection_rate": self.aborted / self.runs if self.runs else None,
            "completed": self.completed,
            "key_relation_holds": self.key_relation_holds,
            "error_rate": {"mean": er_mean, "ci95": er_ci},
            "case3_occurrence": {"mean": rho_mean, "ci95": rho_ci},
            "case_frequency": freq,
            "attack": None if not self.attack_runs else {
                "runs": self.attack_runs,
                "success_rate": self.attack_succeeded / self.attack_runs,
                "detection_rate": self.attack_detected / self.attack_runs,
                "bits_recovered": self.bits_recovered,
                "share_bit_mismatches": self.share_bit_mismatches,
            },
            "screening": None if not self.screened_runs else {
                "runs": self.screened_runs,
                "filtered_photons": self.filtered_photons,
                "mean_multiphoton_rate": float(self.multiphoton_rate_sum / self.screened_runs),
            },
        }


def summarize(reports: Sequence[RunReport]) -> Summary:
    total = Summary()
    for r in reports:
        total = total.merge(Summary.of_run(r))
    return total


@dataclass
class AggregateReport:
    plan: ExperimentPlan
    runs: list[RunReport]
    summary: Summary
    oracle_checks: list = field(default_factory=list)

    def to_dict(self, trace: bool = False) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "plan": self.plan.to_dict(),
            "summary": self.summary.to_dict(),
            "oracle_checks": self.oracle_checks,
            "runs": [{"run": i, **r.to_dict(trace)} for i, r in enumerate(self.runs)],
        }

    def csv_rows(self) -> list[dict[str, Any]]:
        rows = []
        for i, r in enumerate(self.runs):
            v = r.verdict
            charlie = r.screening.get("Charlie", {})
            rows.append({
                "run": i,
                "protocol": r.protocol.value,
                "n": r.n,
                "pass": v.passed,
                "abort_reason": "" if v.abort_reason is None else v.abort_reason.value,
                "aborted_at": r.aborted_at or "",
                "error_rate": v.error_rate,
                "checked": v.checked,
                "inconsistent": v.inconsistent,
                **{f"case{k}": r.case_counts[k] for k in (1, 2, 3, 4)},
                "case3_pvalue": "" if v.case3_pvalue is None else v.case3_pvalue,
                "key_bits": 0 if r.keys is None else len(r.keys),
                "key_relation_holds": "" if r.keys is None else r.keys.relation_holds,
                "adversary": r.adversary_kind,
                "attack_succeeded": "" if r.attack is None else r.attack.succeeded,
                "attack_detected": "" if r.attack is None else r.attack.detected,
                "bits_recovered": "" if r.attack is None else r.attack.bits_recovered,
                "share_bit_mismatches": "" if r.share_bit_mismatches is None else r.share_bit_mismatches,
                "filtered_photons": charlie.get("filtered", ""),
                "multiphoton_rate": charlie.get("multiphoton_rate", ""),
            })
        return rows


def run_experiment(plan: ExperimentPlan) -> AggregateReport:
    config = plan.run_config()
    reports = []
    for i in range(plan.runs):
        rng = np.random.default_rng(run_seed(plan.seed, i))
        reports.append(run_protocol(config, make_adversary(plan.adversary), rng))
    return AggregateReport(plan, reports, summarize(reports))


def honest_plan(**kw) -> ExperimentPlan:
    return ExperimentPlan(adversary=AdversarySpec(NONE), **kw)


def is_adversarial(plan: ExperimentPlan) -> bool:
    return plan.adversary.kind not in (NONE, PASSIVE)


# ---------------------------------------------------------------------------
# sampling vs exact oracle


def sample_plan(state, plan: Sequence[tuple], samples: int, rng: np.random.Generator) -> Counter:
    """Outcome counts of ``plan`` sampled through :class:`RegisterBank`."""
    bank = q.RegisterBank(samples, state)
    idx = np.arange(samples)
    cols = []
    for step in plan:
        if step[0] == "Z":
            cols.append(bank.measure_z(idx, step[1], rng).astype(int))
        elif step[0] == "Bell":
            cols.append(bank.measure_bell(idx, step[1], step[2], rng).astype(int))
        elif step[0] == "Joint":
            cols.append(bank.measure_joint(idx, rng).astype(int))
        else:
            raise ValueError(f"unknown measurement descriptor {step!r}")
    kinds = [s[0] for s in plan]
    counts: Counter = Counter()
    if not cols:
        return counts
    stacked = np.stack(cols, axis=1)
    rows, n = np.unique(stacked, axis=0, return_counts=True)
    for row, c in zip(rows.tolist(), n.tolist()):
        key = tuple(q.BellOutcome(v) if k == "Bell" else v for k, v in zip(kinds, row))
        counts[key] = c
    return counts


def format_outcome(plan: Sequence[tuple], outcome: tuple) -> str:
    """``011`` for all-Z plans, ``(0,PhiPlus)`` for mixed ones, ``0`` for a lone joint index."""
    if all(s[0] == "Z" for s in plan):
        return "".join(str(b) for b in outcome)
    if len(outcome) == 1:
        return str(outcome[0])
    return "(" + ",".join(str(o) for o in outcome) + ")"


ORACLE_CATALOGUE: dict[str, tuple[str, Any, list]] = {
    "ghz-like-zzz": ("GHZ-like state, Z on all three slots", q.make_ghz_like, [("Z", 1), ("Z", 2), ("Z", 3)]),
    "case2-conditional": ("case 2: Bob Z-measures, Alice Bell-measures (1,3)", q.make_ghz_like,
                          [("Z", 2), ("Bell", 1, 3)]),
    "case3-conditional": ("case 3: Charlie Z-measures, Alice Bell-measures (1,2)", q.make_ghz_like,
                          [("Z", 3), ("Bell", 1, 2)]),
    "joint-on-psi-prime": ("case 4: joint measurement of the GHZ-like state", q.make_ghz_like, [("Joint",)]),
    "joint-on-000": ("joint measurement of |000>", lambda: q.basis_state("000"), [("Joint",)]),
}


def oracle_table(name: str) -> dict[str, float]:
    if name not in ORACLE_CATALOGUE:
        raise KeyError(f"unknown oracle {name!r}; choose from {sorted(ORACLE_CATALOGUE)}")
    _, make, plan = ORACLE_CATALOGUE[name]
    dist = q.outcome_distribution(make(), plan)
    return {format_outcome(plan, k): round(v, 12) for k, v in sorted(dist.items(), key=lambda kv: kv[0])}


def oracle_equivalence(name: str, samples: int, rng: np.random.Generator) -> dict:
    """Sampled frequencies vs exact distribution: support equality and chi-square."""
    _, make, plan = ORACLE_CATALOGUE[name]
    exact = q.outcome_distribution(make(), plan)
    counts = sample_plan(make(), plan, samples, rng)
    try:
        stat, p = chi_square_fit(counts, exact)
        support_ok = set(counts) == set(exact)
    except SupportViolation:
        stat, p, support_ok = math.inf, 0.0, False
    return {"oracle": name, "samples": samples, "support_match": support_ok,
            "chi_square": stat, "p_value": p}


def with_seed(plan: ExperimentPlan, seed: int) -> ExperimentPlan:
    return replace(plan, seed=seed)
