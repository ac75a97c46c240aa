"""Randomized verification campaigns for the analytic inequalities.

A campaign is described by ``{"lemma", "trials", "seed", "params"}``.
Trials are grouped in chunks of :data:`CHUNK` consecutive trials; chunk
``c`` draws from the ``c``-th child of ``SeedSequence(seed)``.  Chunks are
independent, so they may run on ``MSL_THREADS`` worker processes, and their
results are merged in chunk order.  The report therefore depends only on
the campaign description.

Every trial yields a margin that is nonnegative up to the campaign's
tolerance when the inequality holds; the report records the minimal margin
and every violating instance.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import mass_phase as mp_
from .mass_phase import MassMeasure, PhaseSequence

__all__ = [
    "CHUNK",
    "LEMMAS",
    "CampaignSpec",
    "CampaignReport",
    "run_campaign",
    "worker_count",
]

CHUNK = 1000


@dataclass(frozen=True)
class Outcome:
    """One trial: its margin, whether it passed, and a JSON description if it failed."""

    margin: float
    ok: bool
    instance: dict | None = None
    candidates: int = 1


def _enc_seq(seq: PhaseSequence) -> list:
    return [[z.real, z.imag] for z in seq.entries]


def _enc_mu(mu: MassMeasure) -> list:
    return [[th, w] for th, w in mu.atoms]


# ----------------------------------------------------------------------
# trial functions
# ----------------------------------------------------------------------
def _trial_gt(rng, params: Mapping) -> Outcome:
    tol = params.get("tol", 1e-10)
    n_max, m_max, t_range = params.get("n_max", 6), params.get("m_max", 6), params.get("t_range", 3.0)
    tries = 0
    while True:
        tries += 1
        z, w, t = mp_.random_gt_candidate(rng, n_max, m_max, t_range)
        rep = mp_.check_gt_inequality(z, w, t)
        if rep.conditions_hold:
            break
    ok = rep.margin >= -tol
    inst = None if ok else {"z": _enc_seq(z), "w": _enc_seq(w), "t": t, "margin": rep.margin}
    return Outcome(rep.margin, ok, inst, tries)


def _trial_image(rng, params: Mapping) -> Outcome:
    tol = params.get("tol", 1e-8)
    k_max = params.get("k_max", 4)
    G = mp_.random_heart_sequence(rng, k_max)
    E = mp_.random_heart_sequence(rng, k_max)
    a, b = (float(x) for x in rng.uniform(0.02, 0.98, size=2))
    t = float(rng.uniform(-params.get("t_range", 3.0), params.get("t_range", 3.0)))
    rep = mp_.check_image_bound(G, E, a, b, t, rel_tol=tol)
    margin = -rep.relative_excess
    ok = rep.holds
    inst = None if ok else {"G": _enc_seq(G), "E": _enc_seq(E), "a": a, "b": b, "t": t,
                            "brute": rep.brute_max, "bound": rep.bound}
    return Outcome(margin, ok, inst)


def _triangle_from(rng, params: Mapping) -> mp_.SemisimpleTriangle:
    k_max, spread = params.get("k_max", 4), params.get("spread", 1.5)
    tri = mp_.random_semisimple_triangle(rng, k_max, spread)
    if params.get("family", "recipe") == "split":
        tri = mp_.SemisimpleTriangle(MassMeasure(), tri.I, tri.Q)
    return tri


def _scale(tri: mp_.SemisimpleTriangle, t: float) -> float:
    return 1 + mp_.m_t(tri.E, t, allow_empty=True) + mp_.m_t(tri.F, t, allow_empty=True) + mp_.m_t(tri.G, t, allow_empty=True)


def _trial_truncated(rng, params: Mapping) -> Outcome:
    tol = params.get("tol", 1e-10)
    tri = _triangle_from(rng, params)
    t = float(rng.uniform(-params.get("t_range", 3.0), params.get("t_range", 3.0)))
    a = float(rng.uniform(-1.5, 1.5))
    eps = float(rng.uniform(0.02, 0.98))
    rep = mp_.check_truncated_triangle(tri.E, tri.F, tri.G, t, a, eps, tol=tol)
    margin = min(rep.upper_slack, rep.lower_slack) / _scale(tri, t)
    inst = None if rep.holds else {"K": _enc_mu(tri.K), "I": _enc_mu(tri.I), "Q": _enc_mu(tri.Q),
                                   "t": t, "a": a, "eps": eps}
    return Outcome(margin, rep.holds, inst)


def _trial_triangle(rng, params: Mapping) -> Outcome:
    tol = params.get("tol", 1e-10)
    tri = _triangle_from(rng, params)
    t = float(rng.uniform(-params.get("t_range", 3.0), params.get("t_range", 3.0)))
    a = float(rng.uniform(-1.5, 1.5))
    rep = mp_.check_triangle(tri.E, tri.F, tri.G, t, a, tol=tol, hypothesis="semisimple triangle")
    sc = _scale(tri, t)
    add = mp_.check_mass_additivity(tri, t, a) / sc
    s1, s2 = mp_.check_pre_triangle(tri, t)
    margin = min(rep.left / sc, rep.right_margin / sc, add, s1 / sc, s2 / sc)
    ok = rep.left_holds and rep.right_holds and margin >= -tol
    inst = None if ok else {"K": _enc_mu(tri.K), "I": _enc_mu(tri.I), "Q": _enc_mu(tri.Q), "t": t, "a": a}
    return Outcome(margin, ok, inst)


def _trial_filtration(rng, params: Mapping) -> Outcome:
    tol = params.get("tol", 1e-10)
    n = int(rng.integers(1, params.get("n_max", 5) + 1))
    split = params.get("family", "recipe") == "split"
    F_list, E = mp_.semisimple_filtration(rng, n, params.get("k_max", 3), params.get("spread", 1.5), split=split)
    a_list = sorted(float(x) for x in rng.uniform(-1.5, 1.5, size=n - 1))
    if any(b <= a for a, b in zip(a_list, a_list[1:])):
        a_list = [a + 1e-9 * i for i, a in enumerate(a_list)]
    eps = float(rng.uniform(0.02, 0.98))
    t = float(rng.uniform(-params.get("t_range", 3.0), params.get("t_range", 3.0)))
    rep = mp_.check_filtration_inequality(F_list, E, a_list, eps, t, tol=tol)
    sc = 1 + rep.total + rep.mass_e
    margin = min(rep.total - rep.mass_e, rep.mass_e + rep.constant * rep.correction - rep.total) / sc
    ok = rep.left_holds and rep.right_holds
    inst = None if ok else {"F": [_enc_mu(F) for F in F_list], "E": _enc_mu(E), "a": a_list, "eps": eps, "t": t}
    return Outcome(margin, ok, inst)


def _trial_cosh(rng, params: Mapping) -> Outcome:
    t = float(rng.uniform(0.1, 5.0))
    s = float(rng.uniform(-t, t) * 0.999)
    if abs(s) < 1e-3:
        s = 1e-3 if s >= 0 else -1e-3
    delta = float(rng.uniform(0.01, 2.0))
    eps = float(10 ** rng.uniform(-3, 0))
    mu = mp_.random_measure(rng, 4, float(rng.uniform(0.01, 2.0)), empty_ok=False)
    rep = mp_.check_cosh_mass_bound(mu, t, s, delta, eps)
    margin = (rep.bound - rep.tails) / (1 + rep.bound) if rep.hypothesis_holds else 0.0
    inst = None if rep.ok else {"mu": _enc_mu(mu), "t": t, "s": s, "delta": delta, "eps": eps}
    return Outcome(margin, rep.ok, inst)


def _trial_basics(rng, params: Mapping) -> Outcome:
    """Jensen equality case, monotonicity of phi^t and the single-phase test for c^t."""
    h, tol = params.get("step", 1e-5), params.get("tol", 1e-7)
    single = rng.random() < 0.3
    k = int(rng.integers(1, 6))
    th = np.full(k, rng.uniform(-2, 2)) if single else rng.uniform(-2, 2, size=k)
    mu = MassMeasure(tuple(zip(th, np.exp(rng.normal(size=k)))))
    t = float(rng.uniform(-5, 5))
    # Jensen: log m^t >= log m + t mean, with equality iff a single phase
    gap = math.log(mp_.m_t(mu, t)) - math.log(mu.total) - t * mp_.phi_t(mu, 0.0)
    one_phase = len(mu.phases) == 1
    round_off = 1e-12 * (1 + abs(t) * float(np.max(np.abs(mu.phases))))
    spread = float(np.dot(mu.weights, (mu.phases - mp_.phi_t(mu, 0.0)) ** 2) / mu.total)
    strict = t * t * spread > 1e3 * round_off
    jensen_ok = gap >= -round_off and (abs(gap) <= round_off if one_phase else (gap > 0 or not strict))
    slope = (mp_.phi_t(mu, t + h) - mp_.phi_t(mu, t)) / h
    mono_ok = slope >= -tol
    c = mp_.c_t(mu, t)
    c_ok = (c == 1.0) == one_phase or (t == 0 and c == 1.0)
    ok = jensen_ok and mono_ok and c_ok
    margin = min(gap, slope) if not one_phase else min(0.0, slope)
    inst = None if ok else {"mu": _enc_mu(mu), "t": t, "gap": gap, "slope": slope, "c": c}
    return Outcome(margin, ok, inst)


LEMMAS: dict[str, Callable] = {
    "gt": _trial_gt,
    "image": _trial_image,
    "truncated": _trial_truncated,
    "triangle": _trial_triangle,
    "filtration": _trial_filtration,
    "cosh": _trial_cosh,
    "basics": _trial_basics,
}


# ----------------------------------------------------------------------
# runner
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class CampaignSpec:
    lemma: str
    trials: int
    seed: int
    params: Mapping = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lemma not in LEMMAS:
            raise ValueError(f"unknown lemma {self.lemma!r}; choose from {sorted(LEMMAS)}")
        if self.trials <= 0:
            raise ValueError("trials must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_json(cls, data: Mapping) -> "CampaignSpec":
        return cls(str(data["lemma"]), int(data["trials"]), int(data["seed"]), dict(data.get("params", {})))

    def to_json(self) -> dict:
        return {"lemma": self.lemma, "trials": self.trials, "seed": self.seed, "params": dict(self.params)}


@dataclass
class CampaignReport:
    spec: CampaignSpec
    trials: int
    candidates: int
    violations: list[dict]
    min_margin: float
    margins: list[float] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "lemma": self.spec.lemma,
            "seed": self.spec.seed,
            "params": dict(self.spec.params),
            "trials": self.trials,
            "candidates": self.candidates,
            "violations": self.violations,
            "min_margin": self.min_margin,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["trial,margin"]
        lines += [f"{i},{m!r}" for i, m in enumerate(self.margins)]
        return "\n".join(lines) + "\n"


def worker_count() -> int:
    """Worker processes from ``MSL_THREADS`` (default 1)."""
    raw = os.environ.get("MSL_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"MSL_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


def _run_chunk(args) -> tuple[list[float], list[dict], int]:
    lemma, seq, start, count, params = args
    rng = np.random.default_rng(seq)
    fn = LEMMAS[lemma]
    margins, bad, cand = [], [], 0
    for i in range(count):
        out = fn(rng, params)
        margins.append(float(out.margin))
        cand += out.candidates
        if not out.ok:
            inst = dict(out.instance or {})
            inst["trial"] = start + i
            bad.append(inst)
    return margins, bad, cand


def run_campaign(spec: CampaignSpec, workers: int | None = None) -> CampaignReport:
    """Run all trials; the result is independent of ``workers``."""
    workers = worker_count() if workers is None else max(1, workers)
    n_chunks = -(-spec.trials // CHUNK)
    seqs = np.random.SeedSequence(spec.seed).spawn(n_chunks)
    jobs = [(spec.lemma, seqs[c], c * CHUNK, min(CHUNK, spec.trials - c * CHUNK), dict(spec.params))
            for c in range(n_chunks)]
    if workers > 1 and n_chunks > 1:
        with ProcessPoolExecutor(max_workers=min(workers, n_chunks)) as pool:
            results = list(pool.map(_run_chunk, jobs))
    else:
        results = [_run_chunk(j) for j in jobs]
    margins: list[float] = []
    violations: list[dict] = []
    cand = 0
    for m, v, c in results:
        margins.extend(m)
        violations.extend(v)
        cand += c
    return CampaignReport(spec, spec.trials, cand, violations, min(margins), margins)
