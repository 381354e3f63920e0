"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) and
then asserts the criterion as stated, so unmet criteria fail visibly.
"""
from __future__ import annotations

import itertools
import math
import random
import time

import numpy as np

from gfra.core import LAMBDA_8, FrameGraph
from gfra.harness.config import parse_config
from gfra.harness.output import write_csv
from gfra.harness.runner import run_experiment, simulate_realization
from gfra.metrics import acr, de_threshold, pdr, plr, saloha_theory, worst_case_latency_ms
from gfra.core import FrameParams
from gfra.sic import peel
from gfra.traffic import beta_arrivals, uniform_arrivals
from test_sic import all_terminal_sets, random_graph, random_order_peel

UNIFORM_P0 = "{name: uniform, latency_ms: 250, priority: 0}"


def run(text: str, workers: int = 1):
    return run_experiment(parse_config(text), workers=workers)


def test_1_saloha_matches_theory(verdict):
    t0 = time.perf_counter()
    reps = run("{protocol: saloha, load_sweep: [0.2, 0.5, 1.0], realizations: 20, sim_time_s: 10, "
               "saloha: {fresh_only: true}}")
    elapsed = time.perf_counter() - t0
    errs = {r.G: abs(r.throughput_raf - saloha_theory(r.G)) for r in reps}
    peak = reps[-1].throughput_raf
    ok = all(e < 0.02 for e in errs.values()) and abs(peak - 0.368) < 0.02 and elapsed < 10
    detail = ", ".join(f"G={g}: |dS|={e:.4f}" for g, e in errs.items())
    verdict(1, ok, f"{detail}; S(1)={peak:.4f}; {elapsed:.1f}s")
    assert ok


def test_2_four_user_peeling_order(verdict):
    g = FrameGraph.from_replicas({"U1": (1, 5), "U2": (3, 5), "U3": (1, 2, 4), "U4": (3, 4)})
    res = peel(g, 20)
    order = [(u, it) for u, it, _ in res.decoded]
    ok = (
        order[0] == ("U3", 1)
        and {u for u, it in order[1:3]} == {"U1", "U4"} and all(it == 2 for _, it in order[1:3])
        and order[3] == ("U2", 3)
        and not res.residual_users
        and res.iterations_used <= 4
    )
    verdict(2, ok, f"order {res.decoded}, {res.iterations_used} iterations")
    assert ok


def test_3_irsa_threshold(verdict):
    t0 = time.perf_counter()
    low, high = run("{protocol: irsa, load_sweep: [0.5, 1.1], realizations: 100}")
    g_star = de_threshold(LAMBDA_8)
    elapsed = time.perf_counter() - t0
    clauses = {
        "PLR(0.5)<0.01": low.plr < 0.01,
        "PLR(1.1)>0.5": high.plr > 0.5,
        "G*=0.94+-0.01": abs(g_star - 0.94) <= 0.01,
        "runtime<60s": elapsed < 60,
    }
    ok = all(clauses.values())
    detail = (
        f"PLR(0.5)={low.plr:.4f}+-{low.ci_plr:.4f}, PLR(1.1)={high.plr:.3f}, G*={g_star:.4f}, {elapsed:.0f}s; "
        + ", ".join(f"{k}:{'ok' if v else 'no'}" for k, v in clauses.items())
    )
    verdict(3, ok, detail)
    assert ok


def test_4_rapirsa_beats_irsa_in_overload(verdict):
    t0 = time.perf_counter()
    (irsa,) = run("{protocol: irsa, load_sweep: [1.2], realizations: 100}")
    (rap,) = run("{protocol: rapirsa, load_sweep: [1.2], realizations: 100, rap: {q: 8, eta: 0.25}}")
    elapsed = time.perf_counter() - t0
    separated = rap.throughput_raf - rap.ci_throughput > irsa.throughput_raf + irsa.ci_throughput
    ok = rap.throughput_raf > irsa.throughput_raf and separated and elapsed < 120
    verdict(
        4, ok,
        f"RapIRSA S={rap.throughput_raf:.4f}+-{rap.ci_throughput:.4f} "
        f"(per n_rapc {rap.throughput_rapc:.4f}), IRSA S={irsa.throughput_raf:.4f}+-{irsa.ci_throughput:.4f}, "
        f"{elapsed:.0f}s",
    )
    assert ok


def _csv_body(reports, tmp_path, name):
    lines = write_csv(reports, tmp_path / name).read_text().splitlines()
    return [line.split(",", 1)[1] for line in lines[1:]]


def _stats_key(cfg_text, r):
    cfg = parse_config(cfg_text)
    s = simulate_realization(cfg, cfg.load_sweep[0], r)
    return s.generated, s.delivered, s.delays.tobytes(), s.acr_sum


def test_5_reduction_identities(verdict, tmp_path):
    common = "load_sweep: [0.4, 1.2], seed: 17, realizations: 5, sim_time_s: 2"
    pairs = {
        "rapirsa(q=0,eta=0)=irsa": (
            f"{{protocol: irsa, {common}}}",
            f"{{protocol: rapirsa, rap: {{q: 0, eta: 0}}, {common}}}",
        ),
        "sp-irsa(p=0)=irsa": (
            f"{{protocol: irsa, app_profile: {UNIFORM_P0}, {common}}}",
            f"{{protocol: sp-irsa, app_profile: {UNIFORM_P0}, {common}}}",
        ),
        "sp-rapirsa(p=0)=rapirsa": (
            f"{{protocol: rapirsa, rap: {{q: 8}}, app_profile: {UNIFORM_P0}, {common}}}",
            f"{{protocol: sp-rapirsa, rap: {{q: 8}}, app_profile: {UNIFORM_P0}, {common}}}",
        ),
        "sp-saloha(p=0)=saloha": (
            f"{{protocol: saloha, app_profile: {UNIFORM_P0}, {common}}}",
            f"{{protocol: sp-saloha, app_profile: {UNIFORM_P0}, {common}}}",
        ),
    }
    results = {}
    for name, (base, variant) in pairs.items():
        same_rows = _csv_body(run(base), tmp_path, "a.csv") == _csv_body(run(variant), tmp_path, "b.csv")
        same_outcomes = all(_stats_key(base, r) == _stats_key(variant, r) for r in range(5))
        results[name] = same_rows and same_outcomes
    ok = all(results.values())
    verdict(5, ok, ", ".join(f"{k}:{'identical' if v else 'DIFFERENT'}" for k, v in results.items()))
    assert ok


def test_6_acr_ordering(verdict):
    t0 = time.perf_counter()
    base = "load_sweep: [0.2], seed: 11, realizations: 100, app_profile: all"
    acrs = {}
    for proto, extra in (("sp-rapirsa", ", rap: {q: 8}"), ("rapirsa", ", rap: {q: 8}"), ("irsa", ""), ("saloha", "")):
        (rep,) = run(f"{{protocol: {proto}, {base}{extra}}}")
        acrs[proto] = rep.acr
    elapsed = time.perf_counter() - t0
    vals = list(acrs.values())
    ordered = all(a >= b for a, b in zip(vals, vals[1:]))
    level = acrs["sp-rapirsa"] >= 0.9 - 0.05
    ok = ordered and level and elapsed < 120
    detail = ", ".join(f"{k}={v:.4f}" for k, v in acrs.items())
    verdict(6, ok, f"{detail}; ordering {'holds' if ordered else 'violated'}; "
                   f"SP-RapIRSA>=0.85 {'yes' if level else 'no'}; {elapsed:.0f}s")
    assert ok


def test_7_delay_behavior(verdict):
    t0 = time.perf_counter()
    aloha = run("{protocol: saloha, load_sweep: [1.0, 1.5, 2.0], realizations: 5, sim_time_s: 10}")
    (short,) = run("{protocol: saloha, load_sweep: [1.0], realizations: 5, sim_time_s: 5}")
    (long,) = run("{protocol: saloha, load_sweep: [1.0], realizations: 5, sim_time_s: 20}")
    irsa = run("{protocol: irsa, load_sweep: [0.1, 0.3, 0.45], realizations: 20}")
    elapsed = time.perf_counter() - t0
    bound = worst_case_latency_ms(FrameParams()) / FrameParams().slot_ms
    unbounded = all(r.mean_delay_slots > 1e3 for r in aloha) and long.mean_delay_slots > 1.5 * short.mean_delay_slots
    bounded = all(r.mean_delay_slots < bound for r in irsa)
    ok = unbounded and bounded and elapsed < 60
    verdict(
        7, ok,
        "S-ALOHA delay " + ", ".join(f"G={r.G}:{r.mean_delay_slots:.0f}" for r in aloha)
        + f" (5s:{short.mean_delay_slots:.0f}, 20s:{long.mean_delay_slots:.0f}); IRSA "
        + ", ".join(f"G={r.G}:{r.mean_delay_slots:.1f}" for r in irsa) + f" < {bound:.0f} slots; {elapsed:.0f}s",
    )
    assert ok


def test_8_property_suites(verdict):
    rng = random.Random(8)
    confluent = all(random_order_peel(g, rng) == peel(g, 1000).decoded_set
                    for g in (random_graph(rng) for _ in range(1000)))

    subsets = [c for k in (1, 2, 3) for c in itertools.combinations(range(5), k)]
    oracle = all(
        all_terminal_sets(g) == {peel(g, 100).decoded_set}
        for m in range(5)
        for g in (FrameGraph.from_replicas(dict(enumerate(c)))
                  for c in itertools.combinations_with_replacement(subsets, m))
    )

    nrng = np.random.default_rng(8)
    conserved = all(
        beta_arrivals(M, 10, 3, 4, None, 1.0, nrng).sum() == M and uniform_arrivals(M, 60, None, 1.0, nrng).sum() == M
        for M in (0, 1, 1000, 30_000)
    )
    identities = (
        all(plr(pdr(a, b)) + pdr(a, b) == 1 for a, b in ((0, 1), (95, 100), (7, 7), (1, 3)))
        and math.isclose(acr([(2, 2), (1, 2)]), 0.75)
    )
    ok = confluent and oracle and conserved and identities
    verdict(8, ok, f"confluence {confluent}, exhaustive oracle {oracle}, conservation {conserved}, "
                   f"metric identities {identities}")
    assert ok
