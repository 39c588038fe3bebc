"""Acceptance criteria 1-9.

Each test records a pass/fail line for its criterion; the lines are
printed in the terminal summary (see conftest.py).
"""
import filecmp
import math
import os
import subprocess
import sys
import time
from itertools import product

import numpy as np
import pytest

from qmcdep.experiments import MC, ExperimentPlan, run_replications
from qmcdep.integrands import make_integrand
from qmcdep.negdep import c_value, cqe_check, m_count, net_closed_form
from qmcdep.numth import DigitVector
from qmcdep.negdep import gamma
from qmcdep.permute import factors_method1, factors_method2, faure92
from qmcdep.randomize import KINDS, RandomizerSpec, randomize
from qmcdep.sequences import PointSet, SequenceSpec, faure_set, halton_set
from qmcdep.tables import TABLES, calibrate, calibrated_L


def _ks(s, max_norm):
    return [k for k in product(range(max_norm + 1), repeat=s) if sum(k) <= max_norm]


# 1 ---------------------------------------------------------------------------

def test_criterion_1_factor_goldens(criterion_log):
    t = time.perf_counter()
    got = {
        "b5 f92": factors_method1(faure92(5)).factors,
        "b5 offset": factors_method2(faure92(5)).factors,
        "b13 f92": factors_method1(faure92(13)).factors,
        "b13 offset": factors_method2(faure92(13)).factors,
    }
    want = {
        "b5 f92": (3, 2, 1, 4),
        "b5 offset": (3, 1, 4, 2),
        "b13 f92": (4, 9, 2, 7, 11, 6, 1, 5, 10, 3, 8, 12),
        "b13 offset": (7, 11, 3, 9, 1, 5, 8, 12, 4, 10, 2, 6),
    }
    off53 = factors_method2(faure92(53)).factors
    ok = got == want and off53[:3] == (27, 43, 11) and off53[-3:] == (42, 10, 26)
    dt = time.perf_counter() - t
    ok = ok and dt < 1.0
    criterion_log(1, ok, f"factor vectors for b=5, 13, 53 exact; {dt:.3f}s")
    assert got == want
    assert off53[:3] == (27, 43, 11) and off53[-3:] == (42, 10, 26)
    assert dt < 1.0


# 2 ---------------------------------------------------------------------------

def test_criterion_2_net_closed_form(criterion_log):
    t = time.perf_counter()
    F = faure_set(125, 4, 5)
    worst = max(abs(c_value(F, k, 5) - net_closed_form(5, 3, sum(k))) for k in _ks(4, 3))
    dt = time.perf_counter() - t
    ok = worst <= 1e-12 and dt < 1.0
    criterion_log(2, ok, f"max |C_5(k) - closed form| over |k|<=3 = {worst:.1e}; {dt:.3f}s")
    assert worst <= 1e-12
    assert dt < 1.0


# 3 ---------------------------------------------------------------------------

def test_criterion_3_cqe(criterion_log):
    t = time.perf_counter()
    results = {}
    for n in (50, 125, 625):
        results[f"Faure b=5 n={n}"] = cqe_check(faure_set(n, 4, 5), eps=1e-9)
    for n in (100, 1000):
        results[f"Halton s=4 n={n}"] = cqe_check(halton_set(n, 4), eps=1e-9)
    dt = time.perf_counter() - t
    ok = all(r.ok for r in results.values()) and dt < 10
    detail = ", ".join(f"{name}: {r.ok} ({r.checked} k)" for name, r in results.items())
    criterion_log(3, ok, f"{detail}; {dt:.2f}s")
    assert all(r.ok for r in results.values())
    assert dt < 10


# 4 ---------------------------------------------------------------------------

ROWS_4 = [
    ("T1 regular", 1, "regular", 4),
    ("T2 regular", 2, "regular", 12),
    ("T2 offset", 2, "offset", 12),
    ("T3 regular", 3, "regular", 4),
    ("T4 offset", 4, "offset", 52),
]


@pytest.mark.parametrize("name,table,variant,s", ROWS_4, ids=[r[0] for r in ROWS_4])
def test_criterion_4_table_rows(name, table, variant, s, criterion_log):
    row = next(r for r in TABLES[table] if r.variant == variant and r.s == s)
    L = calibrated_L(row.family, row.n)
    t = time.perf_counter()
    cal = calibrate(row, L_max=max(L, 20), threads=os.cpu_count() or 1)
    dt = time.perf_counter() - t
    c, cbar, dev = cal.at(L)
    ok = dev <= 1e-4
    criterion_log(4, ok, f"{cal.report_line(L)}; {dt:.1f}s")
    assert dt < 600
    assert abs(c - row.c) <= 1e-4, cal.report_line(L)
    assert abs(cbar - row.cbar) <= 1e-4, cal.report_line(L)


# 5 ---------------------------------------------------------------------------

def test_criterion_5_randomizer_invariance(criterion_log):
    F = faure_set(625, 4, 5)
    ks = _ks(4, 4)
    before = [m_count(F, k, 5) for k in ks]
    bad = 0
    seeds = np.random.default_rng(55).integers(0, 2**63, 20)
    for seed in seeds:
        for kind in KINDS:
            R = randomize(F, RandomizerSpec(kind, int(seed), 0))
            if [m_count(R, k, 5) for k in ks] != before:
                bad += 1
    criterion_log(5, bad == 0, f"{len(seeds)} seeds x {len(KINDS)} randomizers x {len(ks)} k: {bad} changed")
    assert bad == 0


# 6 ---------------------------------------------------------------------------

def _brute_m(P, k):
    n, count = P.n, 0
    dv = [[P.digit_vector(i, j) for j in range(P.s)] for i in range(n)]
    for i in range(n):
        for i2 in range(n):
            if i != i2 and all(gamma(dv[i][j], dv[i2][j]) >= k[j] for j in range(P.s)):
                count += 1
    return count


def test_criterion_6_oracle_equivalence(criterion_log):
    rng = np.random.default_rng(6)
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(2, 65))
        s = int(rng.integers(1, 5))
        bases = tuple(int(rng.choice([2, 3, 5])) for _ in range(s))
        ndig = tuple(int(math.ceil(53 / math.log2(b))) for b in bases)
        # few distinct leading digits so that groups of every size occur
        depth = int(rng.integers(1, 5))
        cols = [rng.integers(0, b**depth, n).astype(np.uint64) * np.uint64(b ** (K - depth))
                for b, K in zip(bases, ndig)]
        P = PointSet(np.stack(cols, axis=1), bases, ndig)
        k = tuple(int(v) for v in rng.integers(0, depth + 2, s))
        if m_count(P, k) != _brute_m(P, k):
            mismatches += 1
    criterion_log(6, mismatches == 0, f"200 random instances, {mismatches} mismatches")
    assert mismatches == 0


# 7 ---------------------------------------------------------------------------

def test_criterion_7_rqmc_behaviour(criterion_log):
    t = time.perf_counter()
    h1 = make_integrand("h1", 4)
    h0 = make_integrand("h0", 12)
    faure = SequenceSpec("faure", 4, 5, label="faure")
    halton = SequenceSpec("halton", 12, label="halton")
    threads = os.cpu_count() or 1
    wins_a, wins_b, lines = 0, 0, []
    for seed in (1, 2, 3):
        scr = run_replications(ExperimentPlan(faure, "owen_scramble", h1, (25000,), 25, seed, threads=threads))
        mc = run_replications(ExperimentPlan(MC, "none", h1, (25000,), 25, seed, threads=threads))
        lin = run_replications(ExperimentPlan(halton, "linear_scramble", h0, (2197 * 8,), 25, seed,
                                              threads=threads))
        shf = run_replications(ExperimentPlan(halton, "digital_shift", h0, (2197 * 8,), 25, seed,
                                              threads=threads))
        a = scr.values[0] < mc.values[0] / 10
        b = lin.values[0] < shf.values[0]
        wins_a += a
        wins_b += b
        lines.append(f"seed {seed}: owen {scr.values[0]:.2e} vs MC {mc.values[0]:.2e}; "
                     f"linear {lin.values[0]:.2e} vs shift {shf.values[0]:.2e}")
    dt = time.perf_counter() - t
    ok = wins_a >= 2 and wins_b >= 2 and dt < 300
    criterion_log(7, ok, f"h1 owen<MC/10 in {wins_a}/3, h0 linear<shift in {wins_b}/3; {dt:.0f}s; "
                  + " | ".join(lines))
    assert wins_a >= 2
    assert wins_b >= 2
    assert dt < 300


# 8 ---------------------------------------------------------------------------

UNBIASED = [
    ("h0", make_integrand("h0", 4), SequenceSpec("faure", 4, 5)),
    ("h1", make_integrand("h1", 4), SequenceSpec("faure", 4, 5)),
    ("g2 s=120 c=0.1", make_integrand("g2", 120, c=0.1), SequenceSpec("halton", 120)),
    ("g2 s=96 c=0.25", make_integrand("g2", 96, c=0.25), SequenceSpec("halton", 96)),
]


def test_criterion_8_unbiasedness(criterion_log):
    lines, ok = [], True
    for name, f, spec in UNBIASED:
        res = run_replications(ExperimentPlan(spec, "digital_shift", f, (512,), 200, 8,
                                              threads=os.cpu_count() or 1))
        est = res.estimates[0]
        se = est.std(ddof=1) / math.sqrt(len(est))
        z = abs(est.mean() - f.true_mean) / se
        ok &= bool(z <= 4)
        lines.append(f"{name}: |mean-mu|/se = {z:.2f}")
    criterion_log(8, ok, "; ".join(lines))
    assert ok, lines


# 9 ---------------------------------------------------------------------------

CLI_RUNS = [
    ["gen", "--family", "gfaure", "--factors", "offset", "--s", "4", "--n", "200"],
    ["criteria", "--family", "ghalton", "--perms", "offset", "--s", "12", "--n", "2197", "--L", "12"],
    ["criteria", "--table", "1", "--L", "10"],
    ["cqe", "--family", "halton", "--s", "4", "--n", "300"],
    ["converge", "--f", "h1", "--s", "12", "--family", "halton", "--rand", "linear", "--V", "5",
     "--ns", "2197:4", "--seed", "42"],
    ["converge", "--f", "san", "--family", "mc", "--V", "4", "--ns", "100,300", "--seed", "42"],
    ["hist", "--f", "h0", "--s", "4", "--R", "4", "--n", "625", "--V", "3", "--rand", "owen", "--seed", "42"],
]


def test_criterion_9_cli_determinism(tmp_path, criterion_log):
    differ = []
    for i, argv in enumerate(CLI_RUNS):
        outs = []
        for rep, threads in enumerate(("1", "8", "8")):
            out = tmp_path / f"run{i}_{rep}.csv"
            proc = subprocess.run([sys.executable, "-m", "qmcdep.cli", *argv, "--threads", threads,
                                   "--out", str(out)], capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            outs.append(out)
        if not all(filecmp.cmp(outs[0], o, shallow=False) for o in outs[1:]):
            differ.append(argv[0])
    criterion_log(9, not differ, f"{len(CLI_RUNS)} invocations x (threads 1, 8, 8 repeated): "
                  f"{len(differ)} differ")
    assert not differ
