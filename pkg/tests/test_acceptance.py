"""Acceptance suite.  Run alone with ``pytest -m acceptance -v``; the terminal
summary prints one PASS/FAIL line per criterion."""

import itertools
import json
import math
import random
import subprocess
import sys
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from kextract.balance import bad_rows, is_balanced_exact, is_balanced_full
from kextract.circuit import (
    SOUNDNESS_SCALE,
    build_balance_circuit,
    completeness_threshold,
    evaluate,
)
from kextract.codec import decode_pair, encode_pair
from kextract.compress import decode_seed_rank, encode_seed_rank, good_row_rank_bound
from kextract.construct import brute_force_construct, empirical_balance_rate
from kextract.errors import guard_limit
from kextract.nw import accepted_seeds, derandomized_construct, design_for, nw_bit, nw_gen, seeds_from_ints
from kextract.params import BoundsInput, Params, advice_lower_bound, chernoff_upper_tail, existence_log_bound
from kextract.table import ColorSet, Table, constant_table, encode_bits, latin_table, random_table

pytestmark = pytest.mark.acceptance

MICRO = Params(n=3, n1=2, m=2, k=1, d=2, delta=1)
RANDOM_TABLES = 10_000
NW_T, NW_L, NW_R = 16, 4, 2


def single_bad_row_table(p):
    cells = np.array(latin_table(p).cells)
    cells[0, :] = 0
    return Table(p, cells)


def fixtures(p):
    return [latin_table(p), constant_table(p), single_bad_row_table(p)]


@pytest.fixture(scope="module")
def micro_population():
    tables = [random_table(MICRO, s) for s in range(RANDOM_TABLES)] + fixtures(MICRO)
    return tables


@pytest.fixture(scope="module")
def balanced_micro(micro_population):
    return [t for t in micro_population if is_balanced_full(t) is None]


def test_checker_oracle_equivalence(micro_population):
    start = time.perf_counter()
    disagreements = [
        i for i, t in enumerate(micro_population) if (is_balanced_exact(t) is None) != (is_balanced_full(t) is None)
    ]
    elapsed = time.perf_counter() - start
    assert len(micro_population) >= RANDOM_TABLES + 3
    assert disagreements == []
    assert elapsed < 60, f"checking took {elapsed:.1f}s"


def test_bad_row_bound(balanced_micro):
    assert balanced_micro
    p = MICRO
    exceptions = []
    for t in balanced_micro:
        for a in itertools.combinations(range(p.M), p.color_set_size):
            if len(bad_rows(t, ColorSet(p.M, a))) >= p.K:
                exceptions.append((t, a))
    assert exceptions == []


def test_rank_codec():
    p = MICRO
    color_sets = [ColorSet(p.M, a) for r in range(1, p.M + 1) for a in itertools.combinations(range(p.M), r)]
    cells_checked = 0
    for seed in range(100):
        t = random_table(p, seed)
        for colors in color_sets:
            for x in range(p.N):
                for y in range(p.N1):
                    if t[x, y] in colors:
                        assert decode_seed_rank(t, encode_seed_rank(t, x, colors, y)) == y
                        cells_checked += 1
        if is_balanced_exact(t) is not None:
            continue
        limit = p.Delta * Fraction(p.N1, p.D)
        for a in itertools.combinations(range(p.M), p.color_set_size):
            for row in good_row_rank_bound(t, ColorSet(p.M, a)).rows:
                assert row.rank_space <= limit
    assert cells_checked > 0


def _oracle_log_bound(p):
    N, N1, M, K, D = (mpmath.mpf(v) for v in (p.N, p.N1, p.M, p.K, p.D))
    shifted = mpmath.power(2, mpmath.mpf(p.delta)) - 1
    return K * mpmath.log(N) + (M / D) * (1 + mpmath.log(D)) - shifted * mpmath.log(shifted / 3) * K * N1 / D


def test_existence_bound_consistency():
    mpmath.mp.dps = 60
    rng = random.Random(20240601)
    worst = 0.0
    certified_feasible = []
    for _ in range(1000):
        n = rng.randint(1, 8)
        m = rng.randint(1, 4)
        d = rng.randint(0, m)
        p = Params(n=n, n1=rng.randint(0, 8), m=m, k=rng.randint(0, n), d=d, delta=rng.uniform(0.05, 8))
        got = existence_log_bound(p).value
        want = _oracle_log_bound(p)
        err = float(abs(got - want) / max(1, abs(want)))
        worst = max(worst, err)
        if got < 0 and p.encoded_bits <= math.log2(guard_limit(1 << 24)):
            certified_feasible.append(p)
    assert worst <= 1e-9, f"worst scaled error {worst:.3e}"
    # the random draws rarely land in the feasible region, so sweep it too
    for n, n1, m in itertools.product(range(1, 4), range(0, 4), range(1, 4)):
        if (1 << n) * (1 << n1) * m > 24:
            continue
        for k, d, delta in itertools.product(range(n + 1), range(m + 1), (1.5, 2.25, 2.5, 3, 4)):
            p = Params(n=n, n1=n1, m=m, k=k, d=d, delta=delta)
            if existence_log_bound(p).value < 0:
                certified_feasible.append(p)
    assert certified_feasible
    missing = [p for p in certified_feasible if brute_force_construct(p) is None]
    assert missing == []


RATE_SETS = [
    Params(n=4, n1=4, m=3, k=0, d=3, delta=math.log2(7)),
    Params(n=4, n1=5, m=3, k=0, d=3, delta=math.log2(7)),
    Params(n=4, n1=4, m=3, k=0, d=3, delta=2.98),
]


@pytest.mark.parametrize("params", RATE_SETS, ids=["n1_4", "n1_5", "delta_2_98"])
def test_empirical_rate_vs_bound(params):
    rep = empirical_balance_rate(params, 1000, 0)
    assert rep.log_bound < 0
    assert rep.trials >= 1000
    assert rep.rate >= 1 - math.exp(rep.log_bound) - rep.ci_halfwidth


def test_circuit_sandwich():
    p = MICRO
    circuit = build_balance_circuit(p)
    tables = [random_table(p, s) for s in range(1000)] + fixtures(p)
    breaches = []
    for t in tables:
        accepts = evaluate(circuit, encode_bits(t)) == 1
        if accepts and is_balanced_exact(t, scale=SOUNDNESS_SCALE) is not None:
            breaches.append(("soundness", t))
        if is_balanced_exact(t) is None and not accepts:
            breaches.append(("completeness", t))
    assert breaches == []
    small = build_balance_circuit(Params(n=2, n1=2, m=1, k=1, d=1, delta=1))
    assert small.size < circuit.size and small.depth == circuit.depth
    a = Fraction(1) / Fraction(99, 100) * p.Delta * Fraction(1, p.D) * p.K * p.N1
    assert completeness_threshold(p) == a == Fraction(400, 99)


class CountingSeed:
    def __init__(self, bits):
        self.bits = list(bits)
        self.reads = 0

    def __len__(self):
        return len(self.bits)

    def __getitem__(self, j):
        self.reads += 1
        return self.bits[j]


def test_nw_pipeline():
    p = MICRO
    design = design_for(p, NW_T, NW_L, NW_R)
    assert design.count == p.encoded_bits
    for s in design.sets:
        assert len(set(s)) == NW_L and all(0 <= j < NW_T for j in s)
    for a, b in itertools.combinations(design.sets, 2):
        assert len(set(a) & set(b)) <= NW_R
    rng = np.random.default_rng(7)
    for _ in range(100):
        seed = rng.integers(0, 2, NW_T, dtype=np.uint8)
        out = nw_gen(seed, design)
        for i in range(design.count):
            counted = CountingSeed(seed)
            assert nw_bit(counted, i, design) == out[i]
            assert counted.reads == NW_L
    start = time.perf_counter()
    result = derandomized_construct(p, NW_T, NW_L, NW_R)
    elapsed = time.perf_counter() - start
    sweep = accepted_seeds(p, NW_T, NW_L, NW_R)
    assert sweep.shape == (1 << NW_T,)
    assert elapsed < 60
    if sweep.any():
        smallest = int(np.flatnonzero(sweep)[0])
        assert result.seed_index == smallest
        assert result.seed.tolist() == seeds_from_ints(np.array([smallest]), NW_T)[0].tolist()
        assert is_balanced_exact(result.table, scale=SOUNDNESS_SCALE) is None
    else:
        assert result is None


def test_bound_calculators():
    assert advice_lower_bound(BoundsInput(Fraction(1, 2), 1, 1024, 512)).main_term == Fraction(1, 6)
    for h in range(0, 30):
        a = advice_lower_bound(BoundsInput(Fraction(1, 3), h, 1024, 512)).main_term
        b = advice_lower_bound(BoundsInput(Fraction(1, 3), h + 1, 1024, 512)).main_term
        assert a / b == Fraction(2 ** (h + 2) - 1, 2 ** (h + 1) - 1)
    for mu in (0.0, 0.5, 1.0, 17.0, 1e6):
        assert chernoff_upper_tail(mu, 3) == 1


def test_pair_codec_roundtrip_and_length():
    rng = random.Random(99)
    for _ in range(10_000):
        x1 = "".join(rng.choice("01") for _ in range(rng.randint(0, 40)))
        x2 = "".join(rng.choice("01") for _ in range(rng.randint(0, 40)))
        code = encode_pair(x1, x2)
        assert decode_pair(code) == (x1, x2)
        assert len(code) == len(x1) + len(x2) + 2 * math.ceil(math.log2(len(x2) + 1)) + 2


def test_pair_codec_prefix_free():
    rng = random.Random(100)
    codes = set()
    for _ in range(2000):
        x1 = "".join(rng.choice("01") for _ in range(rng.randint(0, 4)))
        x2 = "".join(rng.choice("01") for _ in range(rng.randint(0, 4)))
        codes.add(encode_pair(x1, x2))
    ordered = sorted(codes)
    # a prefix sorts directly before some word that extends it
    clashes = [(u, v) for u, v in zip(ordered, ordered[1:]) if v.startswith(u)]
    assert not clashes, f"{len(clashes)} codewords are proper prefixes of others, e.g. {clashes[0]}"


def _gen_table(tmp_path, name, params_path, method, threads, extra=()):
    out = tmp_path / name
    cmd = [sys.executable, "-m", "kextract.cli", "gen-table", "--params", str(params_path), "--method", method]
    cmd += ["--out", str(out), "--threads", str(threads), *extra]
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    return out.read_bytes(), (tmp_path / (name + ".json")).read_bytes()


@pytest.mark.parametrize(
    "method,params,extra",
    [
        ("random", MICRO, ("--rng-seed", "5")),
        ("brute", Params(n=2, n1=1, m=1, k=1, d=1, delta=0.5), ()),
        ("nw", MICRO, ("--t", "16", "--l", "4", "--r", "2")),
    ],
    ids=["random", "brute", "nw"],
)
def test_gen_table_reproducible(tmp_path, method, params, extra):
    params_path = tmp_path / "params.json"
    params_path.write_text(json.dumps(params.to_json()))
    runs = [
        _gen_table(tmp_path, f"{method}_{i}_{threads}.btbl", params_path, method, threads, extra)
        for i, threads in enumerate((1, 1, 4, 4))
    ]
    assert all(r == runs[0] for r in runs)
