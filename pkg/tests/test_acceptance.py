"""End-to-end acceptance checks.

Each test prints one ``[PASS]`` / ``[FAIL]`` line with the measured value; run
with ``pytest tests/test_acceptance.py -s`` to see them.
"""

import io
import math
import time

import numpy as np

from cntpuf.analysis import (
    build_attack_report,
    distinguishability,
    fractional_hd,
    hamming_weight_fraction,
    per_bit_entropy,
)
from cntpuf.cli import EXIT_BLOCKED, run
from cntpuf.crossbar import ATTACK_KINDS, NONSEL_KINDS, SchemeKind, build_crossbar, evaluate_scheme, make_bias_scheme
from cntpuf.device_model import ClassMix, sample_cell
from cntpuf.procedures import default_threshold, enroll_mask, read_response, run_attack_trace
from cntpuf.scenario_io import load_response
from cntpuf.seeding import sub_seed

MIX = ClassMix()
RULE = default_threshold(MIX)


def verdict(number, title, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {detail}")
    assert ok, detail


def test_1_drain_leak_attack_succeeds():
    start = time.perf_counter()
    accuracies, dists = [], []
    for seed in range(10):
        xb = build_crossbar(MIX, 12, 12, seed)
        trace = run_attack_trace(xb, SchemeKind.DRAIN_LEAK, 10, seed)
        rep = build_attack_report(trace, read_response(xb, RULE, seed=seed))
        accuracies.append(rep.accuracy_response)
        dists.append(rep.distinguishability)
    elapsed = time.perf_counter() - start
    ok = min(accuracies) >= 0.99 and min(dists) >= 0.99 and elapsed <= 10
    verdict(1, "drain-leak attack", ok,
            f"min accuracy {min(accuracies):.4f}, min distinguishability {min(dists):.4f}, {elapsed:.1f} s")


def test_2_other_attacks_fail():
    start = time.perf_counter()
    crossbars = []
    counts = np.zeros(2, int)
    seed = 100
    while counts.min() < 1000:
        xb = build_crossbar(MIX, 12, 12, seed)
        crossbars.append((seed, xb))
        counts += np.bincount(xb.truth_bits(), minlength=2)
        seed += 1
    results = {}
    for kind in (k for k in ATTACK_KINDS if k is not SchemeKind.DRAIN_LEAK):
        ones, zeros = [], []
        for s, xb in crossbars:
            trace = run_attack_trace(xb, kind, 10, s)
            means, truth = trace.mean_magnitudes(), trace.truth.astype(bool)
            ones.append(means[truth])
            zeros.append(means[~truth])
        results[kind.value] = distinguishability(np.concatenate(ones), np.concatenate(zeros))
    elapsed = time.perf_counter() - start
    ok = all(0.5 <= d <= 0.6 for d in results.values()) and elapsed <= 60
    detail = ", ".join(f"{k} {d:.4f}" for k, d in results.items())
    verdict(2, "gate/non-selected leak attacks fail", ok,
            f"{detail} over {len(crossbars)} crossbars ({counts[1]} ones, {counts[0]} zeros), {elapsed:.1f} s")


def test_3_nonsel_class_swap_exclusion():
    rng = np.random.default_rng(3)
    failures = 0
    for trial in range(200):
        rows, cols = rng.integers(2, 13, size=2)
        xb = build_crossbar(ClassMix(0.2, 0.4, 0.4), int(rows), int(cols), int(rng.integers(2**32)))
        r, c = int(rng.integers(rows)), int(rng.integers(cols))
        kind = NONSEL_KINDS[trial % len(NONSEL_KINDS)]
        scheme = make_bias_scheme(kind, (r, c), xb.shape)
        swapped = xb.with_cell(r, c, sample_cell(ClassMix(1 / 3, 1 / 3, 1 / 3), int(rng.integers(2**32))))
        noise = int(rng.integers(2**32))
        a = evaluate_scheme(xb, scheme, noise).reading
        b = evaluate_scheme(swapped, scheme, noise).reading
        failures += a != b
    verdict(3, "non-selected leak ignores the selected cell", failures == 0, f"{failures}/200 trials differ")


def _random_evaluation(rng):
    rows, cols = (int(x) for x in rng.integers(2, 13, size=2))
    xb = build_crossbar(MIX, rows, cols, int(rng.integers(2**32)))
    kind = list(SchemeKind)[int(rng.integers(len(SchemeKind)))]
    cell = (int(rng.integers(rows)), int(rng.integers(cols)))
    scheme = make_bias_scheme(kind, cell, xb.shape, float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.0, 3.0)))
    return xb, scheme


def test_4_kirchhoff_current_law():
    rng = np.random.default_rng(4)
    worst = 0.0
    violations = 0
    for _ in range(1000):
        xb, scheme = _random_evaluation(rng)
        lc = evaluate_scheme(xb, scheme, int(rng.integers(2**32)))
        residual = abs(lc.total())
        violations += residual > 1e-18 + 1e-9 * lc.abs_total()
        worst = max(worst, residual)
    verdict(4, "current conservation", violations == 0, f"{violations}/1000 violations, worst |sum| {worst:.3g} A")


def test_5_polarity_symmetry():
    rng = np.random.default_rng(5)
    bad = 0
    for _ in range(1000):
        xb, scheme = _random_evaluation(rng)
        pos = evaluate_scheme(xb, scheme)
        neg = evaluate_scheme(xb, scheme.negated())
        exact = (
            np.array_equal(neg.drain, -pos.drain)
            and np.array_equal(neg.source, -pos.source)
            and neg.gate == -pos.gate
            and neg.reading == -pos.reading
        )
        same_class = RULE.classify(pos.reading) == RULE.classify(neg.reading)
        bad += not (exact and same_class)
    verdict(5, "polarity symmetry", bad == 0, f"{bad}/1000 schemes break symmetry")


def test_6_readout_reliability():
    hds = []
    clean_reads = total_reads = 0
    for device in range(10):
        xb = build_crossbar(MIX, 12, 12, device)
        reference = read_response(xb, RULE, seed=device)
        for k in range(10):
            later = read_response(xb, RULE, seed=sub_seed(device, 10, k))
            hds.append(fractional_hd(reference.bits, later.bits))
        enrolled = enroll_mask(xb, RULE, 10, seed=device)
        stable = enrolled.mask.astype(bool)
        for k in range(50):
            later = read_response(xb, RULE, seed=sub_seed(device, 11, k))
            clean_reads += np.array_equal(later.bits[stable], enrolled.bits[stable])
            total_reads += 1
    mean_hd = float(np.mean(hds))
    clean = clean_reads / total_reads
    verdict(6, "readout reliability", mean_hd <= 0.03 and clean >= 0.95,
            f"mean intra-device HD {mean_hd:.4f}, flip-free masked reads {clean:.3f}")


def _oracle_hd(a, b):
    return sum(x != y for x, y in zip(a, b)) / len(a)


def _oracle_entropy(vectors):
    out = []
    for pos in range(len(vectors[0])):
        p = sum(v[pos] for v in vectors) / len(vectors)
        out.append(0.0 if p in (0.0, 1.0) else -p * math.log2(p) - (1 - p) * math.log2(1 - p))
    return out


def test_7_metrics_oracle():
    vectors = [tuple((n >> i) & 1 for i in range(8)) for n in range(256)]
    worst = 0.0
    for v in vectors:
        worst = max(worst, abs(hamming_weight_fraction(v) - sum(v) / 8))
    rng = np.random.default_rng(7)
    pairs = [(a, b) for a in vectors for b in vectors[::17]]
    for a, b in pairs:
        worst = max(worst, abs(fractional_hd(a, b) - _oracle_hd(a, b)))
    groups = [vectors, vectors[:3], vectors[::5]] + [
        [vectors[i] for i in rng.choice(256, size=int(rng.integers(1, 40)))] for _ in range(50)
    ]
    for g in groups:
        worst = max(worst, float(np.max(np.abs(per_bit_entropy(g) - _oracle_entropy(g)))))
    verdict(7, "metrics match brute force", worst <= 1e-12,
            f"max deviation {worst:.2g} over 256 weights, {len(pairs)} pairs, {len(groups)} entropy groups")


def _cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    return run([str(a) for a in argv], out, err), err.getvalue()


def test_8_cli_determinism(tmp_path):
    config = tmp_path / "scenario.yaml"
    config.write_text("rows: 12\ncols: 12\nseed: 8\n")
    files = []
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        for kind in ("drain-leak", "nonsel-leak"):
            code, err = _cli("attack", "--config", config, "--kind", kind,
                             "--trace-out", d / f"{kind}.csv", "--report-out", d / f"{kind}.json")
            assert code == 0, err
        files.append(sorted(d.iterdir()))
    same = [x.read_bytes() == y.read_bytes() for x, y in zip(*files)]
    verdict(8, "byte-identical CLI output", len(same) == 4 and all(same),
            f"{sum(same)}/{len(same)} files identical")


def test_9_countermeasure_gating(tmp_path):
    config = tmp_path / "gated.yaml"
    config.write_text("rows: 12\ncols: 12\nseed: 9\nprobe_access: [source-lines, gate-line]\n")
    attack_code, attack_err = _cli("attack", "--config", config, "--kind", "drain-leak",
                                   "--trace-out", tmp_path / "t.csv")
    read_code, _ = _cli("readout", "--config", config, "--out", tmp_path / "r.json")
    resp, _ = load_response(tmp_path / "r.json")
    truth = build_crossbar(MIX, 12, 12, 9).truth_bits()
    ok = (
        attack_code == EXIT_BLOCKED
        and "blocked by countermeasure" in attack_err
        and not (tmp_path / "t.csv").exists()
        and read_code == 0
        and np.array_equal(resp.bits, truth)
    )
    verdict(9, "drain access countermeasure", ok,
            f"attack exit {attack_code}, readout exit {read_code}, readout matches device: {np.array_equal(resp.bits, truth)}")
