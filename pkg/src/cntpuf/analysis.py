"""Attacker threshold learning, attack scoring and PUF quality metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from cntpuf.crossbar import SchemeKind
from cntpuf.procedures import AttackTrace, Response, ThresholdRule


def _as_magnitudes(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("need at least two samples")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("samples must be positive, finite current magnitudes")
    return x


def two_means_1d(values) -> tuple[float, float, int]:
    """Exact 2-means on a 1-D sample.

    Returns ``(low_centroid, high_centroid, n_low)``.  Every split of the sorted
    sample between two distinct values is scored by within-cluster sum of
    squares; the first minimum wins.  With no distinct values both centroids
    equal the common value.
    """
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    cuts = np.flatnonzero(x[1:] > x[:-1]) + 1
    if cuts.size == 0:
        return float(x[0]), float(x[0]), n
    c1 = np.cumsum(x)
    c2 = np.cumsum(x * x)
    k = cuts
    sse_low = c2[k - 1] - c1[k - 1] ** 2 / k
    hi_sum = c1[-1] - c1[k - 1]
    sse_high = (c2[-1] - c2[k - 1]) - hi_sum**2 / (n - k)
    best = int(k[np.argmin(sse_low + sse_high)])
    return float(x[:best].mean()), float(x[best:].mean()), best


def log_two_means_threshold(samples) -> tuple[float, float]:
    """Geometric-mean threshold between the 2-means centroids of log10 magnitudes.

    Returns ``(threshold, centroid_ratio)``.
    """
    x = _as_magnitudes(samples)
    lo, hi, _ = two_means_1d(np.log10(x))
    return 10 ** ((lo + hi) / 2), 10 ** (hi - lo)


def learn_threshold(samples, min_ratio: float = 2.0) -> ThresholdRule | None:
    """Attacker threshold from unlabelled current magnitudes.

    ``None`` means the sample is non-separable: the two log-centroids lie
    less than a factor ``min_ratio`` apart.
    """
    threshold, ratio = log_two_means_threshold(samples)
    if ratio < min_ratio:
        return None
    return ThresholdRule(threshold)


def predict_bits(trace: AttackTrace, rule: ThresholdRule) -> np.ndarray:
    """Per-cell mean magnitude over repetitions, thresholded."""
    return rule.classify(trace.mean_magnitudes())


def attack_accuracy(trace: AttackTrace, rule: ThresholdRule, reference) -> float:
    reference = np.asarray(reference)
    if reference.shape != (len(trace.samples),):
        raise ValueError(
            f"reference has length {reference.size}, trace covers {len(trace.samples)} cells"
        )
    return float(np.mean(predict_bits(trace, rule) == reference))


def distinguishability(samples_class1, samples_class0) -> float:
    """Best balanced accuracy of any single threshold, in either direction.

    Only the rank order of the pooled sample matters, so the result is
    invariant under any strictly increasing transform of all samples.
    """
    a = np.asarray(samples_class1, dtype=float).ravel()
    b = np.asarray(samples_class0, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both sample groups must be non-empty")
    cuts = np.unique(np.concatenate([a, b]))
    a.sort()
    b.sort()
    na, nb = a.size, b.size
    # counts at or below each distinct value; the cut above every value is the
    # 0.5 baseline.  Integer numerators keep the result exactly swap-symmetric.
    below_a = np.searchsorted(a, cuts, side="right").astype(np.int64)
    below_b = np.searchsorted(b, cuts, side="right").astype(np.int64)
    num = (na - below_a) * nb + below_b * na
    denom = 2 * na * nb
    best = max(int(num.max()), int((denom - num).max()))
    return best / denom


@dataclass
class AttackReport:
    kind: SchemeKind
    threshold: float
    separable: bool
    predicted: np.ndarray
    accuracy_truth: float
    accuracy_response: float | None
    distinguishability: float

    def __post_init__(self):
        for name in ("accuracy_truth", "accuracy_response"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [0, 1]")
        if not 0.5 <= self.distinguishability <= 1.0:
            raise ValueError("distinguishability outside [0.5, 1]")

    @property
    def rule(self) -> ThresholdRule | None:
        return ThresholdRule(self.threshold) if self.separable else None


def build_attack_report(
    trace: AttackTrace,
    response: Response | np.ndarray | None = None,
    min_ratio: float = 2.0,
) -> AttackReport:
    """Learn a threshold from ``trace`` alone and score it.

    The attacker sees only the per-cell mean magnitudes.  When they are
    non-separable the centroid midpoint is still used for the predictions so
    that accuracies remain defined; ``separable`` records the flag.
    """
    means = trace.mean_magnitudes()
    threshold, ratio = log_two_means_threshold(np.maximum(means, np.finfo(float).tiny))
    rule = ThresholdRule(threshold)
    predicted = predict_bits(trace, rule)
    acc_truth = float(np.mean(predicted == trace.truth))
    acc_resp = None
    if response is not None:
        ref = response.bits if isinstance(response, Response) else np.asarray(response)
        acc_resp = attack_accuracy(trace, rule, ref)
    truth = trace.truth.astype(bool)
    if truth.all() or not truth.any():
        dist = 0.5
    else:
        dist = distinguishability(means[truth], means[~truth])
    return AttackReport(
        trace.kind, threshold, ratio >= min_ratio, predicted, acc_truth, acc_resp, dist
    )


def _bits(x) -> np.ndarray:
    return np.asarray(x, dtype=np.uint8).ravel()


def hamming_weight_fraction(bits) -> float:
    b = _bits(bits)
    if b.size == 0:
        raise ValueError("empty bit vector")
    return float(b.sum()) / b.size


def fractional_hd(bits_a, bits_b, mask=None) -> float:
    a, b = _bits(bits_a), _bits(bits_b)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if mask is None:
        keep = np.ones(a.size, dtype=bool)
    else:
        keep = _bits(mask).astype(bool)
        if keep.size != a.size:
            raise ValueError(f"mask length {keep.size} does not match {a.size}")
    n = int(keep.sum())
    if n == 0:
        raise ValueError("mask selects no bits")
    return float(np.count_nonzero(a[keep] != b[keep])) / n


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def per_bit_entropy(responses) -> np.ndarray:
    """Binary entropy of the empirical 1-frequency at every bit position."""
    m = np.asarray(responses, dtype=np.uint8)
    if m.ndim != 2 or m.shape[0] == 0:
        raise ValueError("need a non-empty list of equal-length responses")
    return np.array([binary_entropy(p) for p in m.mean(axis=0)])


@dataclass
class MetricsReport:
    hamming_weight: float
    entropy: np.ndarray
    intra_hd: list[float]
    inter_hd: list[float]

    @property
    def mean_intra_hd(self) -> float:
        return float(np.mean(self.intra_hd)) if self.intra_hd else float("nan")

    @property
    def mean_inter_hd(self) -> float:
        return float(np.mean(self.inter_hd)) if self.inter_hd else float("nan")


def metrics_report(reference, rereads=(), devices=(), mask=None) -> MetricsReport:
    """Quality metrics of one device's ``reference`` response.

    ``rereads`` are later reads of the same device (reliability), ``devices``
    are reference responses of other devices (uniqueness).  Entropy is taken
    per position over the reference and the other devices.
    """
    ref = _bits(reference)
    intra = [fractional_hd(ref, r, mask) for r in rereads]
    inter = [fractional_hd(a, b) for a, b in combinations([ref, *map(_bits, devices)], 2)]
    return MetricsReport(
        hamming_weight_fraction(ref),
        per_bit_entropy([ref, *map(_bits, devices)]),
        intra,
        inter,
    )
