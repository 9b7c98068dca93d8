"""Per-topic change scoring between consecutive slices.

Jensen-Shannon divergence (natural log, so bounded by ln 2) is computed
row-wise between two topic-word matrices; topics whose divergence exceeds
a per-slice outlier threshold are flagged as emerging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LN2 = math.log(2.0)

OUTLIER_METHODS = ("boxplot", "mad")


def kl_divergence(p, q) -> float:
    """Kullback-Leibler divergence sum p_i ln(p_i/q_i), with the
    convention 0 * ln(0/q) = 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    mask = p > 0
    if np.any(q[mask] == 0):
        raise ValueError("q has zero mass where p has positive mass")
    ps = p[mask]
    return float(np.sum(ps * np.log(ps / q[mask])))


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence against the equal mixture; symmetric and
    within [0, ln 2]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    mix = 0.5 * (p + q)
    return 0.5 * kl_divergence(p, mix) + 0.5 * kl_divergence(q, mix)


def outlier_threshold(values) -> float:
    """Boxplot rule Q3 + 1.5*IQR with linearly interpolated quartiles;
    +inf when fewer than 4 values (quartiles not meaningful)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 4:
        return math.inf
    q1, q3 = np.percentile(values, [25.0, 75.0])
    return float(q3 + 1.5 * (q3 - q1))


def mad_threshold(values) -> float:
    """Alternative rule: median + 3*MAD; same small-K guard as boxplot."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 4:
        return math.inf
    med = float(np.median(values))
    mad = float(np.median(np.abs(values - med)))
    return med + 3.0 * mad


@dataclass
class DivergenceReport:
    """Per-topic divergences for one slice with the applied threshold."""

    slice_index: int
    js: np.ndarray
    threshold: float
    anomalies: frozenset[int]


def detect(phi_t: np.ndarray, phi_prev: np.ndarray, method: str = "boxplot",
           slice_index: int = -1) -> DivergenceReport:
    """Score each topic's divergence between consecutive topic-word
    matrices; flag strict exceedances of the outlier threshold."""
    phi_t = np.asarray(phi_t, dtype=np.float64)
    phi_prev = np.asarray(phi_prev, dtype=np.float64)
    if phi_t.shape != phi_prev.shape:
        raise ValueError(f"phi shape mismatch: {phi_t.shape} vs {phi_prev.shape}")
    if method not in OUTLIER_METHODS:
        raise ValueError(f"unknown outlier method {method!r}")

    js = np.array([js_divergence(phi_t[k], phi_prev[k])
                   for k in range(phi_t.shape[0])])
    threshold = outlier_threshold(js) if method == "boxplot" else mad_threshold(js)
    anomalies = frozenset(int(k) for k in np.nonzero(js > threshold)[0])
    return DivergenceReport(slice_index=slice_index, js=js,
                            threshold=threshold, anomalies=anomalies)
