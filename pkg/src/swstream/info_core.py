"""Probability and information primitives for finite joint sources.

Everything downstream (exponent formulas, decoders, simulations) works on a
finite joint pmf over X x Y.  A point-to-point source is the degenerate case
|Y| = 1.  All logarithms are natural; entropies and divergences are in nats.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "JointDistribution",
    "EmpiricalType",
    "TiltedFamilyPoint",
    "entropy",
    "conditional_entropy_x_given_y",
    "conditional_entropy_y_given_x",
    "kl_divergence",
    "tilted",
    "xy_tilted",
    "log_sum_tilted",
    "log_sum_xy_tilted",
    "empirical_type",
    "empirical_joint_type",
    "entropy_of_counts",
    "weighted_suffix_entropy",
]

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class JointDistribution:
    """Finite joint pmf over an |X| x |Y| alphabet.

    probs is row-major: probs[x][y].  Entries must be nonnegative and sum to
    one within 1e-12; the constructor then renormalizes exactly so that
    downstream optimizers never see drift.
    """

    alphabet_x: int
    alphabet_y: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (self.alphabet_x, self.alphabet_y):
            raise ValueError(
                f"probs shape {p.shape} does not match "
                f"({self.alphabet_x}, {self.alphabet_y})"
            )
        if self.alphabet_x < 2 or self.alphabet_y < 1:
            raise ValueError("need |X| >= 2 and |Y| >= 1")
        if np.any(p < 0):
            raise ValueError("negative probability entry")
        total = p.sum()
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        p = p / total
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_matrix(cls, probs) -> "JointDistribution":
        p = np.asarray(probs, dtype=float)
        return cls(alphabet_x=p.shape[0], alphabet_y=p.shape[1], probs=p)

    @classmethod
    def from_marginal(cls, px) -> "JointDistribution":
        """Point-to-point source: a marginal pmf wrapped as |Y| = 1."""
        px = np.asarray(px, dtype=float)
        return cls.from_matrix(px.reshape(-1, 1))

    def marginal_x(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def marginal_y(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    def swapped(self) -> "JointDistribution":
        """The same source with the roles of x and y exchanged."""
        return JointDistribution.from_matrix(self.probs.T)

    def is_point_to_point(self) -> bool:
        return self.alphabet_y == 1

    def to_json(self) -> str:
        return json.dumps(
            {
                "alphabet_x": self.alphabet_x,
                "alphabet_y": self.alphabet_y,
                "probs": [list(row) for row in self.probs],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "JointDistribution":
        obj = json.loads(text)
        return cls(
            alphabet_x=int(obj["alphabet_x"]),
            alphabet_y=int(obj["alphabet_y"]),
            probs=np.asarray(obj["probs"], dtype=float),
        )


@dataclass(frozen=True)
class TiltedFamilyPoint:
    """One member of a tilted family: the tilt parameter and the distribution."""

    rho: float
    distribution: JointDistribution


def _xlogx(p: np.ndarray) -> np.ndarray:
    # 0 log 0 = 0 by continuity
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = p[mask] * np.log(p[mask])
    return out


def entropy(d: JointDistribution) -> float:
    """Shannon entropy of the full joint, in nats."""
    return float(-_xlogx(d.probs).sum())


def _entropy_vec(p: np.ndarray) -> float:
    return float(-_xlogx(np.asarray(p, dtype=float)).sum())


def conditional_entropy_x_given_y(d: JointDistribution) -> float:
    """H(x|y) = H(x,y) - H(y)."""
    return entropy(d) - _entropy_vec(d.marginal_y())


def conditional_entropy_y_given_x(d: JointDistribution) -> float:
    return entropy(d) - _entropy_vec(d.marginal_x())


def kl_divergence(q: JointDistribution, p: JointDistribution) -> float:
    """D(q || p) in nats; +inf when q puts mass where p has none."""
    if q.probs.shape != p.probs.shape:
        raise ValueError("alphabet mismatch")
    qf, pf = q.probs.ravel(), p.probs.ravel()
    mask = qf > 0
    if np.any(pf[mask] == 0):
        return math.inf
    return float(np.sum(qf[mask] * (np.log(qf[mask]) - np.log(pf[mask]))))


def _check_rho(rho: float) -> None:
    if rho <= -1:
        raise ValueError(f"rho must be > -1, got {rho}")


def _log_powered(p: np.ndarray, rho: float) -> np.ndarray:
    """log of p^{1/(1+rho)} with zeros mapped to -inf.

    Worked in log space so that rho near -1 (huge exponents) cannot
    underflow.
    """
    with np.errstate(divide="ignore"):
        return np.log(p) / (1.0 + rho)


def _logsumexp(a: np.ndarray, axis=None):
    amax = np.max(a, axis=axis, keepdims=True)
    amax = np.where(np.isfinite(amax), amax, 0.0)
    out = np.log(np.sum(np.exp(a - amax), axis=axis, keepdims=True)) + amax
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


def log_sum_tilted(d: JointDistribution, rho: float) -> float:
    """log sum_{x,y} p(x,y)^{1/(1+rho)}."""
    _check_rho(rho)
    return float(_logsumexp(_log_powered(d.probs, rho)))


def log_sum_xy_tilted(d: JointDistribution, rho: float) -> float:
    """log sum_y [ sum_x p(x,y)^{1/(1+rho)} ]^{1+rho}."""
    _check_rho(rho)
    log_col = _logsumexp(_log_powered(d.probs, rho), axis=0)  # log D(y)
    return float(_logsumexp((1.0 + rho) * log_col))


def tilted(p: JointDistribution, rho: float) -> TiltedFamilyPoint:
    """Exponentially tilted joint: p(x,y)^{1/(1+rho)}, renormalized."""
    _check_rho(rho)
    logp = _log_powered(p.probs, rho)
    logz = _logsumexp(logp)
    probs = np.exp(logp - logz)
    probs[p.probs == 0] = 0.0
    probs /= probs.sum()
    return TiltedFamilyPoint(rho, JointDistribution.from_matrix(probs))


def xy_tilted(p: JointDistribution, rho: float) -> TiltedFamilyPoint:
    """Column-wise tilt with a tilted y-marginal.

    The y-marginal of the result is A(y)/B and the conditional on each
    column is C(x,y)/D(y), where C = p^{1/(1+rho)}, D(y) = sum_x C,
    A(y) = D(y)^{1+rho}, B = sum_y A.
    """
    _check_rho(rho)
    logc = _log_powered(p.probs, rho)
    logd = _logsumexp(logc, axis=0)          # per-column normalizer
    loga = (1.0 + rho) * logd
    logb = _logsumexp(loga)
    with np.errstate(invalid="ignore"):
        logq = (loga - logb) + (logc - logd)
    probs = np.exp(logq)
    probs[p.probs == 0] = 0.0
    # all-zero y columns contribute nothing
    probs[:, np.asarray(p.marginal_y()) == 0] = 0.0
    probs /= probs.sum()
    return TiltedFamilyPoint(rho, JointDistribution.from_matrix(probs))


# ---------------------------------------------------------------------------
# Empirical types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalType:
    """Occurrence counts of symbols (or symbol pairs) over a sample window."""

    counts: dict
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("empty range")
        if sum(self.counts.values()) != self.length:
            raise ValueError("counts do not sum to window length")

    def probability(self, symbol) -> float:
        return self.counts.get(symbol, 0) / self.length

    def entropy(self) -> float:
        return entropy_of_counts(self.counts.values(), self.length)


def entropy_of_counts(counts, total: int) -> float:
    """Entropy of a type given raw counts.

    Counts are sorted before summing so that permuted types produce the
    bit-identical float, which keeps tie-breaking deterministic.
    """
    vals = sorted(c for c in counts if c > 0)
    return float(sum((c / total) * math.log(total / c) for c in vals))


def empirical_type(seq: Sequence, start: int, end: int) -> EmpiricalType:
    """Type of seq[start..end] with 1-based inclusive indices."""
    if not (1 <= start <= end <= len(seq)):
        raise ValueError(f"bad range [{start}, {end}] for length {len(seq)}")
    window = seq[start - 1 : end]
    return EmpiricalType(dict(Counter(window)), end - start + 1)


def empirical_joint_type(x: Sequence, y: Sequence, start: int, end: int) -> EmpiricalType:
    """Joint type of the pair sequence ((x_i, y_i)) over [start, end]."""
    if len(x) != len(y):
        raise ValueError("sequences differ in length")
    if not (1 <= start <= end <= len(x)):
        raise ValueError(f"bad range [{start}, {end}] for length {len(x)}")
    pairs = list(zip(x[start - 1 : end], y[start - 1 : end]))
    return EmpiricalType(dict(Counter(pairs)), end - start + 1)


def _emp_joint_entropy(x, y, start, end) -> float:
    return empirical_joint_type(x, y, start, end).entropy()


def _emp_cond_entropy(x, y, start, end) -> float:
    # H(x|y) = H(x,y) - H(y), on empirical types of the window
    return _emp_joint_entropy(x, y, start, end) - empirical_type(y, start, end).entropy()


def weighted_suffix_entropy(x: Sequence, y: Sequence, l: int, k: int, n: int) -> float:
    """Weighted empirical entropy of the disputed suffixes of a pair.

    l and k are the 1-based positions where a candidate pair first diverges
    in x and in y; l = n+1 (resp. k = n+1) means no divergence in that
    stream.  The value mixes a conditional entropy over the window where
    only one stream is disputed with a joint entropy over the window where
    both are.
    """
    if len(x) != n or len(y) != n:
        raise ValueError("sequences must have length n")
    if not (1 <= l <= n + 1 and 1 <= k <= n + 1):
        raise ValueError(f"indices l={l}, k={k} out of [1, {n + 1}]")
    if l == k:
        if l == n + 1:
            return 0.0
        return _emp_joint_entropy(x, y, l, n)
    if l < k:
        span = n + 1 - l
        out = ((k - l) / span) * _emp_cond_entropy(x, y, l, k - 1)
        if k <= n:
            out += ((n + 1 - k) / span) * _emp_joint_entropy(x, y, k, n)
        return out
    # l > k: roles of the streams swap
    span = n + 1 - k
    out = ((l - k) / span) * _emp_cond_entropy(y, x, k, l - 1)
    if l <= n:
        out += ((n + 1 - l) / span) * _emp_joint_entropy(x, y, l, n)
    return out
