"""PAM slicing, conditional ML detection and the exhaustive ML baseline.

For the proposed code the columns ``0..5`` of the equivalent channel are
mutually real-orthogonal, so once ``(x_7, x_8)`` is fixed the remaining six
real symbols decouple and are each recovered by an O(1) slicer. The
conditional decoder therefore evaluates only M joint metrics instead of
``M**4``.

Both decoders break ties toward the lexicographically first candidate, with
PAM levels in ascending order and the lowest symbol index most significant.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import EquivalentChannel
from .code import Constellation

__all__ = [
    "DecodeResult",
    "ORTHOGONAL_SPLIT",
    "pam_slice",
    "pam_slice_array",
    "conditional_ml_decode",
    "conditional_ml_decode_batch",
    "exhaustive_ml_decode",
    "exhaustive_ml_decode_batch",
    "MAX_EXHAUSTIVE",
]

#: (orthogonal symbols, conditioned symbols) for the proposed code, 0-based.
ORTHOGONAL_SPLIT = ((0, 1, 2, 3, 4, 5), (6, 7))

MAX_EXHAUSTIVE = 2 ** 24
ORTHO_TOL = 1e-8

_CHUNK = 4096


@dataclass(frozen=True)
class DecodeResult:
    """Decoder output.

    ``metric`` is the Euclidean distance ``||r - Hcal s_hat||``.
    ``runner_up`` is the second-best metric when the decoder tracks it
    (exhaustive search only), otherwise ``None``.
    """

    s_hat: np.ndarray
    metric: float
    metric_evals: int
    runner_up: float | None = None


def pam_slice(correlation: float, channel_norm_sq: float, m: int) -> int:
    """Nearest PAM point to ``correlation / channel_norm_sq``.

    Implements ``sign(c) * min(|2 round((c/n - 1)/2) + 1|, sqrt(M) - 1)``
    with ``sign(0) = 1``.

    >>> pam_slice(2.6, 1.0, 16)
    3
    >>> pam_slice(-0.2, 1.0, 16)
    -1
    """
    if not channel_norm_sq > 0:
        raise ValueError(
            f"channel norm must be positive, got {channel_norm_sq}")
    side = math.isqrt(int(m))
    if side * side != m:
        raise ValueError(f"QAM size {m} is not a perfect square")
    v = correlation / channel_norm_sq
    odd = abs(2 * round((v - 1) / 2) + 1)
    sign = 1 if correlation >= 0 else -1
    return sign * min(odd, side - 1)


def pam_slice_array(values, side: int) -> np.ndarray:
    """Vectorized slicer on already-normalized values; returns floats."""
    v = np.asarray(values, dtype=float)
    odd = np.abs(2.0 * np.round((v - 1.0) / 2.0) + 1.0)
    return np.where(v >= 0, 1.0, -1.0) * np.minimum(odd, side - 1)


def _candidates(pam, n: int) -> np.ndarray:
    return np.array(list(itertools.product(pam, repeat=n)), dtype=float)


def _check_orthogonal(hcal, norm_sq, ortho):
    h = hcal[:, :, ortho]
    g = np.einsum("bnk,bnl->bkl", h.conj(), h).real
    idx = np.arange(len(ortho))
    g[:, idx, idx] = 0.0
    worst = np.max(np.abs(g), axis=(1, 2)) / norm_sq
    if np.any(worst > ORTHO_TOL):
        raise ValueError(
            "equivalent channel columns "
            f"{[k + 1 for k in ortho]} are not real-orthogonal "
            f"(relative deviation {worst.max():.3g} > {ORTHO_TOL}); "
            "conditional decoding would not be ML")


def conditional_ml_decode_batch(hcal, r, norm_sq, c: Constellation,
                                split=ORTHOGONAL_SPLIT, check=True):
    """Conditional ML decoding of a batch.

    Parameters
    ----------
    hcal : ndarray, shape (B, N, 2K)
    r : ndarray, shape (B, N)
    norm_sq : ndarray, shape (B,)
        ``||vec(H)||^2`` per trial.
    c : Constellation
    split : pair of index tuples
        Real-orthogonal symbols, then the symbols enumerated over.

    Returns
    -------
    s_hat : ndarray, shape (B, 2K)
    metric : ndarray, shape (B,)
    evals : int
        Metric evaluations per trial (number of candidates).
    """
    hcal = np.asarray(hcal)
    r = np.asarray(r)
    norm_sq = np.asarray(norm_sq, dtype=float)
    ortho, cond = (list(s) for s in split)
    if hcal.shape[:2] != r.shape:
        raise ValueError(
            f"received batch {r.shape} does not match channel {hcal.shape}")
    if check:
        _check_orthogonal(hcal, norm_sq, ortho)

    cand = _candidates(c.pam, len(cond))                      # (C, n2)
    h_o = hcal[:, :, ortho]                                   # (B, N, n1)
    z = r[:, :, None] - hcal[:, :, cond] @ cand.T             # (B, N, C)
    corr = np.einsum("bnk,bnc->bkc", h_o.conj(), z).real      # (B, n1, C)
    x_o = pam_slice_array(corr / norm_sq[:, None, None], c.side)
    resid = z - h_o @ x_o
    dist = np.sqrt(np.sum(np.abs(resid) ** 2, axis=1))        # (B, C)
    best = np.argmin(dist, axis=1)
    rows = np.arange(hcal.shape[0])

    s_hat = np.empty((hcal.shape[0], hcal.shape[2]))
    s_hat[:, ortho] = x_o[rows, :, best]
    s_hat[:, cond] = cand[best]
    return s_hat, dist[rows, best], len(cand)


def conditional_ml_decode(hcal: EquivalentChannel, r,
                          c: Constellation) -> DecodeResult:
    """Decode one received vector with M metric evaluations.

    For each candidate ``(x_7, x_8)`` the interference of those two symbols
    is removed, ``x_1 ... x_6`` are sliced independently from the matched
    filter outputs, and the joint distance is computed. The best candidate
    wins.

    Raises
    ------
    ValueError
        If columns 1..6 of ``hcal`` are not real-orthogonal to within
        ``1e-8 * ||vec(H)||^2``.
    """
    s_hat, metric, evals = conditional_ml_decode_batch(
        hcal.hcal[None], np.asarray(r)[None], np.array([hcal.fro_norm_sq]), c)
    return DecodeResult(s_hat[0], float(metric[0]), evals)


def exhaustive_ml_decode_batch(hcal, r, c: Constellation):
    """Brute-force ML over all ``M**K`` symbol vectors for a batch.

    Returns ``(s_hat, metric, runner_up, evals)``.
    """
    hcal = np.asarray(hcal)
    r = np.asarray(r)
    if hcal.shape[:2] != r.shape:
        raise ValueError(
            f"received batch {r.shape} does not match channel {hcal.shape}")
    n_real = hcal.shape[2]
    total = len(c.pam) ** n_real
    if total > MAX_EXHAUSTIVE:
        raise ValueError(
            f"exhaustive search over {total} candidates exceeds the "
            f"guard of {MAX_EXHAUSTIVE}")
    b = hcal.shape[0]
    rows = np.arange(b)
    best = np.full(b, np.inf)
    second = np.full(b, np.inf)
    best_s = np.zeros((b, n_real))
    pam = np.asarray(c.pam, dtype=float)

    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        digits = (idx[:, None] // (len(pam) ** np.arange(n_real - 1, -1, -1))
                  ) % len(pam)
        cand = pam[digits]                                     # (C, 2K)
        dist = np.sqrt(np.sum(
            np.abs(r[:, :, None] - hcal @ cand.T) ** 2, axis=1))
        j = np.argmin(dist, axis=1)
        m0 = dist[rows, j]
        if dist.shape[1] > 1:
            two = np.partition(dist, 1, axis=1)[:, :2]
        else:
            two = np.column_stack([m0, np.full(b, np.inf)])
        merged = np.sort(np.column_stack([best, second, two]), axis=1)
        improve = m0 < best
        best_s[improve] = cand[j[improve]]
        best = merged[:, 0]
        second = merged[:, 1]
    return best_s, best, second, total


def exhaustive_ml_decode(hcal: EquivalentChannel, r,
                         c: Constellation) -> DecodeResult:
    """ML decoding by enumerating every codeword."""
    s_hat, metric, second, evals = exhaustive_ml_decode_batch(
        hcal.hcal[None], np.asarray(r)[None], c)
    return DecodeResult(s_hat[0], float(metric[0]), evals, float(second[0]))

