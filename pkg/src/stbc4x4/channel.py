"""Quasi-static Rayleigh MIMO channel and the equivalent real-symbol model.

The matrix model ``R = X H + W`` (``X`` is ``T x N_T``, ``H`` is
``N_T x N_R``) is vectorized column by column into ``r = Hcal s + w``,
where column ``k`` of ``Hcal`` stacks ``beta_k h_i`` over receive antennas.
Complex Gaussians use variance 1/2 per real dimension for CN(0, 1), and
``N0 / 2`` per real dimension for the noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .code import LinearDispersionCode

__all__ = [
    "ChannelRealization",
    "EquivalentChannel",
    "stream_rng",
    "complex_normal",
    "sample_rayleigh",
    "equivalent_channel",
    "equivalent_channel_batch",
    "vec",
    "transmit",
]


def stream_rng(seed: int, *index: int) -> np.random.Generator:
    """Generator fully determined by ``seed`` and a stream index tuple."""
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in index)))


def complex_normal(rng: np.random.Generator, shape, var: float = 1.0):
    """Circularly-symmetric complex Gaussian samples with variance ``var``."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def vec(a: np.ndarray) -> np.ndarray:
    """Stack the columns of ``a`` (column-major flatten)."""
    return np.asarray(a).ravel(order="F")


@dataclass(frozen=True)
class ChannelRealization:
    """One ``N_T x N_R`` fading matrix, constant over a codeword."""

    h: np.ndarray

    @property
    def nt(self) -> int:
        return self.h.shape[0]

    @property
    def nr(self) -> int:
        return self.h.shape[1]

    @property
    def fro_norm_sq(self) -> float:
        """||vec(H)||^2."""
        return float(np.sum(np.abs(self.h) ** 2))


def sample_rayleigh(nt: int, nr: int, seed) -> ChannelRealization:
    """Draw H with i.i.d. CN(0, 1) entries.

    ``seed`` is an int (or a ``Generator``, which is then consumed).
    """
    if nt < 1 or nr < 1:
        raise ValueError(f"antenna counts must be >= 1, got nt={nt}, nr={nr}")
    rng = seed if isinstance(seed, np.random.Generator) else stream_rng(seed)
    return ChannelRealization(complex_normal(rng, (nt, nr)))


@dataclass(frozen=True)
class EquivalentChannel:
    """``(T*N_R) x 2K`` matrix ``hcal`` plus ``||vec(H)||^2``."""

    hcal: np.ndarray
    fro_norm_sq: float

    def column(self, k: int) -> np.ndarray:
        return self.hcal[:, k]


def _as_h(h) -> np.ndarray:
    return h.h if isinstance(h, ChannelRealization) else np.asarray(h)


def equivalent_channel_batch(betas: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Equivalent channels for a batch of ``H`` of shape ``(B, N_T, N_R)``.

    Returns shape ``(B, N_R*T, 2K)``.
    """
    n_sym, t, nt = betas.shape
    if h.ndim != 3 or h.shape[1] != nt:
        raise ValueError(
            f"channel batch must be (B, {nt}, N_R), got {h.shape}")
    b, _, nr = h.shape
    out = np.einsum("ktn,bni->bitk", betas, h)
    return out.reshape(b, nr * t, n_sym)


def equivalent_channel(code: LinearDispersionCode, h) -> EquivalentChannel:
    hm = _as_h(h)
    if hm.ndim != 2 or hm.shape[0] != code.nt:
        raise ValueError(
            f"channel must have {code.nt} rows (transmit antennas), "
            f"got shape {hm.shape}")
    hcal = equivalent_channel_batch(code.betas, hm[None])[0]
    return EquivalentChannel(hcal, float(np.sum(np.abs(hm) ** 2)))


def transmit(code: LinearDispersionCode, s, h, n0: float, seed) -> np.ndarray:
    """Received vector ``r = Hcal s + w``, ``w`` i.i.d. CN(0, n0).

    This is ``vec(X(s) H + W)`` evaluated through the equivalent channel, so
    at ``n0 = 0`` the result is bit-identical to ``hcal @ s``.
    """
    if n0 < 0:
        raise ValueError(f"noise power must be >= 0, got {n0}")
    eq = equivalent_channel(code, h)
    s = np.asarray(s)
    if s.shape != (code.n_real,):
        raise ValueError(
            f"symbol vector must have length {code.n_real}, "
            f"got shape {s.shape}")
    r = eq.hcal @ s
    if n0 > 0:
        rng = seed if isinstance(seed, np.random.Generator) else stream_rng(seed)
        t, nr = code.t, eq.hcal.shape[0] // code.t
        # noise drawn as a T x N_R matrix, then vectorized like R
        r = r + vec(complex_normal(rng, (t, nr), n0))
    return r
