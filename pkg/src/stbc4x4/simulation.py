"""Seeded Monte Carlo codeword error rate over quasi-static Rayleigh fading.

Randomness is counter based: every trial consumes a fixed-width block of
uniforms from a Philox stream keyed by ``(master_seed, snr point)``, and
trial ``t`` starts at block ``t``. A trial's channel, symbols and noise are
therefore fixed by ``(master_seed, point, t)`` alone, whatever the batch
size or worker count. Early stopping cuts at the exact trial where the
error target is reached, so the counts are deterministic too.

SNR is per receive antenna: ``SNR = N_T * E_s / N0``.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ._kernels import std_normal
from .channel import equivalent_channel_batch
from .code import (Constellation, LinearDispersionCode, assemble_codeword,
                   hurwitz_radon_check, make_proposed_code, qam_constellation)
from .detection import (MAX_EXHAUSTIVE, ORTHOGONAL_SPLIT,
                        conditional_ml_decode_batch,
                        exhaustive_ml_decode_batch)

__all__ = [
    "SimConfig",
    "CerPoint",
    "TrialBatch",
    "snr_to_n0",
    "point_key",
    "trial_batch",
    "run_cer",
    "AgreementReport",
    "decoder_agreement",
    "parse_config",
    "load_config",
    "format_cer_csv",
    "write_cer_csv",
]

DECODERS = ("conditional", "exhaustive")


@dataclass(frozen=True)
class SimConfig:
    m: int = 4
    nr: int = 1
    snr_db_list: tuple[float, ...] = (6.0, 8.0, 10.0, 12.0, 14.0, 16.0)
    max_trials: int = 1_000_000
    target_errors: int = 200
    master_seed: int = 0
    decoder: str = "conditional"
    batch_size: int = 4096

    def __post_init__(self):
        object.__setattr__(self, "snr_db_list",
                           tuple(float(v) for v in self.snr_db_list))
        qam_constellation(self.m)
        if self.nr < 1:
            raise ValueError(f"nr must be >= 1, got {self.nr}")
        if not self.snr_db_list:
            raise ValueError("snr_db_list is empty")
        if any(math.isnan(v) for v in self.snr_db_list):
            raise ValueError("snr_db_list contains NaN")
        if any(b <= a for a, b in zip(self.snr_db_list, self.snr_db_list[1:])):
            raise ValueError(
                f"snr_db_list must be strictly increasing: {self.snr_db_list}")
        if not self.max_trials >= self.target_errors >= 1:
            raise ValueError(
                "need max_trials >= target_errors >= 1, got "
                f"max_trials={self.max_trials}, "
                f"target_errors={self.target_errors}")
        if self.decoder not in DECODERS:
            raise ValueError(
                f"decoder must be one of {DECODERS}, got {self.decoder!r}")
        if self.decoder == "exhaustive" and self.m ** 4 > MAX_EXHAUSTIVE:
            raise ValueError(
                f"exhaustive decoding of {self.m}-QAM exceeds the "
                "enumeration guard")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class CerPoint:
    snr_db: float
    trials: int
    errors: int
    cer: float
    metric_evals_total: int


def snr_to_n0(snr_db: float, c: Constellation, nt: int = 4) -> float:
    """Noise power for a given SNR per receive antenna.

    >>> snr_to_n0(10.0, qam_constellation(4), 4)
    0.8
    """
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise ValueError(f"snr_db must be a number below +inf, got {snr_db}")
    if snr_db == math.inf:
        return 0.0
    return nt * c.avg_energy / 10.0 ** (snr_db / 10.0)


def point_key(master_seed: int, point: int) -> np.ndarray:
    """128-bit Philox key for one SNR point."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(point),)
                                  ).generate_state(2, np.uint64)


def _width(code: LinearDispersionCode, nr: int) -> int:
    w = 2 * code.nt * nr + 2 * code.t * nr + code.n_real
    return -(-w // 4) * 4


def _check_structural_orthogonality(code: LinearDispersionCode) -> None:
    # Pairwise Hurwitz-Radon identities make the sliced columns of the
    # equivalent channel real-orthogonal for every H.
    ortho = ORTHOGONAL_SPLIT[0]
    for i in ortho:
        for j in ortho:
            if i < j and not hurwitz_radon_check(code, i, j, tol=1e-12):
                raise ValueError(
                    f"weight matrices {i + 1} and {j + 1} violate the "
                    "Hurwitz-Radon identity; conditional decoding would "
                    "not be ML")


@dataclass(frozen=True)
class TrialBatch:
    s: np.ndarray          # (B, 2K) transmitted symbols
    s_hat: np.ndarray      # (B, 2K) decisions
    metric: np.ndarray     # (B,)
    runner_up: np.ndarray | None
    evals: int             # metric evaluations per trial


def trial_batch(code: LinearDispersionCode, c: Constellation, nr: int,
                n0: float, key, start: int, count: int,
                decoder: str = "conditional",
                engine: str = "numpy") -> TrialBatch:
    """Simulate trials ``start .. start+count-1`` of one stream.

    ``engine="numba"`` runs the conditional decoder through the compiled
    loop; both engines consume the same uniforms.
    """
    width = _width(code, nr)
    bg = np.random.Philox(key=key, counter=[start * width // 4, 0, 0, 0])
    u = np.random.Generator(bg).random((count, width))

    if engine == "numba":
        if decoder != "conditional":
            raise ValueError("the numba engine only runs the conditional decoder")
        from ._kernels import conditional_trials, sparse_betas
        _check_structural_orthogonality(code)
        ortho, cond = (np.array(v, dtype=np.int64) for v in ORTHOGONAL_SPLIT)
        cand = np.array([(a, b) for a in c.pam for b in c.pam], dtype=float)
        s, s_hat, metric = conditional_trials(
            u, *sparse_betas(code.betas), code.t, code.nt,
            np.asarray(c.pam, dtype=float), cand, ortho, cond, nr, float(n0))
        return TrialBatch(s, s_hat, metric, None, len(cand))
    if engine != "numpy":
        raise ValueError(f"unknown engine {engine!r}")

    nh = code.nt * nr
    nw = code.t * nr
    g = std_normal(u[:, :2 * (nh + nw)])
    h = np.sqrt(0.5) * (g[:, :nh] + 1j * g[:, nh:2 * nh])
    h = h.reshape(count, code.nt, nr)
    w = np.sqrt(n0 / 2) * (g[:, 2 * nh:2 * nh + nw] + 1j * g[:, 2 * nh + nw:])
    w = w.reshape(count, nr, code.t)

    side = c.side
    off = 2 * (nh + nw)
    idx = np.minimum((u[:, off:off + code.n_real] * side).astype(int), side - 1)
    s = np.asarray(c.pam, dtype=float)[idx]

    x = assemble_codeword(code, s)                         # (B, T, N_T)
    rx = (x @ h).transpose(0, 2, 1) + w                    # (B, N_R, T)
    r = rx.reshape(count, nr * code.t)                     # column-major vec
    hcal = equivalent_channel_batch(code.betas, h)

    if decoder == "conditional":
        norm_sq = np.sum(np.abs(h) ** 2, axis=(1, 2))
        s_hat, metric, evals = conditional_ml_decode_batch(hcal, r, norm_sq, c)
        second = None
    elif decoder == "exhaustive":
        s_hat, metric, second, evals = exhaustive_ml_decode_batch(hcal, r, c)
    else:
        raise ValueError(f"unknown decoder {decoder!r}")
    return TrialBatch(s, s_hat, metric, second, evals)


def _run_point(config: SimConfig, code, c, point: int, snr_db: float,
               pool, workers: int, engine: str) -> CerPoint:
    n0 = snr_to_n0(snr_db, c, code.nt)
    key = point_key(config.master_seed, point)
    bsz = config.batch_size

    def work(start):
        count = min(bsz, config.max_trials - start)
        tb = trial_batch(code, c, config.nr, n0, key, start, count,
                         config.decoder, engine)
        return np.any(tb.s_hat != tb.s, axis=1), tb.evals

    trials = errors = evals = 0
    next_start = 0
    done = False
    while not done and next_start < config.max_trials:
        starts = range(next_start, config.max_trials, bsz)[:workers]
        next_start = starts[-1] + bsz
        results = pool.map(work, starts) if pool else map(work, starts)
        for wrong, evals in results:
            cum = errors + np.cumsum(wrong)
            hit = np.flatnonzero(cum >= config.target_errors)
            if hit.size:
                trials += int(hit[0]) + 1
                errors = config.target_errors
                done = True
                break
            trials += len(wrong)
            errors = int(cum[-1])
    return CerPoint(snr_db, trials, errors, errors / trials, trials * evals)


def run_cer(config: SimConfig, code: LinearDispersionCode | None = None,
            workers: int = 1, engine: str = "auto") -> list[CerPoint]:
    """Codeword error rate at each SNR of ``config``.

    Each point runs until ``target_errors`` codeword errors or
    ``max_trials`` trials, whichever comes first. ``workers`` only changes
    speed, never results. ``engine="auto"`` uses the compiled loop for the
    conditional decoder on the proposed code and numpy otherwise.
    """
    custom = code is not None
    code = code or make_proposed_code()
    c = qam_constellation(config.m)
    if engine == "auto":
        engine = ("numba" if config.decoder == "conditional" and not custom
                  else "numpy")
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return [_run_point(config, code, c, i, snr, pool, workers, engine)
                    for i, snr in enumerate(config.snr_db_list)]
    return [_run_point(config, code, c, i, snr, None, 1, engine)
            for i, snr in enumerate(config.snr_db_list)]


@dataclass(frozen=True)
class AgreementReport:
    """Conditional versus exhaustive ML decisions on identical trials.

    A trial is a tie when the exhaustive top-two metrics differ by at most
    ``tie_tol``; ties are counted apart from the agreement statistic.
    """

    trials: int
    ties: int
    agree_non_tie: int
    disagree_non_tie: int
    disagree_tie: int
    conditional_evals: int
    exhaustive_evals: int
    m: int

    @property
    def non_tie(self) -> int:
        return self.trials - self.ties

    @property
    def agreement_rate(self) -> float:
        return self.agree_non_tie / self.non_tie if self.non_tie else 1.0


def decoder_agreement(m: int = 4, nr: int = 1, trials: int = 10_000,
                      n0_list=(0.5, 2.0, 8.0), seed: int = 0,
                      tie_tol: float = 1e-9,
                      code: LinearDispersionCode | None = None,
                      batch_size: int = 2048) -> AgreementReport:
    """Run both decoders on the same seeded trials.

    Trials are split as evenly as possible across ``n0_list``; noise level
    ``i`` draws from stream point ``i``.
    """
    code = code or make_proposed_code()
    c = qam_constellation(m)
    n_levels = len(n0_list)
    ties = agree = disagree = disagree_tie = 0
    ev_c = ev_e = 0
    for i, n0 in enumerate(n0_list):
        share = trials // n_levels + (i < trials % n_levels)
        key = point_key(seed, i)
        for start in range(0, share, batch_size):
            count = min(batch_size, share - start)
            tc = trial_batch(code, c, nr, n0, key, start, count,
                             "conditional", "numpy")
            te = trial_batch(code, c, nr, n0, key, start, count,
                             "exhaustive", "numpy")
            same = np.all(tc.s_hat == te.s_hat, axis=1)
            tie = (te.runner_up - te.metric) <= tie_tol
            ties += int(tie.sum())
            agree += int((same & ~tie).sum())
            disagree += int((~same & ~tie).sum())
            disagree_tie += int((~same & tie).sum())
            ev_c, ev_e = tc.evals, te.evals
    return AgreementReport(trials, ties, agree, disagree, disagree_tie,
                           ev_c, ev_e, m)


# -- config and CSV --------------------------------------------------------

def parse_config(text: str) -> SimConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    ``snr_db_list`` is comma separated.
    """
    known = {f.name: f.type for f in fields(SimConfig)}
    values = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected 'key = value', got {raw!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in known:
            raise ValueError(f"line {n}: unknown key {key!r}")
        if key == "snr_db_list":
            values[key] = tuple(float(v) for v in val.split(",") if v.strip())
        elif key == "decoder":
            values[key] = val
        else:
            values[key] = int(val)
    return SimConfig(**values)


def load_config(path) -> SimConfig:
    return parse_config(Path(path).read_text())


def format_cer_csv(points) -> str:
    buf = io.StringIO()
    buf.write("snr_db,trials,errors,cer,metric_evals_total\n")
    for p in points:
        buf.write(f"{p.snr_db!r},{p.trials},{p.errors},{p.cer!r},"
                  f"{p.metric_evals_total}\n")
    return buf.getvalue()


def write_cer_csv(points, path) -> None:
    Path(path).write_text(format_cer_csv(points))
