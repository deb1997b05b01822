"""Coding-gain and PAPR analysis.

Symbol differences of unnormalized QAM are even integers, ``dx_i = 2 n_i``.
The minimum determinant is ``min |det X(dx)|`` over nonzero difference
vectors; the code has the nonvanishing-determinant (NVD) property when this
minimum does not shrink as the constellation grows.

For the proposed code the determinant has the closed form::

    |det X(dx)| = | s1**2 + exp(2j phi) b + exp(4j phi) s2**2 |

with ``s1 = sum(dx[0:6]**2)``, ``s2 = dx[6]**2 + dx[7]**2`` and ``b`` built
from the six two-square products ``a_i`` below. All of ``s1, s2, a_i, b``
and the discriminant are computed in exact int64 arithmetic. When
``s1 == s2 == s`` the closed form collapses to ``|2 s**2 cos(2 phi) + b|``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import stream_rng
from .code import (DEFAULT_PHI, Constellation, LinearDispersionCode,
                   make_proposed_code)

__all__ = [
    "MinDetReport",
    "PaprReport",
    "NvdCaseRecord",
    "DeterminantTerms",
    "NvdReport",
    "PhiSweep",
    "MAX_SPREAD",
    "abs_det_batch",
    "det_difference",
    "determinant_terms",
    "det_closed_form",
    "det_closed_form_batch",
    "nvd_case_record",
    "lattice_vectors",
    "min_det_search",
    "min_det_sample",
    "papr",
    "papr_sampled",
    "diophantine_gap",
    "verify_nvd_appendix",
    "phi_sweep",
]

MAX_SPREAD = 6
NVD_BOUND = 16
_CHUNK = 1 << 16
_REL_TOL = 1e-8


# -- determinants ----------------------------------------------------------

def abs_det_batch(code: LinearDispersionCode, ds) -> np.ndarray:
    """``|det X(ds)|`` for a batch of difference vectors, shape (N, 2K)."""
    if code.t != code.nt:
        raise ValueError(f"determinant needs a square code, got "
                         f"{code.t}x{code.nt}")
    ds = np.asarray(ds, dtype=float)
    flat = code.betas.reshape(code.n_real, -1)
    x = (ds @ flat).reshape(-1, code.t, code.nt)
    return np.abs(np.linalg.det(x))


def det_difference(code: LinearDispersionCode, ds) -> float:
    ds = np.asarray(ds)
    if ds.shape != (code.n_real,):
        raise ValueError(f"difference vector must have length {code.n_real}")
    return float(abs_det_batch(code, ds[None])[0])


@dataclass(frozen=True)
class DeterminantTerms:
    """Integer quantities of the closed-form determinant, vectorized."""

    dx: np.ndarray           # (N, 8)
    sigma1: np.ndarray       # (N,)
    sigma2: np.ndarray
    a: np.ndarray            # (N, 6)
    b: np.ndarray
    b_expanded: np.ndarray   # 2 s1 s2 - 4 (a1^2 + a2^2 + a3^2)
    discriminant: np.ndarray


def determinant_terms(ds) -> DeterminantTerms:
    dx = np.atleast_2d(np.asarray(ds))
    if dx.shape[1] != 8:
        raise ValueError("difference vectors must have 8 entries")
    if not np.all(dx == np.round(dx)):
        raise ValueError("difference vectors must be integers")
    dx = dx.astype(np.int64)
    x1, x2, x3, x4, x5, x6, x7, x8 = dx.T
    s1 = np.sum(dx[:, :6] ** 2, axis=1)
    s2 = x7 ** 2 + x8 ** 2
    a = np.column_stack([
        x7 * x2 - x8 * x6,
        x7 * x6 + x8 * x2,
        x7 * x4 - x8 * x3,
        x7 * x3 + x8 * x4,
        x8 * x1 - x7 * x5,
        x7 * x1 + x8 * x5,
    ])
    a_sq = a ** 2
    head = a_sq[:, :3].sum(axis=1)
    b = 2 * (a_sq.sum(axis=1) - 2 * head)
    b_expanded = 2 * s1 * s2 - 4 * head
    disc = b ** 2 - 4 * s1 ** 2 * s2 ** 2
    return DeterminantTerms(dx, s1, s2, a, b, b_expanded, disc)


def _closed_form(s1, s2, b, phi):
    w = np.exp(2j * phi)
    return np.abs(s1.astype(float) ** 2 + w * b + w * w * s2.astype(float) ** 2)


def det_closed_form_batch(ds, phi: float = DEFAULT_PHI) -> np.ndarray:
    q = determinant_terms(ds)
    return _closed_form(q.sigma1, q.sigma2, q.b, phi)


def det_closed_form(ds, phi: float = DEFAULT_PHI) -> float:
    """Closed-form ``|det X(ds)|`` of the proposed code (8-entry ``ds``)."""
    ds = np.asarray(ds)
    if ds.shape != (8,):
        raise ValueError("difference vector must have 8 entries")
    return float(det_closed_form_batch(ds[None], phi)[0])


@dataclass(frozen=True)
class NvdCaseRecord:
    sigma1: int
    sigma2: int
    a: tuple[int, ...]
    b: int
    discriminant: int
    det_direct: float
    det_closed: float

    @property
    def root_moduli(self) -> tuple[float, float] | None:
        """Moduli of the roots of ``s2^2 x^2 + b x + s1^2``."""
        if self.sigma2 == 0:
            return None
        s1, s2, b = float(self.sigma1), float(self.sigma2), float(self.b)
        im = math.sqrt(max(4 * s1 * s1 * s2 * s2 - b * b, 0.0))
        roots = [complex(-b, sgn * im) / (2 * s2 * s2) for sgn in (1, -1)]
        return abs(roots[0]), abs(roots[1])


def nvd_case_record(ds, phi: float = DEFAULT_PHI,
                    code: LinearDispersionCode | None = None) -> NvdCaseRecord:
    code = code or make_proposed_code(phi)
    q = determinant_terms(ds)
    return NvdCaseRecord(
        sigma1=int(q.sigma1[0]), sigma2=int(q.sigma2[0]),
        a=tuple(int(v) for v in q.a[0]), b=int(q.b[0]),
        discriminant=int(q.discriminant[0]),
        det_direct=det_difference(code, np.asarray(ds)),
        det_closed=float(_closed_form(q.sigma1, q.sigma2, q.b, phi)[0]),
    )


# -- lattice search --------------------------------------------------------

def lattice_vectors(spread: int, start: int, stop: int, dim: int = 8):
    """Lattice points with flat indices ``start <= i < stop``.

    Entries range over the even integers in ``[-spread, spread]``; index 0 is
    the all ``-spread`` vector and the first coordinate is most significant,
    so index order is lexicographic.
    """
    n = spread + 1
    idx = np.arange(start, stop, dtype=np.int64)
    powers = n ** np.arange(dim - 1, -1, -1, dtype=np.int64)
    digits = (idx[:, None] // powers) % n
    return (2 * digits - spread).astype(np.int64)


@dataclass(frozen=True)
class MinDetReport:
    """Result of a minimum-determinant search.

    ``next_level`` is the smallest ``|det|`` strictly above the minimum; it
    separates angles that tie on the minimum alone.
    """

    min_abs_det: float
    argmin: np.ndarray
    lattice_spread: int
    count_examined: int
    next_level: float | None = None
    phi: float | None = None


def _check_spread(spread, limit=MAX_SPREAD):
    if spread not in range(2, limit + 1, 2):
        hint = (" use min_det_sample() for larger lattices"
                if spread > limit else "")
        raise ValueError(
            f"spread must be an even integer in [2, {limit}], got {spread};"
            + hint)


def min_det_search(code: LinearDispersionCode, spread: int,
                   workers: int = 1, prune: bool = True) -> MinDetReport:
    """Exhaustive minimum ``|det X(ds)|`` over the nonzero difference lattice.

    With ``prune`` only vectors whose first nonzero entry is positive are
    visited (``|det|`` is invariant under ``ds -> -ds``). The reported argmin
    is the lexicographically smallest visited vector attaining the minimum.
    """
    _check_spread(spread)
    dim = code.n_real
    total = (spread + 1) ** dim
    center = (total - 1) // 2
    start = center + 1 if prune else 0
    bounds = [(lo, min(lo + _CHUNK, total))
              for lo in range(start, total, _CHUNK)]

    def work(lohi):
        lo, hi = lohi
        ds = lattice_vectors(spread, lo, hi, dim)
        d = abs_det_batch(code, ds)
        if not prune and lo <= center < hi:
            d[center - lo] = np.inf
        return d

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            dets = np.concatenate(list(pool.map(work, bounds)))
    else:
        dets = np.concatenate([work(b) for b in bounds])

    best = float(dets.min())
    tol = _REL_TOL * max(best, 1.0)
    at_min = dets <= best + tol
    first = int(np.argmax(at_min))
    above = dets[~at_min]
    return MinDetReport(
        min_abs_det=best,
        argmin=lattice_vectors(spread, start + first, start + first + 1, dim)[0],
        lattice_spread=spread,
        count_examined=len(dets) - (0 if prune else 1),
        next_level=float(above.min()) if above.size else None,
        phi=code.phi,
    )


def min_det_sample(code: LinearDispersionCode, spread: int, n_samples: int,
                   seed: int = 0) -> MinDetReport:
    """Minimum ``|det|`` over ``n_samples`` random nonzero lattice points.

    For lattices too large to enumerate (e.g. 64-QAM differences, spread 14).
    Deterministic in ``seed``; ties keep the first sample drawn.
    """
    if spread < 2 or spread % 2:
        raise ValueError(f"spread must be a positive even integer, got {spread}")
    rng = stream_rng(seed)
    best, arg, done = np.inf, None, 0
    while done < n_samples:
        n = min(_CHUNK * 4, n_samples - done)
        ds = 2 * rng.integers(-(spread // 2), spread // 2 + 1,
                              size=(n, code.n_real))
        d = abs_det_batch(code, ds)
        d[~ds.any(axis=1)] = np.inf
        j = int(np.argmin(d))
        if d[j] < best:
            best, arg = float(d[j]), ds[j]
        done += n
    return MinDetReport(best, arg, spread, n_samples, phi=code.phi)


# -- PAPR ------------------------------------------------------------------

@dataclass(frozen=True)
class PaprReport:
    papr_db: np.ndarray      # one value per transmit antenna
    constellation_m: int

    @property
    def value_db(self) -> float:
        return float(np.max(self.papr_db))


def papr(code: LinearDispersionCode, c: Constellation) -> PaprReport:
    """Peak-to-average power per transmit antenna.

    The peak of each codeword slot is found by enumerating every assignment
    of the real symbols that feed it; the average uses the symbol energy
    ``E[x**2]`` of the PAM alphabet (symbols are zero mean and independent).
    """
    pam = np.asarray(c.pam, dtype=float)
    ex2 = float(np.mean(pam ** 2))
    peak = np.zeros((code.t, code.nt))
    mean = np.zeros((code.t, code.nt))
    for t in range(code.t):
        for n in range(code.nt):
            w = code.betas[:, t, n]
            used = np.flatnonzero(np.abs(w) > 1e-12)
            if len(pam) ** len(used) > 1 << 22:
                raise ValueError(
                    f"slot ({t}, {n}) mixes {len(used)} real symbols; "
                    "peak enumeration is too large")
            if used.size:
                combos = np.array(list(itertools.product(pam,
                                                         repeat=len(used))))
                peak[t, n] = np.max(np.abs(combos @ w[used]) ** 2)
            mean[t, n] = ex2 * np.sum(np.abs(w) ** 2)
    avg = mean.mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = peak.max(axis=0) / avg
    return PaprReport(10 * np.log10(ratio), c.m)


def papr_sampled(code: LinearDispersionCode, c: Constellation,
                 n_codewords: int, seed: int = 0) -> np.ndarray:
    """Empirical PAPR (dB) per antenna from random codewords."""
    rng = stream_rng(seed)
    s = rng.choice(np.asarray(c.pam, dtype=float),
                   size=(n_codewords, code.n_real))
    x = np.tensordot(s, code.betas, axes=([1], [0]))
    p = np.abs(x) ** 2
    peak = p.max(axis=(0, 1))
    avg = p.mean(axis=(0, 1))
    return 10 * np.log10(peak / avg)


# -- NVD certification ---------------------------------------------------

def diophantine_gap(bound: int):
    """Check ``|3 X1^2 - 5 (X2^2 + X3^2 + X4^2)| >= 2`` on ``[-bound, bound]^4``.

    Returns ``(min_gap, argmin, residues)`` where ``residues`` is the set of
    values of ``3 X1^2 mod 5``.
    """
    r = np.arange(-bound, bound + 1, dtype=np.int64)
    sq = r ** 2
    q = 3 * sq[:, None, None, None] - 5 * (
        sq[None, :, None, None] + sq[None, None, :, None]
        + sq[None, None, None, :])
    q = np.abs(q)
    q[bound, bound, bound, bound] = np.iinfo(np.int64).max
    flat = int(np.argmin(q))
    arg = tuple(int(r[i]) for i in np.unravel_index(flat, q.shape))
    residues = frozenset(int(v) for v in np.unique((3 * sq) % 5))
    return int(q.ravel()[flat]), arg, residues


@dataclass
class NvdReport:
    """Outcome of the NVD certification.

    ``failures`` maps each assertion family to its violation count;
    ``counterexamples`` keeps up to five offending vectors per family.
    """

    bound: int
    phi: float
    quantities: DeterminantTerms = field(repr=False)
    det_direct: np.ndarray = field(repr=False)
    det_closed: np.ndarray = field(repr=False)
    n_equal: int = 0
    n_unequal: int = 0
    min_det_equal: float = math.inf
    min_det_unequal: float = math.inf
    diophantine_bound: int = 0
    diophantine_min_gap: int = 0
    diophantine_argmin: tuple = ()
    residues: frozenset = frozenset()
    failures: dict = field(default_factory=dict)
    counterexamples: dict = field(default_factory=dict)

    @property
    def n_records(self) -> int:
        return len(self.det_direct)

    @property
    def passed(self) -> bool:
        return not any(self.failures.values())

    def record(self, i: int) -> NvdCaseRecord:
        q = self.quantities
        return NvdCaseRecord(
            int(q.sigma1[i]), int(q.sigma2[i]), tuple(int(v) for v in q.a[i]),
            int(q.b[i]), int(q.discriminant[i]),
            float(self.det_direct[i]), float(self.det_closed[i]))

    def summary(self) -> str:
        lines = [
            f"lattice bound {self.bound}, phi = {self.phi!r} rad, "
            f"{self.n_records} nonzero difference vectors",
            f"  s1 != s2: {self.n_unequal} vectors, min |det| "
            f"{self.min_det_unequal:.6g}",
            f"  s1 == s2: {self.n_equal} vectors, min |det| "
            f"{self.min_det_equal:.6g}",
            f"  3X1^2 - 5(X2^2+X3^2+X4^2) on [-{self.diophantine_bound}, "
            f"{self.diophantine_bound}]^4: min |value| "
            f"{self.diophantine_min_gap} at {self.diophantine_argmin}",
            f"  3X1^2 mod 5 takes values {sorted(self.residues)}",
        ]
        for name, count in self.failures.items():
            status = "ok" if count == 0 else f"FAILED ({count})"
            lines.append(f"  [{status}] {name}")
            for v in self.counterexamples.get(name, []):
                lines.append(f"      counterexample {v}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def verify_nvd_appendix(bound: int = 2, diophantine_bound: int = 20,
                        phi: float = DEFAULT_PHI) -> NvdReport:
    """Numerically certify the NVD proof on a bounded lattice.

    Every nonzero even difference vector in ``[-bound, bound]^8`` is checked
    for: the two-square identity and divisibility by 4 of ``a_i``; the two
    expressions of ``b``; closed form against the direct determinant; a
    nonpositive discriminant and root moduli ``s1/s2``; for ``s1 != s2``
    the bound ``|det| >= (s2 - s1)^2 >= 16``; for ``s1 == s2`` the collapse
    ``|det| = |2 s^2 cos(2 phi) + b| >= 16`` together with the reduced
    integer gap ``|3 (s/4)^2 - 5 (a1^2 + a2^2 + a3^2)/16| >= 2``. The
    Diophantine gap and quadratic-residue argument are checked separately on
    ``[-diophantine_bound, diophantine_bound]^4``.
    """
    _check_spread(bound)
    code = make_proposed_code(phi)
    total = (bound + 1) ** 8
    center = (total - 1) // 2
    ds = np.concatenate([lattice_vectors(bound, 0, center),
                         lattice_vectors(bound, center + 1, total)])
    q = determinant_terms(ds)
    det_direct = np.concatenate([
        abs_det_batch(code, ds[i:i + _CHUNK])
        for i in range(0, len(ds), _CHUNK)])
    det_closed = _closed_form(q.sigma1, q.sigma2, q.b, phi)
    s1, s2 = q.sigma1, q.sigma2
    a_sq = q.a ** 2
    eq = s1 == s2
    ne = ~eq
    slack = _REL_TOL * np.maximum(det_direct, 1.0)

    bad = {}
    bad["two-square identity sum(a_i^2) = s1*s2, a_i = 0 mod 4"] = (
        (a_sq.sum(axis=1) != s1 * s2) | np.any(q.a % 4 != 0, axis=1))
    bad["b = 2(sum a_i^2 - 2(a1^2+a2^2+a3^2)) matches expanded b"] = (
        q.b != q.b_expanded)
    bad["closed form matches direct determinant"] = (
        np.abs(det_direct - det_closed) > slack)
    bad["discriminant <= 0"] = q.discriminant > 0

    s1f, s2f, bf = (v.astype(float) for v in (s1, s2, q.b))
    has_s2 = s2 != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        im = np.sqrt(np.maximum(4 * s1f ** 2 * s2f ** 2 - bf ** 2, 0.0))
        lam = (-bf + 1j * im) / (2 * s2f ** 2)
        ratio = s1f / s2f
        root_bad = np.abs(np.abs(lam) - ratio) > 1e-10 * np.maximum(ratio, 1)
    bad["root moduli |lambda| = s1/s2"] = has_s2 & root_bad

    gap_sq = (s2 - s1) ** 2
    bad["s1 != s2: |det| >= (s2-s1)^2 >= 16"] = ne & (
        (det_direct < gap_sq - slack) | (gap_sq < NVD_BOUND))

    collapsed = np.abs(2 * s1f ** 2 * math.cos(2 * phi) + bf)
    sigma_t = s1 // 4
    head_t = a_sq[:, :3].sum(axis=1) // 16
    reduced = np.abs(3 * sigma_t ** 2 - 5 * head_t)
    bad["s1 == s2: |det| = |2s^2 cos(2phi) + b| >= 16"] = eq & (
        (np.abs(det_direct - collapsed) > slack)
        | (det_direct < NVD_BOUND - slack))
    bad["s1 == s2: |3(s/4)^2 - 5(a1^2+a2^2+a3^2)/16| >= 2"] = eq & (reduced < 2)

    gap, gap_arg, residues = diophantine_gap(diophantine_bound)
    failures = {name: int(mask.sum()) for name, mask in bad.items()}
    failures["Diophantine gap >= 2"] = int(gap < 2)
    failures["3X1^2 mod 5 never +-1"] = int(not residues <= {0, 2, 3})
    examples = {name: [tuple(int(v) for v in ds[i])
                       for i in np.flatnonzero(mask)[:5]]
                for name, mask in bad.items() if mask.any()}
    if gap < 2:
        examples["Diophantine gap >= 2"] = [gap_arg]

    return NvdReport(
        bound=bound, phi=phi, quantities=q, det_direct=det_direct,
        det_closed=det_closed, n_equal=int(eq.sum()), n_unequal=int(ne.sum()),
        min_det_equal=float(det_direct[eq].min()) if eq.any() else math.inf,
        min_det_unequal=float(det_direct[ne].min()) if ne.any() else math.inf,
        diophantine_bound=diophantine_bound, diophantine_min_gap=gap,
        diophantine_argmin=gap_arg, residues=residues, failures=failures,
        counterexamples=examples)


# -- angle search ----------------------------------------------------------

@dataclass(frozen=True)
class PhiSweep:
    """Minimum determinant as a function of the rotation angle.

    ``curve`` has columns ``(phi, min |det|)``. Several angles can share the
    top minimum; among those the one with the largest ``next_levels`` entry
    wins, then the smallest angle.
    """

    best_phi: float
    best_index: int
    curve: np.ndarray
    next_levels: np.ndarray
    spread: int

    @property
    def best_value(self) -> float:
        return float(self.curve[self.best_index, 1])

    @property
    def plateau(self) -> np.ndarray:
        """Angles whose minimum ties with the best one."""
        top = self.curve[:, 1].max()
        return self.curve[self.curve[:, 1] >= top - _REL_TOL * top, 0]


def phi_sweep(grid_points: int = 256, spread: int = 2,
              workers: int = 1) -> PhiSweep:
    """Search ``phi`` on a uniform grid over ``[0, pi/2]``."""
    if grid_points < 8:
        raise ValueError(f"grid_points must be >= 8, got {grid_points}")
    _check_spread(spread, limit=4)
    phis = np.linspace(0.0, np.pi / 2, grid_points)
    mins, nexts = [], []
    for phi in phis:
        rep = min_det_search(make_proposed_code(phi), spread, workers=workers)
        mins.append(rep.min_abs_det)
        nexts.append(rep.next_level if rep.next_level is not None else -np.inf)
    mins = np.array(mins)
    nexts = np.array(nexts)
    top = mins.max()
    tied = mins >= top - _REL_TOL * max(top, 1.0)
    score = np.where(tied, nexts, -np.inf)
    top_next = score.max()
    best = int(np.argmax(score >= top_next - _REL_TOL * max(abs(top_next), 1.0)))
    return PhiSweep(float(phis[best]), best, np.column_stack([phis, mins]),
                    nexts, spread)
