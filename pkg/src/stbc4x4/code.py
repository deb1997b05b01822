"""Constellations, linear dispersion codes and the rate-1 4x4 code.

A linear dispersion (LD) code maps ``2K`` real symbols ``x_1 ... x_2K`` to a
``T x N_T`` codeword ``X = sum_k beta_k x_k``. Everything here uses 0-based
indices in code: ``betas[0]`` is the weight matrix of ``x_1``.

Constellations are unnormalized square QAM: each complex point is ``a + jb``
with ``a, b`` odd integers, so symbol differences are even integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DEFAULT_PHI",
    "SUPPORTED_QAM",
    "Constellation",
    "LinearDispersionCode",
    "qam_constellation",
    "make_proposed_code",
    "assemble_codeword",
    "hurwitz_radon_check",
    "format_code",
    "parse_code",
    "write_code",
    "read_code",
]

#: Rotation angle of the x7/x8 layer, 0.5 * arccos(1/5) rad.
DEFAULT_PHI = 0.5 * math.acos(0.2)

SUPPORTED_QAM = (4, 16, 64, 256)


@dataclass(frozen=True)
class Constellation:
    """Square M-QAM as a product of two unnormalized PAM alphabets.

    Attributes
    ----------
    m : int
        Number of complex points.
    pam : tuple of int
        Ascending odd integers ``-(sqrt(M)-1), ..., -1, 1, ..., sqrt(M)-1``.
    avg_energy : float
        Mean of ``a**2 + b**2`` over all ``(a, b)`` in ``pam x pam``.
    """

    m: int
    pam: tuple[int, ...]
    avg_energy: float

    @property
    def side(self) -> int:
        """sqrt(M), the number of PAM levels."""
        return len(self.pam)

    @property
    def points(self) -> np.ndarray:
        p = np.asarray(self.pam, dtype=float)
        return (p[:, None] + 1j * p[None, :]).ravel()

    @property
    def peak_energy(self) -> float:
        return 2.0 * self.pam[-1] ** 2


def qam_constellation(m: int) -> Constellation:
    """Build the unnormalized square ``m``-QAM constellation.

    >>> qam_constellation(16).pam
    (-3, -1, 1, 3)
    >>> qam_constellation(16).avg_energy
    10.0
    """
    if isinstance(m, bool) or int(m) != m:
        raise ValueError(f"QAM size must be an integer, got {m!r}")
    m = int(m)
    side = math.isqrt(m) if m > 0 else 0
    if side * side != m:
        raise ValueError(f"QAM size {m} is not a perfect square")
    if m not in SUPPORTED_QAM:
        raise ValueError(
            f"QAM size {m} is not supported; choose one of {SUPPORTED_QAM}")
    pam = tuple(range(-(side - 1), side, 2))
    p = np.asarray(pam, dtype=float)
    avg = float(np.mean(p[:, None] ** 2 + p[None, :] ** 2))
    return Constellation(m=m, pam=pam, avg_energy=avg)


@dataclass(frozen=True)
class LinearDispersionCode:
    """An LD space-time block code.

    ``betas`` has shape ``(2K, T, N_T)``; it is stored read-only.
    ``phi`` is informational for codes built without a rotation.
    """

    t: int
    nt: int
    k: int
    betas: np.ndarray = field(repr=False)
    phi: float = 0.0

    def __post_init__(self):
        betas = np.array(self.betas, dtype=complex)
        if betas.shape != (2 * self.k, self.t, self.nt):
            raise ValueError(
                f"betas must have shape {(2 * self.k, self.t, self.nt)}, "
                f"got {betas.shape}")
        if not np.isfinite(self.phi):
            raise ValueError(f"phi must be finite, got {self.phi}")
        betas.setflags(write=False)
        object.__setattr__(self, "betas", betas)

    @property
    def n_real(self) -> int:
        """Number of real symbols per codeword, 2K."""
        return 2 * self.k

    def __eq__(self, other):
        if not isinstance(other, LinearDispersionCode):
            return NotImplemented
        return ((self.t, self.nt, self.k, self.phi)
                == (other.t, other.nt, other.k, other.phi)
                and np.array_equal(self.betas, other.betas))

    __hash__ = None


def _proposed_matrix(x, phi: float) -> np.ndarray:
    x1, x2, x3, x4, x5, x6, x7, x8 = x
    c = np.exp(1j * phi)
    return np.array([
        [x1 + 1j * x2, x3 + 1j * x4, x5 + 1j * x6, -c * (x7 + 1j * x8)],
        [-x3 + 1j * x4, x1 - 1j * x2, c * (-x7 + 1j * x8), -x5 - 1j * x6],
        [-x5 + 1j * x6, c * (x7 + 1j * x8), x1 - 1j * x2, x3 + 1j * x4],
        [-c * (-x7 + 1j * x8), x5 - 1j * x6, -x3 + 1j * x4, x1 + 1j * x2],
    ])


def make_proposed_code(phi: float = DEFAULT_PHI) -> LinearDispersionCode:
    """The rate-1, full-diversity 4x4 code.

    The rate-3/4 complex orthogonal design carries ``x_1 ... x_6``; the
    symbol pair ``(x_7, x_8)`` rides on a second layer rotated by
    ``exp(j*phi)``. Weight matrix ``k`` is the codeword with ``x_k = 1`` and
    all other symbols zero.

    Parameters
    ----------
    phi : float
        Rotation in radians. The default maximizes the minimum determinant.
    """
    phi = float(phi)
    if not np.isfinite(phi):
        raise ValueError(f"phi must be finite, got {phi}")
    betas = np.stack([_proposed_matrix(e, phi) for e in np.eye(8)])
    return LinearDispersionCode(t=4, nt=4, k=4, betas=betas, phi=phi)


def assemble_codeword(code: LinearDispersionCode, s) -> np.ndarray:
    """Return ``sum_k betas[k] * s[k]``.

    ``s`` may also be a batch of shape ``(..., 2K)``; the result then has
    shape ``(..., T, N_T)``.
    """
    s = np.asarray(s)
    if s.shape[-1:] != (code.n_real,):
        raise ValueError(
            f"symbol vector must have length {code.n_real}, "
            f"got shape {s.shape}")
    return np.tensordot(s, code.betas, axes=([-1], [0]))


def hurwitz_radon_check(code: LinearDispersionCode, i: int, j: int,
                        tol: float = 1e-12) -> bool:
    """True iff ``beta_i^H beta_j + beta_j^H beta_i = 2 delta_ij I``.

    ``i`` and ``j`` are 0-based indices into ``code.betas``.
    """
    n = code.n_real
    for idx in (i, j):
        if not 0 <= idx < n:
            raise IndexError(f"weight index {idx} outside [0, {n})")
    bi, bj = code.betas[i], code.betas[j]
    lhs = bi.conj().T @ bj + bj.conj().T @ bi
    rhs = 2.0 * (i == j) * np.eye(code.nt)
    return bool(np.max(np.abs(lhs - rhs)) <= tol)


# Text format: header "T NT K PHI", then 2K blocks of T lines with NT
# complex tokens each, blocks separated by one blank line.

def _fmt_complex(z: complex) -> str:
    im = repr(float(z.imag))
    if not im.startswith("-"):
        im = "+" + im
    return f"{float(z.real)!r}{im}j"


def format_code(code: LinearDispersionCode) -> str:
    lines = [f"{code.t} {code.nt} {code.k} {float(code.phi)!r}"]
    for beta in code.betas:
        lines.append("")
        for row in beta:
            lines.append(" ".join(_fmt_complex(z) for z in row))
    return "\n".join(lines) + "\n"


def parse_code(text: str) -> LinearDispersionCode:
    lines = text.splitlines()
    while lines and not lines[0].strip():
        lines.pop(0)
    if not lines:
        raise ValueError("empty weight-matrix file")
    header = lines[0].split()
    if len(header) != 4:
        raise ValueError(f"header must be 'T NT K PHI', got {lines[0]!r}")
    t, nt, k = (int(v) for v in header[:3])
    phi = float(header[3])

    blocks, cur = [], []
    for line in lines[1:]:
        if line.strip():
            cur.append(line.split())
        elif cur:
            blocks.append(cur)
            cur = []
    if cur:
        blocks.append(cur)
    if len(blocks) != 2 * k:
        raise ValueError(f"expected {2 * k} matrices, found {len(blocks)}")
    betas = []
    for n, block in enumerate(blocks, start=1):
        if len(block) != t or any(len(row) != nt for row in block):
            raise ValueError(f"matrix {n} is not {t}x{nt}")
        betas.append([[complex(tok) for tok in row] for row in block])
    return LinearDispersionCode(t=t, nt=nt, k=k, betas=np.array(betas),
                                phi=phi)


def write_code(code: LinearDispersionCode, path) -> None:
    Path(path).write_text(format_code(code))


def read_code(path) -> LinearDispersionCode:
    return parse_code(Path(path).read_text())
