"""Construction of the lossy quantum-walk lattice operators.

The chain has ``length`` unit cells, each holding an A and a B site; only B
sites are lossy.  Cells are numbered 1..length to match the usual physics
convention; flat matrix indices are 0-based with A before B inside a cell.
All builders return dense complex ``(2L, 2L)`` arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EdgeBurstError

SUBLATTICES = ("A", "B")

_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


class Site(NamedTuple):
    cell: int
    sub: str


@dataclass(frozen=True)
class LatticeParams:
    """Physical configuration of the chain (hbar = 1).

    t1, t2   -- real hopping amplitudes
    gamma    -- loss rate on B sites, >= 0
    length   -- number of unit cells, >= 1
    x0       -- initial cell of the walker, 1 <= x0 <= length
    """

    t1: float
    t2: float
    gamma: float
    length: int
    x0: int = 1

    def __post_init__(self):
        for name in ("t1", "t2", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")
        if not 1 <= self.x0 <= self.length:
            raise ValueError(
                f"x0 must lie in [1, {self.length}], got {self.x0}")

    @property
    def dim(self) -> int:
        return 2 * self.length


def flat_index(site: Site | tuple, length: int) -> int:
    """Map (cell, sublattice) to the 0-based matrix index."""
    cell, sub = site
    if not 1 <= cell <= length:
        raise ValueError(f"cell {cell} outside [1, {length}]")
    if sub not in SUBLATTICES:
        raise ValueError(f"sublattice must be 'A' or 'B', got {sub!r}")
    return 2 * (cell - 1) + (0 if sub == "A" else 1)


def site_of(index: int, length: int) -> Site:
    """Inverse of :func:`flat_index`."""
    if not 0 <= index < 2 * length:
        raise ValueError(f"flat index {index} outside [0, {2 * length})")
    return Site(index // 2 + 1, SUBLATTICES[index % 2])


def all_sites(length: int) -> Iterable[Site]:
    for cell in range(1, length + 1):
        for sub in SUBLATTICES:
            yield Site(cell, sub)


def build_walk_hamiltonian(params: LatticeParams) -> np.ndarray:
    """Dense Hamiltonian of the lossy walk on an open chain.

    Couplings per cell x: A-B intra-cell t1, inter-cell A-A hops +/- i t2/2,
    B-B hops the opposite sign, A-B inter-cell t2/2, and -i*gamma on every
    B diagonal.  Hops referencing cells outside [1, L] are dropped.
    """
    t1, t2, g, L = params.t1, params.t2, params.gamma, params.length
    h = np.zeros((2 * L, 2 * L), dtype=complex)
    for x in range(1, L + 1):
        a = 2 * (x - 1)
        b = a + 1
        h[a, b] = t1
        h[b, a] = t1
        h[b, b] = -1j * g
        if x > 1:
            am, bm = a - 2, b - 2
            h[a, am] += 0.5j * t2
            h[a, bm] += 0.5 * t2
            h[b, bm] += -0.5j * t2
            h[b, am] += 0.5 * t2
        if x < L:
            ap, bp = a + 2, b + 2
            h[a, ap] += -0.5j * t2
            h[a, bp] += 0.5 * t2
            h[b, bp] += 0.5j * t2
            h[b, ap] += 0.5 * t2
    return h


def build_h0(params: LatticeParams) -> np.ndarray:
    """Onsite part: 0 on A sites, -i*gamma on B sites."""
    diag = np.zeros(params.dim, dtype=complex)
    diag[1::2] = -1j * params.gamma
    return np.diag(diag)


def build_hprime(params: LatticeParams) -> np.ndarray:
    """Hopping part; together with :func:`build_h0` reproduces the walk
    Hamiltonian exactly."""
    return build_walk_hamiltonian(params) - build_h0(params)


def _block_diag(block: np.ndarray, length: int) -> np.ndarray:
    out = np.zeros((2 * length, 2 * length), dtype=complex)
    for n in range(length):
        out[2 * n:2 * n + 2, 2 * n:2 * n + 2] = block
    return out


def ssh_t1(params: LatticeParams) -> float:
    """Intra-cell hopping of the Hermitian chain equivalent,
    sqrt(t1^2 - gamma^2/4).  Real only for t1 >= gamma/2."""
    disc = params.t1 ** 2 - params.gamma ** 2 / 4.0
    if disc < 0:
        raise EdgeBurstError(
            f"t1={params.t1} < gamma/2={params.gamma / 2}: the Hermitian "
            "equivalent has no real intra-cell hopping")
    return math.sqrt(disc)


def build_model(params: LatticeParams, model: str) -> np.ndarray:
    """Build one of the related chain models.

    walk -- the lossy walk Hamiltonian itself
    H1   -- traceless part: walk + (i*gamma/2) * identity
    H2   -- nonreciprocal-hopping chain (intra-cell t1 +/- gamma/2, inter t2)
    H3   -- Hermitian chain with hoppings sqrt(t1^2 - gamma^2/4) and t2
    H4   -- Hermitian chain of H3 with the loss restored on B sites
    """
    t1, t2, g, L = params.t1, params.t2, params.gamma, params.length
    if model == "walk":
        return build_walk_hamiltonian(params)
    if model == "H1":
        return build_walk_hamiltonian(params) + 0.5j * g * np.eye(2 * L)
    if model == "H2":
        h = np.zeros((2 * L, 2 * L), dtype=complex)
        for n in range(L):
            a, b = 2 * n, 2 * n + 1
            h[a, b] = t1 + 0.5 * g
            h[b, a] = t1 - 0.5 * g
            if n + 1 < L:
                h[b, b + 1] = t2
                h[b + 1, b] = t2
        return h
    if model in ("H3", "H4"):
        t1p = ssh_t1(params)
        h = np.zeros((2 * L, 2 * L), dtype=complex)
        for n in range(L):
            a, b = 2 * n, 2 * n + 1
            h[a, b] = t1p
            h[b, a] = t1p
            if n + 1 < L:
                h[b, b + 1] = t2
                h[b + 1, b] = t2
        if model == "H4":
            h[1::2, 1::2][np.diag_indices(L)] = -1j * g
        return h
    raise ValueError(f"unknown model {model!r}")


def bloch_factor(params: LatticeParams) -> complex:
    """Per-cell envelope ratio beta = sqrt((t1 - g/2) / (t1 + g/2)),
    principal branch; complex when t1 < gamma/2."""
    num = params.t1 - 0.5 * params.gamma
    den = params.t1 + 0.5 * params.gamma
    if den == 0:
        raise ZeroDivisionError("t1 = -gamma/2: envelope ratio undefined")
    return complex(np.sqrt(complex(num / den)))


def bloch_magnitude(params: LatticeParams) -> float:
    """|beta| = sqrt(|t1 - g/2| / |t1 + g/2|)."""
    num = abs(params.t1 - 0.5 * params.gamma)
    den = abs(params.t1 + 0.5 * params.gamma)
    if den == 0:
        raise ZeroDivisionError("t1 = -gamma/2: envelope ratio undefined")
    return math.sqrt(num / den)


def build_transform(params: LatticeParams, which: str) -> np.ndarray:
    """Transformation operators between the chain models.

    R     -- per-cell rotation (1/sqrt2) [[1, -i], [-i, 1]]; R^-1 H1 R = H2
    S     -- diagonal similarity beta^(n-1) * diag(1, beta); S^-1 H2 S = H3
    Gamma -- per-cell sigma_y; Gamma H1 Gamma = -H1
    """
    L = params.length
    if which == "R":
        block = np.array([[1.0, -1.0j], [-1.0j, 1.0]], dtype=complex)
        return _block_diag(block / math.sqrt(2.0), L)
    if which == "Gamma":
        return _block_diag(_SIGMA_Y, L)
    if which == "S":
        beta = bloch_factor(params)
        if beta == 0:
            raise EdgeBurstError(
                "beta = 0 (t1 = gamma/2): similarity matrix is singular")
        diag = np.empty(2 * L, dtype=complex)
        scale = 1.0 + 0.0j
        for n in range(L):
            diag[2 * n] = scale
            diag[2 * n + 1] = scale * beta
            scale *= beta
        return np.diag(diag)
    raise ValueError(f"unknown transform {which!r}")


@dataclass(frozen=True)
class SymmetryReport:
    kind: str
    residual: float
    tolerance: float
    passed: bool


def _matching_distance(ev_a: np.ndarray, ev_b: np.ndarray) -> float:
    """Largest matched |a_i - b_j| under the optimal pairing of the two
    eigenvalue multisets."""
    cost = np.abs(ev_a[:, None] - ev_b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def spectrum_distance(m_a: np.ndarray, m_b: np.ndarray) -> float:
    return _matching_distance(np.linalg.eigvals(m_a), np.linalg.eigvals(m_b))


def check_symmetry(m: np.ndarray, candidate: np.ndarray, kind: str,
                   tol: float) -> SymmetryReport:
    """Measure how well ``candidate`` implements a symmetry of ``m``.

    chiral             -- residual of C m C + m (candidate C squares to 1)
    spectrum-equality  -- matching distance between the eigenvalue multisets
    custom-conjugation -- residual of C conj(m) C^-1 - m
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if m.shape != candidate.shape:
        raise ValueError(
            f"shape mismatch: {m.shape} vs {candidate.shape}")
    if kind == "chiral":
        residual = float(np.abs(candidate @ m @ candidate + m).max())
    elif kind == "spectrum-equality":
        residual = spectrum_distance(m, candidate)
    elif kind == "custom-conjugation":
        try:
            inv = np.linalg.inv(candidate)
        except np.linalg.LinAlgError as exc:
            raise EdgeBurstError("conjugation candidate is singular") from exc
        residual = float(np.abs(candidate @ m.conj() @ inv - m).max())
    else:
        raise ValueError(f"unknown symmetry kind {kind!r}")
    return SymmetryReport(kind=kind, residual=residual, tolerance=tol,
                          passed=residual <= tol)


def in_neighbors(site: Site | tuple, params: LatticeParams):
    """Sites feeding ``site`` through the hopping part, with couplings.

    Returns every (source, H'[site, source]) with a nonzero coupling; these
    are the final-hop classes into ``site``: five per bulk site, three at a
    chain end (for generic t1, t2).
    """
    cell, sub = site
    t1, t2, L = params.t1, params.t2, params.length
    if not 1 <= cell <= L or sub not in SUBLATTICES:
        raise ValueError(f"invalid site {site!r}")
    other = "B" if sub == "A" else "A"
    sign = 1.0j if sub == "A" else -1.0j  # same-sublattice hop from the left
    out = [(Site(cell, other), complex(t1))]
    for nb, s in ((cell - 1, sign), (cell + 1, -sign)):
        if 1 <= nb <= L:
            out.append((Site(nb, other), complex(0.5 * t2)))
            out.append((Site(nb, sub), s * 0.5 * t2))
    return [(s, c) for s, c in out if c != 0]
