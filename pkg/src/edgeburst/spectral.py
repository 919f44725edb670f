"""Biorthogonal eigendecomposition and mode-resolved propagation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EdgeBurstError, ExceptionalPointError

DEFAULT_CONDITION_LIMIT = 1e12
_CLUSTER_RANK_TOL = 1e7  # eigenvector block condition marking a defective cluster


@dataclass
class ModeSet:
    """Eigen-system of a dense non-Hermitian operator.

    values    -- eigenvalues, sorted by descending Im then ascending Re
    right     -- right eigenvectors as columns
    left      -- left eigenvectors as rows, bi-orthonormal to ``right``
    condition -- condition number of the right-eigenvector matrix
    residuals -- self-check results: biorthogonality, completeness,
                 right and left eigen-equation defects
    """

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition: float
    residuals: Optional[dict] = None

    @property
    def dim(self) -> int:
        return len(self.values)


@dataclass
class ModeExpansion:
    """Coefficients of a state in the right-eigenvector basis."""

    coefficients: np.ndarray
    residual: float


@dataclass
class SpectrumDiagnostics:
    """Structure of the eigenvalue imaginary parts (informative, no raises)."""

    max_imag: float
    all_decaying: bool          # max Im <= 0 within tolerance
    symmetry_residual: float    # mismatch of {Im + g/2} under negation
    symmetric_about_half_gamma: bool
    multiplicities: list = field(default_factory=list)
    even_multiplicities: bool = True
    uniform_imag: bool = False  # all Im equal to -gamma/2


def _eigenvalue_clusters(values: np.ndarray, tol: float):
    """Connected components of eigenvalues under |dl| <= tol."""
    n = len(values)
    close = np.abs(values[:, None] - values[None, :]) <= tol
    seen = np.zeros(n, dtype=bool)
    clusters = []
    for i in range(n):
        if seen[i]:
            continue
        stack, comp = [i], []
        seen[i] = True
        while stack:
            j = stack.pop()
            comp.append(j)
            for k in np.nonzero(close[j])[0]:
                if not seen[k]:
                    seen[k] = True
                    stack.append(k)
        clusters.append(comp)
    return clusters


def eig(m: np.ndarray, condition_limit: float = DEFAULT_CONDITION_LIMIT,
        resid_tol: float = 1e-8) -> ModeSet:
    """Full decomposition with right and left eigenvectors.

    Left vectors are the rows of the (iteratively refined) inverse of the
    right-eigenvector matrix, which enforces bi-orthonormality and
    completeness by construction.  Raises ExceptionalPointError for
    defective or numerically near-defective input, and EdgeBurstError if the
    self-check residuals exceed ``resid_tol`` * scale.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("operator must be a square matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("operator contains non-finite entries")
    scale = float(np.abs(m).max()) or 1.0

    values, right = np.linalg.eig(m)
    order = np.lexsort((values.real, -values.imag))
    values = values[order]
    right = right[:, order]

    # defective clusters: nearly equal eigenvalues with collinear vectors
    cluster_tol = max(1e-8, 20.0 * np.sqrt(np.finfo(float).eps)) * scale
    for comp in _eigenvalue_clusters(values, cluster_tol):
        if len(comp) < 2:
            continue
        svals = np.linalg.svd(right[:, comp], compute_uv=False)
        if svals[-1] == 0 or svals[0] / svals[-1] > _CLUSTER_RANK_TOL:
            raise ExceptionalPointError(
                f"defective eigenvalue cluster at {values[comp[0]]:.6g} "
                f"(size {len(comp)}): eigenvectors are rank deficient",
                condition=float(svals[0] / max(svals[-1], 1e-300)))

    condition = float(np.linalg.cond(right))
    if not np.isfinite(condition) or condition > condition_limit:
        raise ExceptionalPointError(
            f"right-eigenvector matrix condition {condition:.3e} exceeds "
            f"limit {condition_limit:.1e}", condition=condition)

    left = np.linalg.inv(right)
    eye = np.eye(len(values))
    for _ in range(2):  # Newton refinement keeps biorthogonality near eps
        defect = eye - left @ right
        if np.abs(defect).max() < 1e-14:
            break
        left = left + defect @ left

    bi = float(np.abs(left @ right - eye).max())
    comp = float(np.abs(right @ left - eye).max())
    res_r = float(np.abs(m @ right - right * values[None, :]).max()) / scale
    # left rows are not unit vectors; judge their residual per row norm
    row_scale = np.linalg.norm(left, axis=1)
    res_l = float((np.linalg.norm(left @ m - values[:, None] * left, axis=1)
                   / row_scale).max()) / scale
    ms = ModeSet(values=values, right=right, left=left, condition=condition,
                 residuals={"biorthogonality": bi, "completeness": comp,
                            "right": res_r, "left": res_l})
    # completeness and the left eigen-equation are conditioning-limited:
    # even the exactly rounded inverse carries a cond(V)*eps defect
    cond_floor = 50.0 * np.finfo(float).eps * condition
    if (bi > resid_tol or res_r > resid_tol
            or comp > max(resid_tol, cond_floor)
            or res_l > max(resid_tol, cond_floor)):
        raise EdgeBurstError(
            f"eigendecomposition self-check failed: biorth {bi:.2e}, "
            f"completeness {comp:.2e}, right {res_r:.2e}, left {res_l:.2e} "
            f"(condition {condition:.2e})")
    return ms


def expand(modes: ModeSet, psi0: np.ndarray) -> ModeExpansion:
    """Coefficients a_n = <n_L|psi0> with the reconstruction residual."""
    psi0 = np.asarray(psi0, dtype=complex)
    coeff = modes.left @ psi0
    resid = float(np.linalg.norm(modes.right @ coeff - psi0))
    return ModeExpansion(coefficients=coeff, residual=resid)


def propagate(modes: ModeSet, expansion: ModeExpansion, t: float,
              mode_filter: Optional[Sequence[int]] = None) -> np.ndarray:
    """State at time t from a (possibly filtered) sum of modes."""
    if mode_filter is None:
        idx = np.arange(modes.dim)
    else:
        idx = np.asarray(list(mode_filter), dtype=int)
        if len(idx) and (idx.min() < 0 or idx.max() >= modes.dim):
            raise ValueError("mode filter index out of range")
    if len(idx) == 0:
        return np.zeros(modes.dim, dtype=complex)
    amp = expansion.coefficients[idx] * np.exp(-1j * modes.values[idx] * t)
    return modes.right[:, idx] @ amp


def select_by_im(modes: ModeSet, k: int,
                 expansion: Optional[ModeExpansion] = None) -> np.ndarray:
    """Indices of the k eigenvalues with the largest imaginary parts.

    Ties at the boundary are broken by larger |a_n| when an expansion is
    supplied, by index otherwise.
    """
    if not 0 <= k <= modes.dim:
        raise ValueError(f"k must lie in [0, {modes.dim}]")
    if expansion is None:
        tie = np.arange(modes.dim)
    else:
        tie = -np.abs(expansion.coefficients)
    order = np.lexsort((tie, -modes.values.imag))
    return np.sort(order[:k])


def spectrum_diagnostics(modes: ModeSet, gamma: float,
                         tol: float = 1e-8) -> SpectrumDiagnostics:
    """Report the Im-spectrum structure expected of the lossy walk:
    all parts non-positive, pairwise symmetric about -gamma/2, with even
    multiplicities, and uniformly -gamma/2 in the strong-hopping regime."""
    im = modes.values.imag
    max_imag = float(im.max())
    shifted = np.sort(im + 0.5 * gamma)
    sym_res = float(np.abs(shifted + shifted[::-1]).max())

    mults = []
    remaining = np.sort(im)
    i = 0
    while i < len(remaining):
        j = i
        while j + 1 < len(remaining) and remaining[j + 1] - remaining[i] <= tol:
            j += 1
        mults.append(j - i + 1)
        i = j + 1
    return SpectrumDiagnostics(
        max_imag=max_imag,
        all_decaying=max_imag <= 1e-10,
        symmetry_residual=sym_res,
        symmetric_about_half_gamma=sym_res <= tol,
        multiplicities=mults,
        even_multiplicities=all(c % 2 == 0 for c in mults),
        uniform_imag=bool(np.all(np.abs(im + 0.5 * gamma) <= tol)),
    )
