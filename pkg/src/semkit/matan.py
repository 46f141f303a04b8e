"""Weight-matrix diagnostics: Frobenius norms, truncated SVD, subspace
projection norms, and PCA of stacked feature rows.

The headline quantity is the norm of a weight matrix projected into the
top singular subspace of its fine-tuning update, and the amplification
factor formed by dividing the update's norm by that projection norm.
All decompositions run in float64 with a deterministic sign convention,
so outputs are bit-stable for a fixed input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .embed_io import DenseMatrix
from .errors import (
    ConvergenceFailure,
    DegenerateData,
    NonOrthonormalFactor,
    RankOutOfRange,
    ShapeMismatch,
)


def _as_array(m) -> np.ndarray:
    values = m.values if isinstance(m, DenseMatrix) else m
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got {arr.ndim}-D")
    return arr


def frobenius(m) -> float:
    """Square root of the sum of squared entries, accumulated in float64."""
    arr = _as_array(m)
    return float(np.sqrt(np.sum(arr * arr)))


class SvdResult(NamedTuple):
    u: np.ndarray  # rows x k, orthonormal columns
    s: np.ndarray  # k singular values, non-increasing
    v: np.ndarray  # cols x k, orthonormal columns


def svd(m, k: int) -> SvdResult:
    """Top-k singular triplets with a canonical sign.

    The first nonzero entry of each left singular vector is made positive
    (the right vector is flipped with it), so repeated calls on the same
    input are bit-identical.
    """
    arr = _as_array(m)
    max_rank = min(arr.shape)
    if not (1 <= k <= max_rank):
        raise RankOutOfRange(f"k must be in [1, {max_rank}], got {k}")
    try:
        u, s, vh = np.linalg.svd(arr, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"SVD did not converge: {e}") from e
    u, s, v = u[:, :k], s[:k], vh[:k].T.copy()
    u = u.copy()
    for j in range(k):
        col = u[:, j]
        nonzero = np.nonzero(col)[0]
        if nonzero.size and col[nonzero[0]] < 0:
            u[:, j] = -col
            v[:, j] = -v[:, j]
    return SvdResult(u=u, s=s, v=v)


def _check_orthonormal(factor: np.ndarray, name: str, tol: float = 1e-6) -> None:
    gram = factor.T @ factor
    err = float(np.max(np.abs(gram - np.eye(factor.shape[1]))))
    if err > tol:
        raise NonOrthonormalFactor(
            f"{name} columns deviate from orthonormality by {err:.3e} (tolerance {tol:g})"
        )


def project_norm(w, u, v) -> float:
    """Frobenius norm of U^T W V for orthonormal-column factors U and V."""
    arr = _as_array(w)
    fu = np.asarray(u, dtype=np.float64)
    fv = np.asarray(v, dtype=np.float64)
    if fu.ndim != 2 or fv.ndim != 2:
        raise ShapeMismatch("projection factors must be 2-D")
    if fu.shape[0] != arr.shape[0] or fv.shape[0] != arr.shape[1]:
        raise ShapeMismatch(
            f"factors {fu.shape} / {fv.shape} do not conform to matrix {arr.shape}"
        )
    _check_orthonormal(fu, "U")
    _check_orthonormal(fv, "V")
    return float(np.linalg.norm(fu.T @ arr @ fv))


def amplification_factor(norm_dw: float, proj_dw: float) -> float | None:
    """Update norm divided by the projected weight norm; None when undefined."""
    if proj_dw <= 0.0:
        return None
    return norm_dw / proj_dw


@dataclass
class SubspaceReport:
    """Norms of W projected into rank-r subspaces of the update, of W itself,
    and of a seeded random matrix, plus the amplification factor."""

    norm_w: float
    norm_dw: float
    proj_dw: float
    proj_w: float
    proj_random: float
    rank_r: int
    amplification: float | None
    seed: int

    def to_json_dict(self) -> dict:
        obj: dict = {
            "norm_w": self.norm_w,
            "norm_dw": self.norm_dw,
            "proj_dw": self.proj_dw,
            "proj_w": self.proj_w,
            "proj_random": self.proj_random,
            "rank_r": self.rank_r,
        }
        if self.amplification is not None:
            obj["amplification"] = self.amplification
        obj["seed"] = self.seed
        return obj


def subspace_report(w, dw, r: int, seed: int = 0) -> SubspaceReport:
    """Project W into three rank-r subspaces and compare Frobenius norms."""
    aw = _as_array(w)
    adw = _as_array(dw)
    if aw.shape != adw.shape:
        raise ShapeMismatch(f"W is {aw.shape} but the update is {adw.shape}")
    max_rank = min(aw.shape)
    if not (1 <= r <= max_rank):
        raise RankOutOfRange(f"r must be in [1, {max_rank}], got {r}")

    basis_dw = svd(adw, r)
    basis_w = svd(aw, r)
    rng = np.random.default_rng(seed)
    basis_rand = svd(rng.standard_normal(aw.shape), r)

    proj_dw = project_norm(aw, basis_dw.u, basis_dw.v)
    return SubspaceReport(
        norm_w=frobenius(aw),
        norm_dw=frobenius(adw),
        proj_dw=proj_dw,
        proj_w=project_norm(aw, basis_w.u, basis_w.v),
        proj_random=project_norm(aw, basis_rand.u, basis_rand.v),
        rank_r=r,
        amplification=amplification_factor(frobenius(adw), proj_dw),
        seed=seed,
    )


@dataclass
class PcaResult:
    """Principal components of row-stacked features, column means removed."""

    n_components: int
    components: np.ndarray  # k x d, orthonormal rows
    explained_variance: np.ndarray  # k, non-increasing
    mean: np.ndarray  # d
    projections: np.ndarray  # n x k

    def to_json_dict(self) -> dict:
        return {
            "n_components": self.n_components,
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "mean": self.mean.tolist(),
            "projections": self.projections.tolist(),
        }


def pca(x, k: int = 15) -> PcaResult:
    """Column-centered SVD-based PCA with k components."""
    arr = _as_array(x)
    n, d = arr.shape
    if n < 2:
        raise RankOutOfRange(f"PCA needs at least 2 rows, got {n}")
    max_k = min(n - 1, d)
    if not (1 <= k <= max_k):
        raise RankOutOfRange(f"k must be in [1, {max_k}], got {k}")

    mean = arr.mean(axis=0)
    centered = arr - mean
    scale = max(1.0, float(np.max(np.abs(arr))))
    if float(np.max(np.abs(centered))) <= 1e-12 * scale:
        raise DegenerateData("all rows are identical; no variance to decompose")

    basis = svd(centered, k)
    components = basis.v.T  # k x d
    explained = (basis.s * basis.s) / (n - 1)
    projections = centered @ components.T
    return PcaResult(
        n_components=k,
        components=components,
        explained_variance=explained,
        mean=mean,
        projections=projections,
    )
