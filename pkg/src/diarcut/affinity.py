"""Cosine affinity, row-wise binarization and graph Laplacian construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .ingest import EmbeddingSequence, OverlapVector

# Entries within this distance of the row's p-th largest value count as tied
# with it and are kept. Mathematically equal similarities (duplicate vectors,
# symmetric mixtures) differ by ulps after dot products; an exact cutoff would
# split such classes by accident of column order.
TIE_EPS = 1e-9


@dataclass
class AffinityBundle:
    """Raw affinity with its binarized graph, degrees and Laplacian."""

    raw: np.ndarray
    p: int
    binarized: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray


def cosine_affinity(seq: EmbeddingSequence) -> np.ndarray:
    """Pairwise cosine similarity matrix of the segment embeddings.

    Args:
        seq: embedding sequence; every vector must have positive norm.

    Returns:
        N x N symmetric matrix with entries in [-1, 1] and unit diagonal.
    """
    vecs = np.asarray(seq.vectors, dtype=float)
    norms = np.linalg.norm(vecs, axis=1)
    if not (norms > 0).all():
        raise ContractError("cosine affinity requires nonzero embedding vectors")
    unit = vecs / norms[:, None]
    aff = unit @ unit.T
    aff = 0.5 * (aff + aff.T)
    np.fill_diagonal(aff, 1.0)
    return aff


def p_binarize(affinity: np.ndarray, p: int) -> np.ndarray:
    """Keep the p largest values per row as 1, zero the rest, then symmetrize.

    Per row the cutoff is the p-th largest value; every entry tied with the
    cutoff (within TIE_EPS) is kept, so duplicate similarities are treated as
    one class and the result does not depend on column order. The averaged
    symmetrization (A_p + A_p^T) / 2 yields entries in {0, 0.5, 1}.

    Args:
        affinity: square similarity matrix.
        p: binarization factor, 1 <= p <= N; the diagonal counts toward p.

    Returns:
        Symmetric binarized matrix with entries in {0, 0.5, 1}.
    """
    aff = np.asarray(affinity, dtype=float)
    n = aff.shape[0]
    if aff.ndim != 2 or aff.shape[1] != n:
        raise ContractError("affinity must be square")
    if not 1 <= p <= n:
        raise ContractError(f"binarization factor p={p} outside [1, {n}]")
    row_sorted = np.sort(aff, axis=1)[:, ::-1]
    cutoff = row_sorted[:, p - 1]
    kept = (aff >= cutoff[:, None] - TIE_EPS).astype(float)
    return 0.5 * (kept + kept.T)


def overlap_aware_binarize(
    affinity: np.ndarray, p: int, overlap: OverlapVector
) -> np.ndarray:
    """Binarize with overlap-flagged rows restricted to non-flagged columns.

    Embeddings of overlapping segments are unreliable mixtures; letting them
    pick their neighbors among each other builds spurious mixture clusters.
    Flagged rows therefore select from single-speaker columns only, and get a
    doubled budget (2p) because they carry evidence for two clusters.
    Non-flagged rows are binarized exactly as :func:`p_binarize`.
    """
    aff = np.asarray(affinity, dtype=float)
    n = aff.shape[0]
    flags = np.asarray(overlap.flags)
    if len(flags) != n:
        raise ContractError("overlap vector length does not match affinity size")
    if not flags.any():
        return p_binarize(aff, p)
    single_cols = np.flatnonzero(flags == 0)
    if single_cols.size == 0:
        return p_binarize(aff, p)
    kept = np.zeros_like(aff)
    plain = np.flatnonzero(flags == 0)
    if plain.size:
        sub_sorted = np.sort(aff[plain], axis=1)[:, ::-1]
        cutoff = sub_sorted[:, min(p, n) - 1]
        kept[plain] = aff[plain] >= cutoff[:, None] - TIE_EPS
    flagged = np.flatnonzero(flags == 1)
    budget = min(2 * p, single_cols.size)
    for i in flagged:
        vals = aff[i, single_cols]
        cutoff_i = np.sort(vals)[::-1][budget - 1]
        kept[i, single_cols[vals >= cutoff_i - TIE_EPS]] = 1.0
    return 0.5 * (kept + kept.T)


def laplacian(binarized: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Degree vector and unnormalized Laplacian L = diag(d) - A.

    Args:
        binarized: symmetric nonnegative matrix (tolerance 1e-9).

    Returns:
        (degree, laplacian); rows of the Laplacian sum to zero and the matrix
        is positive semidefinite.
    """
    mat = np.asarray(binarized, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ContractError("binarized affinity must be square")
    if np.abs(mat - mat.T).max(initial=0.0) > 1e-9:
        raise ContractError("binarized affinity must be symmetric")
    if mat.size and mat.min() < 0:
        raise ContractError("binarized affinity must be nonnegative")
    degree = mat.sum(axis=1)
    lap = np.diag(degree) - mat
    return degree, lap


def build_bundle(
    affinity: np.ndarray, p: int, overlap: OverlapVector | None = None
) -> AffinityBundle:
    """Bundle the binarized graph, degrees and Laplacian for one p."""
    if overlap is not None and overlap.any():
        binarized = overlap_aware_binarize(affinity, p, overlap)
    else:
        binarized = p_binarize(affinity, p)
    degree, lap = laplacian(binarized)
    return AffinityBundle(np.asarray(affinity, dtype=float), p, binarized, degree, lap)
