"""End-to-end diarization: affinity, speaker counting, spectral clustering.

With overlap flags available, the speaker count is estimated from the
single-speaker rows only (mixture embeddings distort the eigengap analysis)
and the graph is built with the overlap-aware binarization; without flags the
run degrades to classical single-label spectral diarization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import affinity, speaker_count, spectral
from .ingest import EmbeddingSequence, OverlapVector, Timeline, assignment_to_timeline
from .speaker_count import EigengapReport
from .spectral import AssignmentMatrix, DiscretizeResult

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiarizationConfig:
    p_min: int = 2
    p_max: int = 20
    max_speakers: int = 10
    epsilon: float = 1e-10
    max_iters: int = 100
    tol: float = 1e-6
    restarts: int = 3
    seed: int = 0


@dataclass
class DiarizationResult:
    timeline: Timeline
    assignment: AssignmentMatrix
    report: EigengapReport
    discretization: DiscretizeResult
    bundle: affinity.AffinityBundle

    @property
    def num_speakers(self) -> int:
        return self.report.k_hat


def diarize_embeddings(
    seq: EmbeddingSequence,
    overlap: OverlapVector | None = None,
    config: DiarizationConfig = DiarizationConfig(),
) -> DiarizationResult:
    """Cluster an embedding sequence into a speaker timeline.

    Args:
        seq: validated embedding sequence.
        overlap: per-segment overlap flags; None means no overlaps.
        config: sweep bounds and discretization settings.

    Returns:
        DiarizationResult with the hypothesis timeline and diagnostics.
    """
    n = len(seq)
    if overlap is None:
        overlap = OverlapVector.zeros(n)
    raw = affinity.cosine_affinity(seq)

    flags = overlap.flags
    singles = np.flatnonzero(flags == 0)
    # Counting needs a meaningful sweep over the rows it sees; with too few
    # single-speaker rows fall back to the full matrix.
    use_submatrix = overlap.any() and singles.size > config.p_min + 1
    if overlap.any() and not use_submatrix:
        log.warning(
            "only %d non-overlap segments; estimating the speaker count "
            "on the full affinity",
            singles.size,
        )
    estimate_input = raw[np.ix_(singles, singles)] if use_submatrix else raw
    report = speaker_count.estimate(
        estimate_input,
        p_min=config.p_min,
        p_max=config.p_max,
        epsilon=config.epsilon,
        max_speakers=config.max_speakers,
    )
    if overlap.any() and report.k_hat < 2:
        # an overlapping segment means two concurrent speakers by definition
        log.warning("overlap flags present; raising speaker count from 1 to 2")
        report.k_hat = 2
    log.info("binarization factor p=%d, estimated speakers K=%d", report.p_hat, report.k_hat)

    bundle = affinity.build_bundle(raw, report.p_hat, overlap)
    solution = spectral.continuous_solve(bundle.binarized, bundle.degree, report.k_hat)
    result = spectral.discretize_full(
        solution,
        overlap,
        max_iters=config.max_iters,
        tol=config.tol,
        restarts=config.restarts,
        seed=config.seed,
    )
    timeline = assignment_to_timeline(result.assignment, seq.spans)
    return DiarizationResult(timeline, result.assignment, report, result, bundle)
