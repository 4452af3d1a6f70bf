"""Surface similarity between trajectories.

A trajectory becomes a sentence with one compound token per step,
"o<obs_id>-a<action_id>", and two sentences are compared with a unigram
matching score: with m the multiset-intersection count of their tokens,

    score = (m / |translation|) * (m / |reference|).

The mapping is exact-string and one-to-one, so the score is symmetric,
lies in [0, 1], and — having no fragmentation penalty — is invariant
under token reordering.  That order-insensitivity is a documented
property of the score, not an accident.
"""
from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptyTrajectoryError, MapMismatchError, TrajectoryFormatError
from .gridworld import GridMap
from .shaping import DemoSet
from .trajio import Source, Trajectory, format_float

_TOKEN_RE = re.compile(r"^o(\d+)-a(\d+)$")


@dataclass(frozen=True)
class TrajWords:
    """One token per (state, action) step; the terminal state, where no
    action is taken, contributes nothing."""

    tokens: tuple[str, ...]


def to_words(traj: Trajectory, gm: GridMap) -> TrajWords:
    if traj.map_id != gm.map_id:
        raise MapMismatchError(
            f"trajectory is for map {traj.map_id}, not {gm.map_id}")
    return TrajWords(tuple(f"o{s.obs_id}-a{s.action_id}" for s in traj.steps))


def parse_token(token: str) -> tuple[int, int]:
    """Inverse of the token format: returns (obs_id, action_id)."""
    m = _TOKEN_RE.match(token)
    if m is None:
        raise ValueError(f"not a trajectory token: {token!r}")
    return int(m.group(1)), int(m.group(2))


def meteor(translation: TrajWords, reference: TrajWords) -> float:
    """Unigram matching score of the two token sequences (see module docs)."""
    if not translation.tokens or not reference.tokens:
        raise EmptyTrajectoryError("cannot score an empty token sequence")
    m = sum((Counter(translation.tokens) & Counter(reference.tokens)).values())
    return (m / len(translation.tokens)) * (m / len(reference.tokens))


@dataclass(frozen=True)
class ScoreMatrix:
    """Generated-trajectory x demonstration score matrix for one source."""

    scores: np.ndarray  # shape (n_generated, n_demos)
    demo_labels: tuple[str, ...]
    source: Source

    def __post_init__(self):
        if self.scores.ndim != 2 or self.scores.shape[1] != len(self.demo_labels):
            raise ValueError("score matrix shape disagrees with demo labels")
        if self.scores.size and not ((self.scores >= 0.0) & (self.scores <= 1.0)).all():
            raise ValueError("similarity scores must lie in [0, 1]")

    @property
    def n_generated(self) -> int:
        return self.scores.shape[0]

    def demo_means(self) -> np.ndarray:
        return self.scores.mean(axis=0)


def score_matrix(generated: Sequence[Trajectory], demos: DemoSet,
                 gm: GridMap) -> ScoreMatrix:
    """Entry (i, j) scores generated trajectory i against demonstration j."""
    if not generated:
        raise EmptyTrajectoryError("no generated trajectories to score")
    sources = {t.source for t in generated}
    if len(sources) != 1:
        raise TrajectoryFormatError(
            f"generated trajectories mix sources {sorted(s.value for s in sources)}")
    demo_words = [to_words(t, gm) for t in demos.trajectories]
    scores = np.empty((len(generated), len(demo_words)), dtype=np.float64)
    for i, traj in enumerate(generated):
        words = to_words(traj, gm)
        for j, ref in enumerate(demo_words):
            scores[i, j] = meteor(words, ref)
    labels = tuple(f"demo_{j + 1}" for j in range(len(demo_words)))
    return ScoreMatrix(scores=scores, demo_labels=labels, source=next(iter(sources)))


def write_score_csv(matrix: ScoreMatrix, path: Path) -> None:
    """Header of demo labels, one row per generated trajectory, and a
    final row of per-demo means."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trajectory", *matrix.demo_labels])
        for i in range(matrix.n_generated):
            writer.writerow([i + 1, *(format_float(v) for v in matrix.scores[i])])
        writer.writerow(["mean", *(format_float(v) for v in matrix.demo_means())])


def read_score_csv(path: Path, source: Source) -> ScoreMatrix:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3 or rows[0][:1] != ["trajectory"] or rows[-1][:1] != ["mean"]:
        raise TrajectoryFormatError(f"{path} is not a score matrix file")
    labels = tuple(rows[0][1:])
    try:
        scores = np.array([[float(v) for v in row[1:]] for row in rows[1:-1]])
        means = np.array([float(v) for v in rows[-1][1:]])
    except ValueError as exc:
        raise TrajectoryFormatError(f"{path}: non-numeric score cell: {exc}") from exc
    matrix = ScoreMatrix(scores=scores, demo_labels=labels, source=source)
    if not np.allclose(matrix.demo_means(), means, rtol=0.0, atol=1e-12):
        raise TrajectoryFormatError(f"{path}: stored means disagree with entries")
    return matrix
