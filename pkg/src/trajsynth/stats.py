"""Statistical comparison of generator types.

Per demonstration column, a one-way analysis of variance compares the
score distributions of the three generators, and frequency counts tally
how often one generator's scores exceed another's column average.
P-values come from the F-distribution survival function, evaluated
through a from-scratch regularized incomplete beta function (continued
fraction, absolute tolerance 1e-10).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InsufficientDataError
from .similarity import ScoreMatrix
from .trajio import format_float

_BETA_TOL = 1e-10
_BETA_MAX_ITER = 500
_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified
    Lentz iteration)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_TOL:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log(1.0 - x))
    front = math.exp(ln_front)
    # use whichever tail the continued fraction converges fastest on
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_survival(f: float, d1: int, d2: int) -> float:
    """P(F > f) for the F-distribution with (d1, d2) degrees of freedom."""
    if d1 < 1 or d2 < 1:
        raise ValueError("degrees of freedom must be at least 1")
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    x = d2 / (d2 + d1 * f)
    return betainc_reg(d2 / 2.0, d1 / 2.0, x)


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float  # +inf sentinel in the degenerate zero-within-variance case
    p_value: float
    df_between: int
    df_within: int
    group_means: tuple[float, ...]
    grand_mean: float
    degenerate: bool  # within-group variance was exactly zero while groups differed


def one_way_anova(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """F = MSB/MSW across the given groups.

    A zero within-group variance with differing group means (what a
    deterministic generator produces) is reported as f=+inf, p=0 with the
    degenerate flag set rather than raised.
    """
    if len(groups) < 2:
        raise InsufficientDataError("analysis of variance needs at least 2 groups")
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    if any(a.size < 2 for a in arrays):
        raise InsufficientDataError("every group needs at least 2 observations")
    k = len(arrays)
    n_total = sum(a.size for a in arrays)
    df_between = k - 1
    df_within = n_total - k
    grand = float(sum(a.sum() for a in arrays) / n_total)
    means = [float(a.mean()) for a in arrays]
    ssb = sum(a.size * (m - grand) ** 2 for a, m in zip(arrays, means))
    ssw = sum(float(((a - m) ** 2).sum()) for a, m in zip(arrays, means))
    msb = ssb / df_between
    msw = ssw / df_within
    if msw == 0.0:
        if msb > 0.0:
            return AnovaResult(f_stat=math.inf, p_value=0.0,
                               df_between=df_between, df_within=df_within,
                               group_means=tuple(means), grand_mean=grand,
                               degenerate=True)
        return AnovaResult(f_stat=0.0, p_value=1.0, df_between=df_between,
                           df_within=df_within, group_means=tuple(means),
                           grand_mean=grand, degenerate=False)
    f = msb / msw
    return AnovaResult(f_stat=f, p_value=f_survival(f, df_between, df_within),
                       df_between=df_between, df_within=df_within,
                       group_means=tuple(means), grand_mean=grand, degenerate=False)


def freq_above(scores: Sequence[float], baseline_avg: float) -> int:
    """How many scores are strictly greater than the baseline average."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise InsufficientDataError("no scores to count")
    return int((arr > baseline_avg).sum())


@dataclass(frozen=True)
class FreqRow:
    demo_label: str
    dagger_e_above_dqn: int
    dagger_plus_e_above_dqn: int
    dagger_plus_e_above_dagger_e: int


def _check_aligned(dqn: ScoreMatrix, dagger_e: ScoreMatrix,
                   dagger_plus_e: ScoreMatrix) -> None:
    labels = {m.demo_labels for m in (dqn, dagger_e, dagger_plus_e)}
    if len(labels) != 1:
        raise InsufficientDataError(
            "score matrices were built against different demonstration sets")


def anova_by_demo(dqn: ScoreMatrix, dagger_e: ScoreMatrix,
                  dagger_plus_e: ScoreMatrix) -> list[AnovaResult]:
    """One analysis per demonstration column, comparing the three
    generators' score distributions."""
    _check_aligned(dqn, dagger_e, dagger_plus_e)
    results = []
    for j in range(len(dqn.demo_labels)):
        results.append(one_way_anova([
            dqn.scores[:, j], dagger_e.scores[:, j], dagger_plus_e.scores[:, j]]))
    return results


def freq_by_demo(dqn: ScoreMatrix, dagger_e: ScoreMatrix,
                 dagger_plus_e: ScoreMatrix) -> list[FreqRow]:
    """Per demonstration column, counts of scores above a rival's average."""
    _check_aligned(dqn, dagger_e, dagger_plus_e)
    dqn_avg = dqn.demo_means()
    de_avg = dagger_e.demo_means()
    rows = []
    for j, label in enumerate(dqn.demo_labels):
        rows.append(FreqRow(
            demo_label=label,
            dagger_e_above_dqn=freq_above(dagger_e.scores[:, j], dqn_avg[j]),
            dagger_plus_e_above_dqn=freq_above(dagger_plus_e.scores[:, j], dqn_avg[j]),
            dagger_plus_e_above_dagger_e=freq_above(dagger_plus_e.scores[:, j], de_avg[j]),
        ))
    return rows


def _fmt_stat(v: float) -> str:
    return "inf" if math.isinf(v) else format_float(v)


def write_anova_csv(results: Sequence[AnovaResult], labels: Sequence[str],
                    path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["demo", "f_stat", "p_value", "df_between", "df_within",
                         "degenerate"])
        for label, r in zip(labels, results):
            writer.writerow([label, _fmt_stat(r.f_stat), format_float(r.p_value),
                             r.df_between, r.df_within, int(r.degenerate)])


def write_freq_csv(rows: Sequence[FreqRow], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["demo", "dagger_e_above_dqn_avg",
                         "dagger_plus_e_above_dqn_avg",
                         "dagger_plus_e_above_dagger_e_avg"])
        for r in rows:
            writer.writerow([r.demo_label, r.dagger_e_above_dqn,
                             r.dagger_plus_e_above_dqn,
                             r.dagger_plus_e_above_dagger_e])


def format_stats_tables(game_label: str, results: Sequence[AnovaResult],
                        rows: Sequence[FreqRow]) -> str:
    """Human-readable report: F (p) per demonstration, then the
    above-average frequency counts."""
    lines = [f"=== {game_label}: variance analysis per demonstration ==="]
    header = ["demo".ljust(10)] + [r.demo_label.rjust(12) for r in rows]
    lines.append("".join(header))
    f_cells = [("inf" if math.isinf(r.f_stat) else f"{r.f_stat:.2f}").rjust(12)
               for r in results]
    p_cells = [f"({r.p_value:.3g})".rjust(12) for r in results]
    lines.append("".join(["F".ljust(10)] + f_cells))
    lines.append("".join(["(p)".ljust(10)] + p_cells))
    lines.append("")
    lines.append(f"=== {game_label}: scores above rival average ===")
    lines.append("demo        daggerE>dqn_avg  dagger+E>dqn_avg  dagger+E>daggerE_avg")
    for r in rows:
        lines.append(f"{r.demo_label:<12}{r.dagger_e_above_dqn:>15}"
                     f"{r.dagger_plus_e_above_dqn:>18}"
                     f"{r.dagger_plus_e_above_dagger_e:>22}")
    return "\n".join(lines) + "\n"
