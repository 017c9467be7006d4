"""Separation quality and selection accuracy metrics.

The distortion measure throughout is the scale-invariant
signal-to-distortion ratio; a perfect (or perfectly anti-phase)
reconstruction is capped at +100 dB so aggregates stay finite.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "SDR_CAP_DB",
    "EvalResult",
    "si_sdr",
    "oracle_permutation",
    "sdr_improvement",
    "AccuracySummary",
    "accuracy",
    "write_results_csv",
    "read_results_csv",
]

SDR_CAP_DB = 100.0

CSV_HEADER = ["trial", "rt60", "sir_init", "algorithm", "oracle_sdr", "sdri", "selected", "correct"]


def _as_1d(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[0] == 1:
        arr = arr[0]
    if arr.ndim != 1:
        raise ValueError("expected a mono signal")
    return arr


def si_sdr(estimate, reference) -> float:
    """Scale-invariant SDR of an estimate against a reference, in dB.

    Projects the estimate onto the reference (``alpha = <est, ref> /
    ||ref||^2``) and measures ``10 log10(||alpha ref||^2 / ||alpha ref -
    est||^2)``, capped at +100 dB.
    """
    est, ref = _as_1d(estimate), _as_1d(reference)
    if est.shape != ref.shape:
        raise ValueError(f"length mismatch: {est.shape[0]} vs {ref.shape[0]}")
    ref_energy = float(ref @ ref)
    if ref_energy <= 0:
        raise ValueError("reference signal has zero energy")
    alpha = float(est @ ref) / ref_energy
    target = alpha * ref
    noise = target - est
    noise_energy = float(noise @ noise)
    target_energy = float(target @ target)
    if target_energy <= 0:
        return -SDR_CAP_DB  # estimate carries nothing of the reference
    if noise_energy <= 0 or target_energy / noise_energy > 10.0 ** (SDR_CAP_DB / 10.0):
        return SDR_CAP_DB
    return 10.0 * np.log10(target_energy / noise_energy)


def oracle_permutation(estimates, references) -> tuple[tuple[int, ...], list[float]]:
    """Best source-index assignment by exhaustive search.

    Args:
        estimates, references: equal-length lists of mono signals,
            at most four of each.

    Returns:
        ``(permutation, per_source_sdr)`` where ``permutation[i]`` is the
        index of the estimate assigned to reference i and the SDR list
        follows the reference order.
    """
    if len(estimates) != len(references):
        raise ValueError("estimate and reference counts differ")
    n = len(references)
    if n > 4:
        raise ValueError("exhaustive permutation search is limited to four sources")
    table = np.array(
        [[si_sdr(est, ref) for est in estimates] for ref in references]
    )  # (ref, est)
    best_perm, best_mean = None, -np.inf
    for perm in itertools.permutations(range(n)):
        mean = float(np.mean([table[i, perm[i]] for i in range(n)]))
        if mean > best_mean:
            best_perm, best_mean = perm, mean
    sdrs = [float(table[i, best_perm[i]]) for i in range(n)]
    return best_perm, sdrs


def sdr_improvement(extracted, target_reference, mixture_at_reference) -> float:
    """SDR gain of the extraction over the unprocessed mixture."""
    return si_sdr(extracted, target_reference) - si_sdr(mixture_at_reference, target_reference)


@dataclass
class EvalResult:
    """Outcome of one extraction trial."""

    per_source_sdr: list[float]
    sdr_improvement: list[float]
    permutation: tuple[int, ...]
    selected_index: int | None = None
    correct: bool | None = None
    trial: str = ""
    rt60: float | None = None
    sir_init: float | None = None
    algorithm: str = ""

    def __post_init__(self) -> None:
        if sorted(self.permutation) != list(range(len(self.permutation))):
            raise ValueError(f"{self.permutation} is not a permutation")

    @property
    def oracle_sdr(self) -> float:
        return float(np.mean(self.per_source_sdr))

    @property
    def selected_sdri(self) -> float | None:
        if self.selected_index is None:
            return None
        return self.sdr_improvement[self.selected_index]


@dataclass
class AccuracySummary:
    """Selection accuracy with 1 dB histogram breakdowns."""

    rate: float
    n_trials: int
    # bins keyed by the left edge (integer dB): value = [n_trials, n_correct]
    by_oracle_sdr: dict[int, list[int]] = field(default_factory=dict)
    by_sdri: dict[int, list[int]] = field(default_factory=dict)


def accuracy(trials: list[EvalResult], csv_path: str | Path | None = None) -> AccuracySummary:
    """Aggregate correctness over trials into a rate and 1 dB histograms.

    Every trial must carry a ``correct`` flag.  Histograms bin by the
    oracle SDR (mean per-source SDR) and by the SDR improvement of the
    selected source.  When ``csv_path`` is given the histogram rows are
    also written as CSV.
    """
    if not trials:
        raise ValueError("no trials to aggregate")
    if any(t.correct is None for t in trials):
        raise ValueError("every trial needs a correctness flag")
    n_correct = sum(bool(t.correct) for t in trials)
    summary = AccuracySummary(rate=n_correct / len(trials), n_trials=len(trials))
    for t in trials:
        key = int(np.floor(t.oracle_sdr))
        summary.by_oracle_sdr.setdefault(key, [0, 0])
        summary.by_oracle_sdr[key][0] += 1
        summary.by_oracle_sdr[key][1] += int(bool(t.correct))
        sdri = t.selected_sdri
        if sdri is not None:
            key = int(np.floor(sdri))
            summary.by_sdri.setdefault(key, [0, 0])
            summary.by_sdri[key][0] += 1
            summary.by_sdri[key][1] += int(bool(t.correct))
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["histogram", "bin_left_db", "n_trials", "n_correct", "rate"])
            for name, bins in (("oracle_sdr", summary.by_oracle_sdr), ("sdri", summary.by_sdri)):
                for key in sorted(bins):
                    n, c = bins[key]
                    writer.writerow([name, key, n, c, f"{c / n:.6f}"])
    return summary


def write_results_csv(path: str | Path, results: list[EvalResult]) -> None:
    """Write one row per trial using the fixed result schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in results:
            writer.writerow(
                [
                    r.trial,
                    "" if r.rt60 is None else f"{r.rt60:g}",
                    "" if r.sir_init is None else f"{r.sir_init:g}",
                    r.algorithm,
                    f"{r.oracle_sdr:.6f}",
                    "" if r.selected_sdri is None else f"{r.selected_sdri:.6f}",
                    "" if r.selected_index is None else r.selected_index,
                    "" if r.correct is None else int(bool(r.correct)),
                ]
            )


def read_results_csv(path: str | Path) -> list[dict]:
    """Rows of a results CSV as dicts with numeric fields parsed."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for rec in reader:
            rows.append(
                {
                    "trial": rec["trial"],
                    "rt60": float(rec["rt60"]) if rec["rt60"] else None,
                    "sir_init": float(rec["sir_init"]) if rec["sir_init"] else None,
                    "algorithm": rec["algorithm"],
                    "oracle_sdr": float(rec["oracle_sdr"]),
                    "sdri": float(rec["sdri"]) if rec["sdri"] else None,
                    "selected": int(rec["selected"]) if rec["selected"] else None,
                    "correct": bool(int(rec["correct"])) if rec["correct"] else None,
                }
            )
    return rows
