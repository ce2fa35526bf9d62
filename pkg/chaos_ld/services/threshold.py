"""Histogram valley threshold between the regular and chaotic modes."""
import logging
from collections.abc import Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from chaos_ld import __version__
from chaos_ld.exceptions import ConfigurationError, InsufficientDataError, NoThresholdError
from chaos_ld.schemas.ensemble import DatasetMetadata, LabeledDataset, ThresholdResult
from chaos_ld.schemas.indicators import Label

logger = logging.getLogger(__name__)

MIN_VALUES = 200


def _smooth(counts: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with zero padding; the window is forced odd."""
    if window % 2 == 0:
        window += 1
    return uniform_filter1d(counts.astype(np.float64), size=window, mode="constant", cval=0.0)


def _two_peaks(
    smoothed: np.ndarray, min_separation: int, secondary_ratio: float
) -> tuple[int, int]:
    """Bin indices of the two highest peaks at least ``min_separation`` bins apart."""
    # zero border so a mode in the first or last bin still counts as a peak
    padded = np.pad(smoothed, 1)
    found, _ = find_peaks(padded, height=np.finfo(np.float64).tiny, distance=min_separation)
    peaks = sorted((int(i) - 1 for i in found), key=lambda i: (-smoothed[i], i))
    if not peaks:
        raise NoThresholdError("Histogram has no peak")
    if len(peaks) < 2 or smoothed[peaks[1]] < secondary_ratio * smoothed[peaks[0]]:
        raise NoThresholdError(
            "Histogram is unimodal: no second peak reaches "
            f"{secondary_ratio:.0%} of the first (all-regular or all-chaotic ensemble?)"
        )
    first, second = peaks[0], peaks[1]
    return min(first, second), max(first, second)


def _valley(
    values: np.ndarray, width: float, window: int, peak_lo: float, peak_hi: float
) -> float:
    """Center of the lowest smoothed bin strictly between the two peak locations.

    Only the stretch between the peaks is re-binned, at bin ``width``, with half a
    smoothing window of margin on either side.
    """
    margin = (window // 2 + 1) * width
    lo, hi = peak_lo - margin, peak_hi + margin
    bins = max(1, int(np.ceil((hi - lo) / width)))
    counts, edges = np.histogram(values, bins=bins, range=(lo, lo + bins * width))
    smoothed = _smooth(counts, window)
    centers = 0.5 * (edges[:-1] + edges[1:])
    inside = np.flatnonzero((centers > peak_lo) & (centers < peak_hi))
    if inside.size == 0:
        return 0.5 * (peak_lo + peak_hi)
    return float(centers[inside[np.argmin(smoothed[inside])]])


def find_threshold(
    values: Sequence[float] | np.ndarray,
    bins: int = 100,
    smoothing: int = 5,
    min_separation: int = 5,
    secondary_ratio: float = 0.05,
    max_iterations: int = 10,
    tolerance: float = 0.01,
) -> ThresholdResult:
    """Locate the valley between the two dominant modes of ``values``.

    A ``bins``-bin histogram over [min, max] is smoothed with a ``smoothing``-bin
    moving average; the two highest local maxima at least ``min_separation`` bins
    apart are the peaks and the lowest smoothed bin between them is the first
    threshold. Each refinement halves the bin width (keeping the smoothing width
    fixed in value units), re-bins only the stretch between the two peaks and
    re-locates the valley there, until it moves by less than
    ``tolerance`` of the data range or ``max_iterations`` refinements have run.

    Raises:
        InsufficientDataError: fewer than 200 finite values.
        NoThresholdError: the histogram is unimodal.
    """
    if min_separation < 1 or bins < 2 * min_separation or smoothing < 1:
        raise ConfigurationError(
            "Need a positive peak separation, at least 2 * min_separation bins "
            "and a positive smoothing"
        )
    data = np.asarray(values, dtype=np.float64)
    data = data[np.isfinite(data)]
    if data.size < MIN_VALUES:
        raise InsufficientDataError(
            f"Threshold search needs at least {MIN_VALUES} finite values, got {data.size}"
        )
    lo, hi = float(data.min()), float(data.max())
    if hi <= lo:
        raise NoThresholdError("All values are equal; the histogram is unimodal")
    data_range = hi - lo

    counts, edges = np.histogram(data, bins=bins, range=(lo, hi))
    smoothed = _smooth(counts, smoothing)
    i_lo, i_hi = _two_peaks(smoothed, min_separation, secondary_ratio)
    centers = 0.5 * (edges[:-1] + edges[1:])
    peak_lo, peak_hi = float(centers[i_lo]), float(centers[i_hi])
    between = np.arange(i_lo + 1, i_hi)
    if between.size:
        threshold = float(centers[between[np.argmin(smoothed[between])]])
    else:
        threshold = 0.5 * (peak_lo + peak_hi)

    converged = False
    iterations = 0
    for k in range(1, max_iterations + 1):
        iterations = k
        width = data_range / (bins * 2**k)
        refined = _valley(data, width, smoothing * 2**k, peak_lo, peak_hi)
        shift = abs(refined - threshold)
        logger.debug("Threshold refinement %d: %.8g (moved %.3g)", k, refined, shift)
        threshold = refined
        if shift < tolerance * data_range:
            converged = True
            break
    if not converged:
        logger.warning("Threshold did not settle after %d refinements", max_iterations)

    return ThresholdResult(
        threshold=threshold,
        peaks=(peak_lo, peak_hi),
        bin_edges=edges.tolist(),
        counts=counts.tolist(),
        bins=bins,
        smoothing=smoothing,
        iterations=iterations,
        converged=converged,
    )


def classify_by_threshold(
    values: Sequence[float] | np.ndarray, threshold: float, chaotic_above: bool = True
) -> np.ndarray:
    """0/1 labels from a threshold.

    Large log10 S means chaotic; for log10 SALI pass ``chaotic_above=False``.
    """
    data = np.asarray(values, dtype=np.float64)
    chaotic = data > threshold if chaotic_above else data < threshold
    return chaotic.astype(np.int64)


def relabel_dataset(dataset: LabeledDataset, threshold: float, column: str) -> LabeledDataset:
    """Copy of ``dataset`` with labels taken from a threshold on ``column``.

    Records with ``S = 0`` have no finite log10 S and are labeled regular.
    """
    if column == "log10_S":
        values = [-np.inf if r.log10_S is None else r.log10_S for r in dataset.records]
    else:
        values = [r.sali_log10 for r in dataset.records]
    # large log10 S and small log10 SALI both mean chaotic
    labels = classify_by_threshold(values, threshold, chaotic_above=column == "log10_S")
    records = [
        r.model_copy(update={"label": Label(int(label))})
        for r, label in zip(dataset.records, labels)
    ]
    relabeled = LabeledDataset(records=records)
    fields = {
        "label_counts": relabeled.label_counts(),
        "threshold": threshold,
        "threshold_column": column,
    }
    if dataset.metadata is not None:
        metadata = dataset.metadata.model_copy(update=fields)
    else:
        n = len(records)
        metadata = DatasetMetadata(
            package_version=__version__, record_count=n, attempts=n, discarded_count=0, **fields
        )
    return relabeled.model_copy(update={"metadata": metadata})
