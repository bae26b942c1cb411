"""Quantitative evaluation: feature-matching errors, cumulative geodesic
error curves, and CSV/SVG report emission."""

from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np
from scipy.sparse.csgraph import dijkstra

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

DEFAULT_THRESHOLDS = np.linspace(0.0, 0.25, 101)


@dataclass(frozen=True)
class ErrorCurve:
    """Cumulative error curve: fraction of vertices at or below each
    normalized geodesic-error threshold."""

    thresholds: np.ndarray
    fractions: np.ndarray

    def __post_init__(self):
        if self.thresholds.shape != self.fractions.shape:
            raise ValueError("thresholds and fractions must have equal length")
        if np.any(np.diff(self.thresholds) < 0):
            raise ValueError("thresholds must be nondecreasing")
        if np.any(np.diff(self.fractions) < -1e-15) or (self.fractions > 1 + 1e-15).any():
            raise ValueError("fractions must be nondecreasing and at most 1")


def feature_errors(B1, B2, C, desc1, desc2):
    """Per-mode and per-vertex average matching errors.

    e1 (length k) measures alignment of the projected descriptors in the
    spectral domain; e2 (length m2) measures reconstruction of the raw
    target descriptors after transfer through the map.
    """
    X = B1.T @ desc1.scaled
    Y = B2.T @ desc2.scaled
    n = desc1.scaled.shape[1]
    if desc2.scaled.shape[1] != n:
        raise ValueError("descriptor sets must have the same number of columns")
    CX = C @ X
    e1 = np.sum((CX - Y) ** 2, axis=1) / n
    e2 = np.sum((B2 @ CX - desc2.raw) ** 2, axis=1) / n
    return e1, e2


def geodesic_error_curve(pmap, gt, mesh2, thresholds=None):
    """Cumulative geodesic error of a map against ground truth.

    Per source vertex the error is the geodesic distance on mesh 2 between
    the mapped and true targets, normalized by sqrt of mesh 2's area.
    """
    if pmap.source_count != gt.source_count:
        raise ValueError("map and ground truth must share the source vertex count")
    thresholds = DEFAULT_THRESHOLDS if thresholds is None else np.asarray(thresholds, float)
    graph = mesh2.edge_graph()
    uniq, inv = np.unique(gt.targets, return_inverse=True)
    dist = dijkstra(graph, directed=False, indices=uniq)
    dist = np.atleast_2d(dist)
    errors = dist[inv, pmap.targets]
    if not np.all(np.isfinite(errors)):
        raise ValueError("mesh 2 is disconnected: geodesic errors undefined")
    errors = errors / np.sqrt(mesh2.total_area())
    fractions = np.mean(errors[:, None] <= thresholds[None, :], axis=0)
    return ErrorCurve(thresholds=thresholds, fractions=fractions)


def _write_curve_csv(path, curve):
    with open(path, "w") as fh:
        fh.write("threshold,fraction\n")
        for t, f in zip(curve.thresholds, curve.fractions):
            fh.write(f"{t:.17g},{f:.17g}\n")


def _write_history_csv(path, record):
    with open(path, "w") as fh:
        fh.write("iter,energy,primal,dual,rho\n")
        for i, (e, p, d, r) in enumerate(
            zip(record.energy, record.primal, record.dual, record.rho)
        ):
            fh.write(f"{i},{e:.17g},{p:.17g},{d:.17g},{r:.17g}\n")


def emit_report(curves, histories, out_dir):
    """Write CSVs and SVG panels for error curves and solver histories.

    Parameters
    ----------
    curves : dict of name -> ErrorCurve
    histories : dict of name -> ResidualRecord
    out_dir : path

    Returns the list of written file paths; ``index.txt`` lists them all.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        for name, curve in curves.items():
            path = out / f"{name}_curve.csv"
            _write_curve_csv(path, curve)
            written.append(path)
        if curves:
            fig, ax = plt.subplots(figsize=(5, 4))
            for name, curve in curves.items():
                ax.plot(curve.thresholds, curve.fractions, label=name)
            ax.set_xlabel("normalized geodesic error")
            ax.set_ylabel("fraction of correspondences")
            ax.set_ylim(0, 1.02)
            ax.legend(fontsize=8)
            path = out / "curves.svg"
            fig.savefig(path, format="svg")
            plt.close(fig)
            written.append(path)
        for name, record in histories.items():
            path = out / f"{name}_history.csv"
            _write_history_csv(path, record)
            written.append(path)
            if len(record) > 0:
                fig, axes = plt.subplots(1, 3, figsize=(11, 3.2))
                iters = np.arange(len(record))
                for ax, series, label in zip(
                    axes,
                    (record.energy, record.primal, record.dual),
                    ("energy", "primal residual", "dual residual"),
                ):
                    ax.plot(iters, series)
                    ax.set_xlabel("iteration")
                    ax.set_title(label)
                    positive = [v for v in series if v > 0]
                    if positive and min(positive) > 0 and max(series) / min(positive) > 50:
                        ax.set_yscale("log")
                fig.tight_layout()
                path = out / f"{name}_residuals.svg"
                fig.savefig(path, format="svg")
                plt.close(fig)
                written.append(path)
    except OSError as exc:
        raise OSError(f"report emission failed at {exc.filename}: {exc}") from exc
    index = out / "index.txt"
    index.write_text("".join(p.name + "\n" for p in written))
    written.append(index)
    return written
