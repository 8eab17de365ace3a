"""File formats: observation data directories, activation matrix and
detection CSVs, and standalone SVG heatmaps.

Data directory layout: one ``set_<k>.csv`` per data set (k = 0, 1, ...),
no header, rows are observation dimensions and columns are samples. All
sets must have the same number of columns.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np

from .bootstrap import BootstrapNull
from .coherence import CoherenceSpectrum
from .detector import DetectionResult
from .lfdr import PvalueMixtureModel
from .model import ActivationMatrix, MultiSetSample, validate_sample

_SET_FILE = re.compile(r"set_(\d+)\.csv$")


def write_dataset(sample: MultiSetSample, directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, x in enumerate(sample.sets):
        path = d / f"set_{k}.csv"
        np.savetxt(path, x, delimiter=",", fmt="%.17g")
        paths.append(path)
    return paths


def read_dataset(directory) -> MultiSetSample:
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"data directory not found: {d}")
    found = {}
    for path in d.iterdir():
        m = _SET_FILE.match(path.name)
        if m:
            found[int(m.group(1))] = path
    if not found:
        raise FileNotFoundError(f"no set_<k>.csv files in {d}")
    if sorted(found) != list(range(len(found))):
        raise ValueError(f"set files in {d} are not numbered 0..{len(found) - 1}")
    sets = []
    for k in range(len(found)):
        try:
            x = np.loadtxt(found[k], delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ValueError(f"cannot parse {found[k]}: {exc}") from exc
        sets.append(x)
    sample = MultiSetSample(tuple(sets))
    validate_sample(sample)
    return sample


def write_matrix(M, path, fmt: str = "%d") -> None:
    """Plain J x K CSV without header."""
    entries = M.entries if isinstance(M, ActivationMatrix) else np.asarray(M)
    np.savetxt(path, entries, delimiter=",", fmt=fmt)


def read_activation(path) -> ActivationMatrix:
    return ActivationMatrix(np.loadtxt(path, delimiter=",", ndmin=2).astype(np.int8))


def write_detection(result: DetectionResult, path) -> None:
    """Activation matrix rows followed by ``#``-prefixed scalar diagnostics."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        for row in result.M_hat.entries:
            w.writerow(int(v) for v in row)
        fh.write(f"# fdr_hat={result.fdr_hat!r}\n")
        fh.write(f"# fdr_cmp_hat={result.fdr_cmp_hat!r}\n")
        fh.write(f"# m_final={result.m_final}\n")
        fh.write("# removed_components=" + " ".join(map(str, result.removed_components)) + "\n")


def write_spectrum(coh: CoherenceSpectrum, directory) -> None:
    """``eigenvalues.csv`` (all, descending) and ``chunk_norms.csv`` (J x K)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    np.savetxt(d / "eigenvalues.csv", coh.eigenvalues, delimiter=",", fmt="%.17g")
    np.savetxt(d / "chunk_norms.csv", coh.chunk_norms, delimiter=",", fmt="%.17g")


def write_null_stats(null: BootstrapNull, path) -> None:
    """One row per atom: j, k, bootstrap mean, then the B sorted recentered statistics."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "k", "boot_mean"] + [f"t{b}" for b in range(null.B)])
        for j, k in np.ndindex(null.J, null.K):
            w.writerow([j, k, repr(float(null.boot_means[j, k]))]
                       + [repr(float(t)) for t in null.null_stats[j, k]])


def write_model(model: PvalueMixtureModel, path) -> None:
    """Key-value CSV of the fitted p-value mixture."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "value"])
        w.writerow(["pi0", repr(float(model.pi0))])
        for m, (wm, am) in enumerate(zip(model.weights, model.shapes)):
            w.writerow([f"weight{m}", repr(float(wm))])
            w.writerow([f"shape{m}", repr(float(am))])
        w.writerow(["loglik", repr(float(model.loglik))])
        w.writerow(["bic", repr(float(model.bic))])
        w.writerow(["resolution", "" if model.resolution is None else repr(model.resolution)])
        w.writerow(["converged", int(model.converged)])


def _color(v: float) -> str:
    """White to dark blue."""
    v = float(np.clip(v, 0.0, 1.0))
    r = round(255 - v * (255 - 8))
    g = round(255 - v * (255 - 48))
    b = round(255 - v * (255 - 107))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(values, title: str = "", cell: int = 24) -> str:
    """Standalone SVG heatmap of a J x K matrix with values in [0, 1]."""
    values = np.asarray(values, dtype=float)
    J, K = values.shape
    left, top = 40, 40 if title else 20
    width, height = left + K * cell + 10, top + J * cell + 30
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">']
    if title:
        out.append(f'<text x="{left}" y="20" font-size="12">{_escape(title)}</text>')
    for j in range(J):
        y = top + j * cell
        out.append(f'<text x="{left - 6}" y="{y + cell / 2 + 3:g}" text-anchor="end">{j + 1}</text>')
        for k in range(K):
            v = values[j, k]
            out.append(f'<rect x="{left + k * cell}" y="{y}" width="{cell}" height="{cell}" '
                       f'fill="{_color(v)}" stroke="#cccccc"><title>{v:.3f}</title></rect>')
    y = top + J * cell + 14
    for k in range(K):
        out.append(f'<text x="{left + k * cell + cell / 2:g}" y="{y}" '
                   f'text-anchor="middle">{k + 1}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_heatmap(values, path, title: str = "") -> None:
    Path(path).write_text(heatmap_svg(values, title))
