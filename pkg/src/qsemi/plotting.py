"""Figures for the report commands.  Always rendered off-screen to files."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FLOOR = 1e-18


def _log(values) -> np.ndarray:
    return np.log10(np.maximum(np.abs(np.asarray(values, dtype=float)), FLOOR))


def _save(fig, out_dir, name: str) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    target = path / name
    fig.tight_layout()
    fig.savefig(target, dpi=120)
    plt.close(fig)
    return target


def residual_bars(residuals: dict, tol: float, title: str, out_dir, name: str) -> Path:
    """Horizontal bars of log10 residuals against the tolerance line."""
    keys = list(residuals)
    fig, ax = plt.subplots(figsize=(6.4, 0.45 * len(keys) + 1.2))
    vals = _log([residuals[k] for k in keys])
    colors = ["tab:green" if abs(residuals[k]) <= tol else "tab:red" for k in keys]
    ax.barh(keys, vals - np.log10(FLOOR), left=np.log10(FLOOR), color=colors)
    ax.axvline(np.log10(tol), color="k", ls="--", lw=1, label=f"tol = {tol:g}")
    ax.set_xlabel("log10 residual")
    ax.set_title(title)
    ax.legend(loc="lower right")
    ax.invert_yaxis()
    return _save(fig, out_dir, name)


def spectra(densities: Sequence[Sequence[np.ndarray]], labels: Sequence[str], out_dir, name: str) -> Path:
    """Eigenvalues of every density block, one column per state."""
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(densities) + 2), 3.6))
    for x, dens in enumerate(densities):
        lam = np.concatenate([np.linalg.eigvalsh((r + r.conj().T) / 2) for r in dens])
        ax.scatter(np.full(lam.size, x), lam, s=18, alpha=0.7)
    ax.set_xticks(range(len(densities)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("density eigenvalue")
    ax.set_title("idempotent states")
    return _save(fig, out_dir, name)


def matrix_heatmap(mat: np.ndarray, title: str, out_dir, name: str) -> Path:
    fig, ax = plt.subplots(figsize=(4.8, 4.2))
    im = ax.imshow(np.abs(mat), cmap="viridis", aspect="auto", interpolation="nearest")
    fig.colorbar(im, ax=ax, label="|entry|")
    ax.set_title(title)
    ax.set_xlabel("column")
    ax.set_ylabel("row")
    return _save(fig, out_dir, name)


def condition_panel(conditions: dict, tol: float, out_dir, name: str) -> Path:
    """Five-condition residuals plus a truth row."""
    keys = list(conditions)
    res = [conditions[k][1] for k in keys]
    holds = [conditions[k][0] for k in keys]
    fig, ax = plt.subplots(figsize=(6.4, 3.2))
    ax.bar(keys, _log(res) - np.log10(FLOOR), bottom=np.log10(FLOOR), color=["tab:green" if h else "tab:red" for h in holds])
    ax.axhline(np.log10(tol), color="k", ls="--", lw=1)
    ax.set_ylabel("log10 residual")
    ax.set_title("Haar-type conditions (green = holds)")
    plt.setp(ax.get_xticklabels(), rotation=20, ha="right")
    return _save(fig, out_dir, name)
