"""Load aggregate CSVs and render regret curves with standard-error bands.

Rendering is deterministic: fixed figure geometry, colors derived from a
stable hash of each curve's label, no timestamps in the PNG metadata. The
same inputs always produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

EXPECTED_HEADER = ["t", "regret_kind", "comparator_id", "mean", "stderr", "n_runs"]


class SchemaError(ValueError):
    """Input CSV does not match the aggregate schema."""


@dataclass
class CurveData:
    label: str
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray


@dataclass
class FigureSpec:
    """What to draw: one (csv, label) pair per curve, for one regret kind."""

    inputs: list[tuple[str, str]]  # (aggregate.csv path, curve label)
    regret_kind: str
    output: str
    comparator_id: Optional[str] = None
    log_x: bool = False
    log_y: bool = False
    title: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "FigureSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown figure spec fields: {sorted(extra)}")
        d = dict(d)
        d["inputs"] = [tuple(pair) for pair in d["inputs"]]
        return cls(**d)


def load_series(path: str | Path, regret_kind: str,
                comparator_id: Optional[str] = None, label: Optional[str] = None) -> CurveData:
    """Read one regret series from an aggregate CSV.

    Raises :class:`SchemaError` naming the offending columns on a header
    mismatch, and :class:`ValueError` when the requested kind is missing or
    names several comparators.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {EXPECTED_HEADER}") from None
        if header != EXPECTED_HEADER:
            unexpected = [c for c in header if c not in EXPECTED_HEADER]
            missing = [c for c in EXPECTED_HEADER if c not in header]
            raise SchemaError(
                f"{path}: bad header; unexpected columns {unexpected}, missing columns {missing}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(EXPECTED_HEADER):
                raise SchemaError(f"{path}:{lineno}: expected {len(EXPECTED_HEADER)} fields, got {len(row)}")
            rows.append(row)
    picked = [r for r in rows if r[1] == regret_kind]
    if comparator_id is not None:
        picked = [r for r in picked if r[2] == comparator_id]
    if not picked:
        kinds = sorted({r[1] for r in rows})
        raise ValueError(f"{path}: no rows for regret_kind={regret_kind!r}"
                         + (f" comparator_id={comparator_id!r}" if comparator_id else "")
                         + f"; available kinds: {kinds}")
    comparators = sorted({r[2] for r in picked})
    if len(comparators) > 1:
        raise ValueError(
            f"{path}: regret_kind={regret_kind!r} has several comparators {comparators}; "
            "pass comparator_id to disambiguate"
        )
    try:
        t = np.array([int(r[0]) for r in picked])
        mean = np.array([float(r[3]) for r in picked])
        stderr = np.array([float(r[4]) for r in picked])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric value in t/mean/stderr column: {exc}") from None
    order = np.argsort(t, kind="stable")
    return CurveData(label or path.stem, t[order], mean[order], stderr[order])


def align_curves(curves: list[CurveData]) -> list[CurveData]:
    """Resample every curve onto the coarsest shared checkpoint grid."""
    grids = [c.t for c in curves]
    if all(np.array_equal(g, grids[0]) for g in grids):
        return curves
    coarsest = min(grids, key=len)
    lo = max(g.min() for g in grids)
    hi = min(g.max() for g in grids)
    target = coarsest[(coarsest >= lo) & (coarsest <= hi)]
    if target.size == 0:
        raise ValueError("checkpoint grids do not overlap")
    out = []
    for c in curves:
        out.append(CurveData(
            c.label,
            target.copy(),
            np.interp(target, c.t, c.mean),
            np.interp(target, c.t, c.stderr),
        ))
    return out


def _label_color(label: str) -> str:
    digest = hashlib.sha256(label.encode()).digest()
    # keep it readable on white: draw hue from the palette wheel, fix sat/val
    hue = digest[0] / 255.0
    import colorsys

    r, g, b = colorsys.hsv_to_rgb(hue, 0.75, 0.75)
    return f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}"


def render(spec: FigureSpec) -> Path:
    """Draw the figure and write a PNG; returns the output path.

    Nothing is written when loading fails, so a bad input never leaves a
    truncated image behind.
    """
    curves = [
        load_series(path, spec.regret_kind, spec.comparator_id, label)
        for path, label in spec.inputs
    ]
    curves = align_curves(curves)
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    try:
        for c in curves:
            color = _label_color(c.label)
            ax.plot(c.t, c.mean, label=c.label, color=color, linewidth=1.8)
            ax.fill_between(c.t, c.mean - c.stderr, c.mean + c.stderr,
                            color=color, alpha=0.25, linewidth=0)
        ax.set_xlabel("round")
        ax.set_ylabel(f"cumulative {spec.regret_kind} regret")
        if spec.log_x:
            ax.set_xscale("log")
        if spec.log_y:
            ax.set_yscale("log")
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(loc="upper left", frameon=False)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, format="png", metadata={"Software": "regret-plots"})
    finally:
        plt.close(fig)
    return out
