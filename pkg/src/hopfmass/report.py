"""Report assembly and serialization: JSON document, CSV trace, SVG plots.

The JSON document is the canonical machine-readable artifact (schema
"mamass-report/1"); CSV and SVG are derived views of the same numbers.
Serialization is deterministic: identical inputs reproduce the payload
bit for bit.
"""

from __future__ import annotations

import csv
import json
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from .bounds import EstimateInputs, InequalityReport
from .quadrature import IntegrationScheme

SCHEMA = "mamass-report/1"

__all__ = ["SCHEMA", "build_report", "report_passed", "render_json",
           "write_csv", "write_svg"]


def _num(x) -> float:
    """Plain Python float (JSON-serializable, repr-stable)."""
    return float(x)


def _seq(xs) -> list:
    return [float(x) for x in np.asarray(xs).ravel()]


def _inequality_entry(rep: InequalityReport) -> dict:
    return {
        "name": rep.name,
        "lhs": _num(rep.lhs),
        "rhs": _num(rep.rhs),
        "slack": _num(rep.slack),
        "uncertainty": _num(rep.uncertainty),
        "verdict": rep.verdict,
    }


def build_report(config: dict, scheme: IntegrationScheme,
                 inputs: EstimateInputs | None = None,
                 inequalities: list[InequalityReport] = (),
                 checks: list[dict] = (),
                 energy: dict | None = None) -> dict:
    """Assemble the canonical report document.

    `inputs` carries the measured invariants (absent for suites that do
    not run the full pipeline); `checks` is a list of named verdict
    dicts with at least `name` and `status`.
    """
    doc = {
        "schema": SCHEMA,
        "tool_version": __version__,
        "config": dict(config),
        "inequalities": [_inequality_entry(r) for r in inequalities],
        "checks": [dict(c) for c in checks],
        "quadrature": {
            "kind": scheme.kind,
            "samples": int(scheme.samples),
            "seed": int(scheme.seed),
            "chart_order": int(scheme.chart_order),
            "phi_order": int(scheme.phi_order),
        },
    }
    if inputs is not None:
        nu = inputs.nu
        prof = inputs.profile
        doc["nu"] = {
            "by_slope": _num(nu.by_slope),
            "by_I": _num(nu.by_I),
            "extrapolated": _num(nu.value),
            "uncertainty": _num(nu.uncertainty),
            "trace": [_seq(row) for row in nu.t_trace],
        }
        doc["lambda"] = {
            "A_grid": _seq(prof.A_grid),
            "M_A": _seq(prof.M_values),
            "extrapolated": _num(prof.lam),
            "uncertainty": _num(prof.lam_uncertainty),
        }
        doc["tau"] = {
            "t_grid": _seq(inputs.t_grid),
            "trace": _seq(inputs.mass),
            "stderr": _seq(inputs.mass_stderr),
            "extrapolated": _num(inputs.tau),
            "uncertainty": _num(inputs.tau_uncertainty),
        }
        doc["quadrature"]["max_mass_stderr"] = _num(np.max(inputs.mass_stderr))
    if energy is not None:
        doc["energy"] = energy
    return doc


def report_passed(doc: dict) -> bool:
    """True when no inequality and no named check failed."""
    if any(r["verdict"] == "fail" for r in doc.get("inequalities", [])):
        return False
    return all(c.get("status") != "fail" for c in doc.get("checks", []))


def render_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_csv(path: str, t_grid, mass, stderr, i_over_pin, energy_rows) -> None:
    """Trace table: one row per t with the mass, the functional I/pi^n
    and the energy levels E_0..E_n."""
    energy_rows = np.asarray(energy_rows, dtype=float)
    n_levels = energy_rows.shape[1]
    header = ["t", "boundary_mass", "stderr", "I_over_pin"]
    header += [f"E_{k}" for k in range(n_levels)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, t in enumerate(t_grid):
            row = [repr(float(t)), repr(float(mass[i])),
                   repr(float(stderr[i])), repr(float(i_over_pin[i]))]
            row += [repr(float(v)) for v in energy_rows[i]]
            writer.writerow(row)


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#17becf")


def write_svg(path: str, x, series: list[tuple[str, list]], title: str) -> None:
    """Minimal SVG 1.1 line plot: one polyline per series plus axes.

    `series` is a list of (label, values) with values aligned to x.
    """
    width, height = 640, 400
    left, right, top, bottom = 70, 20, 34, 46
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(v, dtype=float) for _, v in series]
    x_lo, x_hi = float(np.min(x)), float(np.max(x))
    y_lo = min(float(np.min(v)) for v in ys)
    y_hi = max(float(np.max(v)) for v in ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * (width - left - right)

    def sy(v):
        return height - bottom - (v - y_lo) / (y_hi - y_lo) * (height - top - bottom)

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" '
        f'y2="{height - bottom}" stroke="black" stroke-width="1"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" '
        f'stroke="black" stroke-width="1"/>',
    ]
    for v in (x_lo, x_hi):
        lines.append(f'<text x="{sx(v):.1f}" y="{height - bottom + 18}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{v:g}</text>')
    for v in (y_lo + pad, y_hi - pad):
        lines.append(f'<text x="{left - 6}" y="{sy(v) + 4:.1f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{v:.4g}</text>')
    for i, (label, vals) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, ys[i]))
        lines.append(f'<polyline fill="none" stroke="{color}" '
                     f'stroke-width="1.5" points="{pts}"/>')
        lines.append(f'<text x="{width - right - 8}" y="{top + 16 + 16 * i}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="12" fill="{color}">{escape(label)}</text>')
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
