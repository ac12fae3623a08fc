"""Plain-text data bundles and figures for FER sweeps and instanton spectra."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptyStore
from .instanton import Spectrum
from .mc import FERPoint, overlay_asymptotes


def _blocks(points: Sequence[FERPoint]) -> dict[tuple[str, int], list[FERPoint]]:
    by_curve = defaultdict(list)
    for p in points:
        by_curve[(p.code, p.n_iterations)].append(p)
    return {k: sorted(v, key=lambda p: p.snr.s) for k, v in sorted(by_curve.items())}


def fer_table(points: Sequence[FERPoint], axis: str = "snr_db") -> str:
    """One labelled block per (code, iteration count), blocks separated by a blank line."""
    if axis not in ("snr_db", "s_squared"):
        raise ValueError("axis must be snr_db or s_squared")
    lines = [f"# {axis} fer ci_low ci_high frames errors"]
    for (code, n_it), pts in _blocks(points).items():
        lines.append(f"# curve code={code} n_iterations={n_it}")
        for p in pts:
            x = p.snr.snr_db if axis == "snr_db" else p.snr.s_squared
            lines.append(f"{x:.6f} {p.fer:.6e} {p.ci_low:.6e} {p.ci_high:.6e} {p.frames} {p.errors}")
        lines.append("")
    return "\n".join(lines)


def asymptote_table(points: Sequence[FERPoint], instantons: Sequence[float],
                    d_min: int | None = None) -> str:
    lines = ["# s_squared fer"]
    for curve in overlay_asymptotes(points, instantons, d_min):
        lines.append(f"# curve {curve.label}")
        lines += [f"{s:.6f} {math.exp(y):.6e}" for s, y in zip(curve.s_squared, curve.log_fer)]
        lines.append("")
    return "\n".join(lines)


def distribution_table(spectrum: Spectrum) -> str:
    l, frac = spectrum.distribution()
    lines = ["# l_sq cumulative_fraction"]
    lines += [f"{a:.6f} {b:.6f}" for a, b in zip(l, frac)]
    return "\n".join(lines) + "\n"


def _figure():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_fer(points: Sequence[FERPoint], path: Path, axis: str = "snr_db",
             instantons: Sequence[float] = (), d_min: int | None = None) -> None:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for (code, n_it), pts in _blocks(points).items():
        pts = [p for p in pts if p.errors > 0]
        if not pts:
            continue
        x = [p.snr.snr_db if axis == "snr_db" else p.snr.s_squared for p in pts]
        y = np.array([p.fer for p in pts])
        err = np.array([[p.fer - p.ci_low for p in pts], [p.ci_high - p.fer for p in pts]])
        ax.errorbar(x, y, yerr=err, marker="o", ms=3, capsize=2, label=f"{code} {n_it} it")
    if axis == "s_squared":
        for curve in overlay_asymptotes(points, instantons, d_min):
            style = "--" if curve.label.startswith("hamming") else "-"
            ax.plot(curve.s_squared, np.exp(curve.log_fer), style, lw=1, label=curve.label)
    ax.set_yscale("log")
    ax.set_xlabel("SNR [dB]" if axis == "snr_db" else "s^2")
    ax.set_ylabel("FER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_spectrum(spectrum: Spectrum, path: Path, title: str = "") -> None:
    plt = _figure()
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.8))
    centres, counts = spectrum.histogram()
    left.bar(centres, counts, width=spectrum.bin_width * 0.9)
    left.set_xlabel("l^2")
    left.set_ylabel("count")
    l, frac = spectrum.distribution()
    right.step(l, frac, where="post")
    right.set_xlabel("l^2")
    right.set_ylabel("fraction of attempts")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(out: Path, points: Sequence[FERPoint], spectra: dict[str, Spectrum],
                 instantons: Sequence[float] = (), d_min: int | None = None,
                 figures: bool = True, provenance: str | None = None) -> list[Path]:
    """Write the data files (and PNGs) into ``out``; returns the paths written."""
    if not points and not spectra:
        raise EmptyStore("nothing to report: no FER sweep and no instanton spectrum found")
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, text):
        path = out / name
        if provenance:
            text = f"# manifest_sha256: {provenance}\n" + text
        path.write_text(text)
        written.append(path)

    if points:
        put("fer_vs_db.dat", fer_table(points, "snr_db"))
        put("fer_vs_s2.dat", fer_table(points, "s_squared"))
        if instantons or d_min is not None:
            put("asymptotes.dat", asymptote_table(points, instantons, d_min))
        if figures:
            plot_fer(points, out / "fer_vs_db.png", "snr_db")
            plot_fer(points, out / "fer_vs_s2.png", "s_squared", instantons, d_min)
            written += [out / "fer_vs_db.png", out / "fer_vs_s2.png"]
    for label, spec in sorted(spectra.items()):
        put(f"l2_hist_{label}.dat", spec.histogram_text())
        put(f"l2_cdf_{label}.dat", distribution_table(spec))
        if figures:
            plot_spectrum(spec, out / f"l2_{label}.png", label)
            written.append(out / f"l2_{label}.png")
    return written
