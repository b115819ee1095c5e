"""Figure rendering for reports, sweeps and interval histograms (PNG files)."""
from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_sweep(result, path) -> None:
    """Autocorrelation and efficiency vs x, with reference curves."""
    xs = np.array([p.x for p in result.points])
    a1 = np.array([p.a1 for p in result.points])
    a1s = np.array([p.a1_sigma for p in result.points])
    eta = np.array([p.eta for p in result.points])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 3.8))
    ax1.errorbar(xs, a1, yerr=3 * a1s, fmt="o", ms=3.5, lw=1, capsize=2,
                 label="measured a1 (3 sigma)")
    ref = [(p.x, p.ref_a) for p in result.points if p.ref_a]
    if ref:
        rx, ra = zip(*sorted(ref))
        ax1.plot(rx, ra, "k--", lw=1, label="reference")
    ax1.set_xscale("log")
    ax1.set_xlabel("x = T / tau")
    ax1.set_ylabel("serial autocorrelation a1")
    ax1.legend(fontsize=8)
    ax1.grid(alpha=0.3)
    ax2.plot(xs, eta, "o", ms=3.5, label="measured")
    ref = [(p.x, p.ref_eta) for p in result.points if p.ref_eta is not None]
    if ref:
        rx, re = zip(*sorted(ref))
        ax2.plot(rx, re, "k--", lw=1, label="reference")
    ax2.set_xscale("log")
    ax2.set_xlabel("x = T / tau")
    ax2.set_ylabel("bits per event")
    ax2.legend(fontsize=8)
    ax2.grid(alpha=0.3)
    fig.suptitle(f"{result.spec.method} clock sweep", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_report(report, path) -> None:
    """Serial-correlation coefficients with error bars."""
    fig, ax = plt.subplots(figsize=(6.5, 3.6))
    if report.autocorr:
        lags = [c.lag for c in report.autocorr]
        vals = [c.a for c in report.autocorr]
        errs = [3 * c.stderr for c in report.autocorr]
        ax.errorbar(lags, vals, yerr=errs, fmt="o", ms=4, capsize=2, lw=1)
        ax.axhline(0.0, color="k", lw=0.8)
        ax.set_xlabel("lag k")
        ax.set_ylabel("a_k (3 sigma bars)")
    else:
        ax.text(0.5, 0.5, f"autocorrelation undefined:\n{report.autocorr_error}",
                ha="center", va="center", transform=ax.transAxes)
    ax.set_title(
        f"N={report.n_bits}  mean={report.mean:.6f}  entropy={report.entropy:.6f}",
        fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_interval_histogram(hist, path) -> None:
    """Interval pdf on log-log axes with the fitted exponential tail."""
    widths = np.diff(hist.bin_edges)
    total = hist.counts.sum()
    centers = np.sqrt(hist.bin_edges[:-1] * np.maximum(hist.bin_edges[1:], 1e-300))
    dens = hist.counts / np.maximum(total * widths, 1e-300)
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    mask = hist.counts > 0
    ax.plot(centers[mask], dens[mask], "o", ms=2.5, label="measured pdf")
    tail = centers >= hist.cutoff_estimate
    if hist.fitted_tau > 0 and tail.any():
        ref = np.exp(-(centers[tail] - hist.cutoff_estimate) / hist.fitted_tau)
        ref *= dens[tail][0] / ref[0] if ref[0] > 0 else 1.0
        ax.plot(centers[tail], ref, "k--", lw=1,
                label=f"exp fit tau={hist.fitted_tau:.3e}s")
    ax.axvline(hist.cutoff_estimate, color="r", lw=0.8,
               label=f"cutoff {hist.cutoff_estimate:.3e}s")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("interval (s)")
    ax.set_ylabel("probability density")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
