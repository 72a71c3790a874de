"""Closed-form disorder statistics and their Monte Carlo cross-checks.

For uniform on-site fields on [-W, W] the dominant entanglement oscillation
of a spin has frequency |h_r - h_neighbor - J_eff| (J_eff = J in the bulk,
J/2 where the flipped bond touches a chain end) and amplitude
J^2 / (2 (h_r - h_neighbor)^2).  These map the triangular field-difference
law into piecewise-linear frequency densities and a heavy-tailed amplitude
density with a hard floor at (J/W)^2 / 8.  Higher interference orders enter
with probability decaying exponentially in the order; the leading form and a
product-of-factors Monte Carlo estimate are both provided.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np


def _check_regime(coupling: float, disorder: float) -> None:
    if coupling <= 0 or disorder <= 0:
        raise ValueError("need coupling > 0 and disorder > 0")
    if coupling >= disorder:
        warnings.warn(
            f"J={coupling} is not small against W={disorder}; the analytic "
            "densities assume the strongly disordered regime",
            stacklevel=3,
        )


def pdf_frequency(omega, coupling: float, disorder: float, edge: bool = False):
    """Density of the dominant oscillation frequency (angular units).

    Piecewise linear: flat up to J_eff, the shifted triangular body up to
    2W - J_eff, and a halved-slope corner up to 2W + J_eff; `edge` uses
    J_eff = J/2.
    """
    _check_regime(coupling, disorder)
    w_arr = np.asarray(omega, dtype=float)
    if np.any(w_arr < 0):
        raise ValueError("frequencies are magnitudes; negative input")
    j = coupling / 2.0 if edge else coupling
    w = disorder
    out = np.zeros_like(w_arr)
    flat = w_arr <= j
    body = (w_arr > j) & (w_arr <= 2 * w - j)
    corner = (w_arr > 2 * w - j) & (w_arr <= 2 * w + j)
    out[flat] = 1.0 / w - j / (2 * w**2)
    out[body] = 1.0 / w - w_arr[body] / (2 * w**2)
    out[corner] = (j + 2 * w - w_arr[corner]) / (4 * w**2)
    return float(out) if np.isscalar(omega) else out


def cdf_frequency(omega, coupling: float, disorder: float, edge: bool = False):
    """Antiderivative of pdf_frequency with F(0) = 0."""
    _check_regime(coupling, disorder)
    w_arr = np.asarray(omega, dtype=float)
    j = coupling / 2.0 if edge else coupling
    w = disorder
    x = np.clip(w_arr, 0.0, 2 * w + j)
    f_flat = 1.0 / w - j / (2 * w**2)
    c1 = j * f_flat  # mass up to j
    c2 = c1 + (2 * w - 2 * j) / w - ((2 * w - j) ** 2 - j**2) / (4 * w**2)
    out = np.where(x <= j, x * f_flat, 0.0)
    body = (x > j) & (x <= 2 * w - j)
    xb = x[body]
    out[body] = c1 + (xb - j) / w - (xb**2 - j**2) / (4 * w**2)
    corner = x > 2 * w - j
    xc = x[corner]
    lo = 2 * w - j
    out[corner] = c2 + ((j + 2 * w) * (xc - lo) - (xc**2 - lo**2) / 2) / (4 * w**2)
    return float(out) if np.isscalar(omega) else out


def amplitude_lower_bound(coupling: float, disorder: float) -> float:
    return 0.125 * (coupling / disorder) ** 2


def amplitude_mode(coupling: float, disorder: float) -> float:
    """Most probable amplitude, (sqrt(2) J / 3W)^2."""
    return (math.sqrt(2.0) * coupling / (3.0 * disorder)) ** 2


def pdf_amplitude(a, coupling: float, disorder: float):
    """Density of the dominant oscillation amplitude, zero below the floor."""
    _check_regime(coupling, disorder)
    a_arr = np.asarray(a, dtype=float)
    if np.any(a_arr <= 0):
        raise ValueError("amplitudes are positive")
    beta = disorder / coupling
    a0 = amplitude_lower_bound(coupling, disorder)
    out = np.zeros_like(a_arr)
    live = a_arr >= a0
    al = a_arr[live]
    out[live] = (beta * np.sqrt(8.0 * al) - 1.0) / (8.0 * (beta * al) ** 2)
    return float(out) if np.isscalar(a) else out


def cdf_amplitude(a, coupling: float, disorder: float):
    """(1 - J / (2W sqrt(2a)))^2 above the floor, 0 below (by continuity)."""
    _check_regime(coupling, disorder)
    a_arr = np.asarray(a, dtype=float)
    if np.any(a_arr <= 0):
        raise ValueError("amplitudes are positive")
    a0 = amplitude_lower_bound(coupling, disorder)
    out = np.zeros_like(a_arr)
    live = a_arr >= a0
    out[live] = (1.0 - coupling / (2.0 * disorder * np.sqrt(2.0 * a_arr[live]))) ** 2
    return float(out) if np.isscalar(a) else out


@dataclass(frozen=True)
class AnalyticPdf:
    """A closed-form density with its CDF and support."""

    kind: str  # frequency-bulk | frequency-edge | amplitude
    coupling: float
    disorder: float
    support: tuple[float, float]
    pdf: Callable[[np.ndarray], np.ndarray]
    cdf: Callable[[np.ndarray], np.ndarray]


def frequency_pdf(coupling: float, disorder: float, edge: bool = False) -> AnalyticPdf:
    j = coupling / 2.0 if edge else coupling
    return AnalyticPdf(
        kind="frequency-edge" if edge else "frequency-bulk",
        coupling=coupling,
        disorder=disorder,
        support=(0.0, 2.0 * disorder + j),
        pdf=lambda x: pdf_frequency(x, coupling, disorder, edge),
        cdf=lambda x: cdf_frequency(x, coupling, disorder, edge),
    )


def amplitude_pdf(coupling: float, disorder: float) -> AnalyticPdf:
    return AnalyticPdf(
        kind="amplitude",
        coupling=coupling,
        disorder=disorder,
        support=(amplitude_lower_bound(coupling, disorder), math.inf),
        pdf=lambda x: pdf_amplitude(x, coupling, disorder),
        cdf=lambda x: cdf_amplitude(x, coupling, disorder),
    )


def critical_probability(
    order: int, coupling: float, disorder: float
) -> tuple[float, float]:
    """Leading-order probability that an order-2n interference chain is O(1).

    Returns (p, ln p) with
        ln p = 2n ln(J/W) + (2n-1) ln(2n ln(2W/J)) - ln((2n-1)!),
    the strongly disordered leading term; ln p is approximately linear in the
    order, i.e. the chains are exponentially suppressed.
    """
    if order < 2 or order % 2 != 0:
        raise ValueError("perturbation orders are even and at least 2")
    if coupling <= 0 or disorder <= 0:
        raise ValueError("need coupling > 0 and disorder > 0")
    if disorder / coupling < 5:
        warnings.warn(
            f"W/J={disorder / coupling:.2f} < 5: leading-order critical "
            "probability is unreliable this close to the transition",
            stacklevel=2,
        )
    big_l = order * math.log(2.0 * disorder / coupling)
    ln_p = (
        order * math.log(coupling / disorder)
        + (order - 1) * math.log(big_l)
        - math.lgamma(order)
    )
    return math.exp(ln_p), ln_p


def critical_probability_mc(
    order: int,
    coupling: float,
    disorder: float,
    samples: int,
    seed: int,
    _chunk: int = 1 << 19,
) -> tuple[float, float]:
    """Monte Carlo estimate of P{prod_m |dh_m / J| <= 1} with 2n factors.

    Each factor's dh is the difference of two independent uniform [-W, W]
    fields, independent across factors (repeated-index correlations ignored,
    which upper-bounds the exact probability).  Returns (estimate, binomial
    standard error).
    """
    if order < 2 or order % 2 != 0:
        raise ValueError("perturbation orders are even and at least 2")
    if samples < 100_000:
        raise ValueError("need at least 1e5 samples for a stable estimate")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        m = min(_chunk, samples - done)
        dh = rng.uniform(-disorder, disorder, size=(m, order)) - rng.uniform(
            -disorder, disorder, size=(m, order)
        )
        log_prod = np.sum(np.log(np.abs(dh) / coupling), axis=1)
        hits += int(np.sum(log_prod <= 0.0))
        done += m
    p = hits / samples
    stderr = math.sqrt(max(p * (1.0 - p), 1e-300) / samples)
    return p, stderr


@dataclass(frozen=True)
class Histogram:
    """Adaptive-bin density estimate: edges, densities, sample count."""

    edges: np.ndarray
    densities: np.ndarray
    count: int

    def masses(self) -> np.ndarray:
        return self.densities * np.diff(self.edges)

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("bin_lo,bin_hi,density\n")
            for lo, hi, rho in zip(self.edges[:-1], self.edges[1:], self.densities):
                fh.write(f"{lo:.17g},{hi:.17g},{rho:.17g}\n")


def build_histogram(samples, bins: int = 64) -> Histogram:
    """Equal-count adaptive binning: every bin holds about count/bins samples."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size < 100:
        raise ValueError(f"need at least 100 samples, got {x.size}")
    if x.size < bins:
        raise ValueError(f"fewer samples ({x.size}) than bins ({bins})")
    quantiles = np.linspace(0.0, 1.0, bins + 1)
    edges = np.unique(np.quantile(x, quantiles))
    if edges.size < 2:
        raise ValueError("samples are degenerate: all values equal")
    counts, _ = np.histogram(x, bins=edges)
    densities = counts / (x.size * np.diff(edges))
    return Histogram(edges=edges, densities=densities, count=int(x.size))


@dataclass(frozen=True)
class ComparisonReport:
    tv: float
    ks: float
    window: tuple[float, float]
    samples: int


def compare_histogram(
    hist: Histogram, pdf: AnalyticPdf, window: tuple[float, float] | None = None
) -> ComparisonReport:
    """Total variation and KS distance on a window, both sides renormalized.

    TV sums |density - pdf(midpoint)| * width / 2 over window bins; KS is the
    max CDF gap at bin edges.  The window defaults to the overlap of the
    histogram range and the density support.
    """
    lo_s, hi_s = pdf.support
    if window is None:
        window = (max(lo_s, hist.edges[0]), min(hi_s, hist.edges[-1]))
    lo, hi = window
    if not hi > lo:
        raise ValueError(f"empty comparison window {window}")
    edges = np.clip(hist.edges, lo, hi)
    widths = np.diff(edges)
    live = widths > 0
    if not np.any(live):
        raise ValueError(f"no histogram mass inside window {window}")
    masses = hist.masses()[live]
    n_window = masses.sum()
    if n_window <= 0:
        raise ValueError(f"no histogram mass inside window {window}")
    mids = 0.5 * (edges[:-1] + edges[1:])[live]
    dens = masses / n_window / widths[live]

    pdf_mass = float(pdf.cdf(hi) - pdf.cdf(lo))
    if pdf_mass <= 0:
        raise ValueError(f"density has no mass inside window {window}")
    ref = np.asarray(pdf.pdf(mids), dtype=float) / pdf_mass
    tv = 0.5 * float(np.sum(np.abs(dens - ref) * widths[live]))

    emp_cdf = np.concatenate([[0.0], np.cumsum(masses) / n_window])
    edge_pts = np.concatenate([[edges[:-1][live][0]], edges[1:][live]])
    ref_cdf = (np.asarray(pdf.cdf(edge_pts)) - float(pdf.cdf(lo))) / pdf_mass
    ks = float(np.max(np.abs(emp_cdf - ref_cdf)))
    return ComparisonReport(
        tv=tv,
        ks=ks,
        window=(float(lo), float(hi)),
        samples=int(round(n_window * hist.count)),
    )
