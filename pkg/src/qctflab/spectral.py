"""Frequency-domain estimation from simulated entanglement traces.

Conventions: frequencies are angular throughout; the DFT is scaled so that a
pure component a*cos(w t) sampled on-grid carries |coefficient| = a/2 at the
+-w bins, which makes spectra directly comparable with pole coefficients
(a cosine pair of poles with coefficient c shows up with amplitude 2|c|).
The transform is rectangular-windowed by default, matching finite-time
simulation spectra; leakage from off-grid components is what the
least-squares extractor is for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qctflab.dynamics import EntanglementTrace


@dataclass(frozen=True)
class Spectrum:
    """Two-sided DFT of a trace: ascending angular frequencies."""

    omegas: np.ndarray
    coeffs: np.ndarray
    dt: float
    t_span: float

    def folded(self) -> tuple[np.ndarray, np.ndarray]:
        """(omega >= 0, magnitude) half-spectrum."""
        keep = self.omegas >= 0
        return self.omegas[keep], np.abs(self.coeffs[keep])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("omega,magnitude\n")
            for w, m in zip(*self.folded()):
                fh.write(f"{w:.17g},{m:.17g}\n")


def _check_uniform(times: np.ndarray) -> float:
    steps = np.diff(times)
    dt = float(steps[0])
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * max(dt, 1.0):
        raise ValueError("trace grid is not uniform")
    return dt


def dft_spectrum(trace: EntanglementTrace, window: str = "rect") -> Spectrum:
    """Two-sided discrete Fourier transform of the trace.

    `window` may be "rect" (default) or "hann"; the Hann option trades
    leakage for a wider main lobe and is rescaled to keep the amplitude
    convention for isolated peaks.
    """
    if trace.times.size < 16:
        raise ValueError("need at least 16 samples")
    dt = _check_uniform(trace.times)
    values = np.asarray(trace.values, dtype=float)
    if window == "rect":
        taper = np.ones_like(values)
    elif window == "hann":
        taper = np.hanning(values.size)
    else:
        raise ValueError(f"unknown window {window!r}")
    n = values.size
    coeffs = np.fft.fft(values * taper) / (n * np.mean(taper))
    omegas = 2.0 * np.pi * np.fft.fftfreq(n, d=dt)
    order = np.argsort(omegas, kind="stable")
    return Spectrum(
        omegas=omegas[order], coeffs=coeffs[order], dt=dt, t_span=n * dt
    )


def extract_component(
    trace: EntanglementTrace, omega_star: float, cond_cap: float = 1e8
) -> tuple[float, float]:
    """Least-squares amplitude and phase of c0 + a*cos(w* t + phi) on a trace.

    Unlike raw DFT bins this is immune to off-grid leakage.  At w* = 0 the
    returned amplitude is |mean(q)| with phase 0.  Near-degenerate design
    columns (w* at 0 or the Nyquist edge) are dropped from the fit; anything
    else ill-conditioned raises.
    """
    dt = _check_uniform(trace.times)
    nyquist = np.pi / dt
    if not 0.0 <= omega_star <= nyquist:
        raise ValueError(f"omega {omega_star} outside [0, {nyquist}]")
    if omega_star == 0.0:
        return abs(float(np.mean(trace.values))), 0.0
    cols = [
        np.ones_like(trace.times),
        np.cos(omega_star * trace.times),
        np.sin(omega_star * trace.times),
    ]
    norms = [np.linalg.norm(c) for c in cols]
    live = [i for i, nv in enumerate(norms) if nv > 1e-8 * np.sqrt(len(trace.times))]
    design = np.column_stack([cols[i] for i in live])
    if np.linalg.cond(design) > cond_cap:
        raise ValueError(
            f"component fit at omega={omega_star} is ill-conditioned; "
            "lengthen the trace or move off the degenerate frequency"
        )
    sol, *_ = np.linalg.lstsq(design, trace.values, rcond=None)
    full = np.zeros(3)
    full[live] = sol
    _, a_cos, a_sin = full
    amplitude = float(np.hypot(a_cos, a_sin))
    phase = float(np.arctan2(-a_sin, a_cos))
    return amplitude, phase


def locate_component(
    trace: EntanglementTrace,
    omega_guess: float,
    half_width: float | None = None,
) -> tuple[float, float, float]:
    """Peak-extraction protocol: refine a predicted frequency, then fit.

    Higher-order energy corrections shift the true oscillation off its
    predicted location by a fraction of the finite-time resolution, which a
    fixed-frequency fit punishes through the sinc overlap factor.  This scans
    the fitted amplitude over [guess - hw, guess + hw] (hw defaults to the
    resolution 2 pi / T) and returns (omega, amplitude, phase) at the best
    fit.
    """
    from scipy.optimize import minimize_scalar

    dt = _check_uniform(trace.times)
    t_span = trace.times[-1] - trace.times[0] + dt
    if half_width is None:
        half_width = 2.0 * np.pi / t_span
    lo = max(omega_guess - half_width, 1e-9 / t_span)
    hi = min(omega_guess + half_width, np.pi / dt)

    def negative_amplitude(w):
        return -extract_component(trace, w)[0]

    coarse = np.linspace(lo, hi, 17)
    best = coarse[int(np.argmin([negative_amplitude(w) for w in coarse]))]
    span = (hi - lo) / 16
    res = minimize_scalar(
        negative_amplitude,
        bounds=(max(lo, best - span), min(hi, best + span)),
        method="bounded",
        options={"xatol": 1e-10 * max(1.0, abs(omega_guess))},
    )
    omega = float(res.x)
    amplitude, phase = extract_component(trace, omega)
    return omega, amplitude, phase


def dominant_peaks(
    spectrum: Spectrum,
    count: int,
    exclude_dc: bool = False,
    rel_floor: float = 1e-12,
) -> list[tuple[float, float]]:
    """Strongest local maxima of the folded spectrum, magnitude-descending.

    +-w pairs are already deduplicated by folding; magnitudes below
    rel_floor of the global maximum count as numerical silence.
    """
    if count < 1:
        raise ValueError("count must be positive")
    omegas, mags = spectrum.folded()
    if exclude_dc:
        keep = omegas > 0
        omegas, mags = omegas[keep], mags[keep]
    if omegas.size == 0:
        return []
    floor = rel_floor * float(np.max(np.abs(spectrum.coeffs)))
    peaks = []
    for i in range(omegas.size):
        left = mags[i - 1] if i > 0 else -np.inf
        right = mags[i + 1] if i < omegas.size - 1 else -np.inf
        if mags[i] > left and mags[i] >= right and mags[i] > floor:
            peaks.append((float(omegas[i]), float(mags[i])))
    peaks.sort(key=lambda p: -p[1])
    return peaks[:count]
