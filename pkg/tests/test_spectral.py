import numpy as np
import pytest

from qctflab.chain import ChainSpec, build_hamiltonian, sample_disorder
from qctflab.dynamics import EntanglementTrace, basis_vector, diagonalize, trace_q
from qctflab.perturb import second_order_prediction
from qctflab.qctf import entanglement_polesum, eval_time, polesum
from qctflab.spectral import dft_spectrum, dominant_peaks, extract_component


def make_trace(values, dt):
    times = np.arange(len(values)) * dt
    return EntanglementTrace(times=times, values=np.asarray(values, dtype=float))


def cosine_trace(amp, omega, n, dt, offset=0.0, phase=0.0):
    times = np.arange(n) * dt
    return EntanglementTrace(
        times=times, values=offset + amp * np.cos(omega * times + phase)
    )


class TestDftSpectrum:
    def test_constant_trace_dc_only(self):
        spec = dft_spectrum(make_trace(np.full(64, 0.7), 0.1))
        dc = spec.omegas == 0
        assert abs(spec.coeffs[dc][0] - 0.7) < 1e-12
        assert np.max(np.abs(spec.coeffs[~dc])) < 1e-12

    def test_on_grid_cosine_amplitude(self):
        n, dt = 200, np.pi / 100
        omega0 = 2.0  # on the 2 pi / (n dt) = 1.0 grid
        spec = dft_spectrum(cosine_trace(0.3, omega0, n, dt, offset=0.1))
        for target in (omega0, -omega0):
            sel = np.isclose(spec.omegas, target, atol=1e-12)
            assert abs(np.abs(spec.coeffs[sel][0]) - 0.15) < 1e-10

    def test_two_spin_peak_ratio(self):
        n, dt = 200, np.pi / 100
        times = np.arange(n) * dt
        tr = EntanglementTrace(times=times, values=0.125 * (1 - np.cos(2 * times)))
        spec = dft_spectrum(tr)
        peaks = dominant_peaks(spec, 2)
        assert peaks[0][0] == 0.0
        assert peaks[1][0] == pytest.approx(2.0, abs=1e-12)
        assert peaks[0][1] / peaks[1][1] == pytest.approx(2.0, rel=1e-9)

    def test_hermitian_symmetry(self):
        rng = np.random.default_rng(0)
        tr = make_trace(rng.uniform(0, 0.25, 128), 0.05)
        spec = dft_spectrum(tr)
        lookup = dict(zip(spec.omegas, spec.coeffs))
        for w, c in lookup.items():
            if -w in lookup:
                assert abs(lookup[-w] - np.conj(c)) < 1e-10

    def test_parseval(self):
        rng = np.random.default_rng(1)
        tr = make_trace(rng.uniform(0, 0.25, 256), 0.02)
        spec = dft_spectrum(tr)
        assert np.sum(np.abs(spec.coeffs) ** 2) == pytest.approx(
            np.mean(tr.values**2), abs=1e-10
        )

    def test_nonuniform_grid_rejected(self):
        times = np.array([0.0, 0.1, 0.25, 0.3] + list(np.arange(4, 20) * 0.1))
        tr = EntanglementTrace(times=times, values=np.zeros_like(times))
        with pytest.raises(ValueError, match="uniform"):
            dft_spectrum(tr)

    def test_too_short(self):
        with pytest.raises(ValueError, match="16"):
            dft_spectrum(make_trace(np.zeros(8), 0.1))

    def test_csv_half_spectrum(self, tmp_path):
        spec = dft_spectrum(cosine_trace(0.2, 1.0, 64, 0.1))
        path = tmp_path / "spec.csv"
        spec.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "omega,magnitude"
        assert all(float(line.split(",")[0]) >= 0 for line in lines[1:])


class TestExtractComponent:
    def test_exact_model_recovery(self):
        amp, omega, phase, offset = 0.07, 3.3, 0.9, 0.12
        tr = cosine_trace(amp, omega, 1500, 0.02, offset=offset, phase=phase)
        a, phi = extract_component(tr, omega)
        assert a == pytest.approx(amp, abs=1e-8)
        assert phi == pytest.approx(phase, abs=1e-8)

    def test_off_grid_immunity(self):
        # frequency far from any DFT bin center
        n, dt = 640, 0.05
        omega = 2.0 + 0.5 * (2 * np.pi / (n * dt))
        tr = cosine_trace(0.05, omega, n, dt, offset=0.08)
        a, _ = extract_component(tr, omega)
        assert a == pytest.approx(0.05, rel=1e-6)

    def test_dc_convention(self):
        tr = make_trace(np.full(100, 0.2), 0.1)
        a, phi = extract_component(tr, 0.0)
        assert (a, phi) == (pytest.approx(0.2), 0.0)

    def test_ill_conditioned_raises(self):
        tr = cosine_trace(0.1, 1.0, 32, 0.001)  # tiny span, tiny frequency
        with pytest.raises(ValueError, match="ill-conditioned"):
            extract_component(tr, 1e-6)

    def test_out_of_band(self):
        tr = cosine_trace(0.1, 1.0, 64, 0.1)
        with pytest.raises(ValueError, match="outside"):
            extract_component(tr, 100.0)

    def test_recovers_pole_coefficients(self):
        # poles {(+-w, c)} -> fitted amplitude 2|c|; the grid spans a common
        # period so the components are exactly orthogonal
        f = polesum(
            [0.0, 2.0, -2.0, 5.0, -5.0],
            [0.11, 0.02 + 0.01j, 0.02 - 0.01j, -0.015, -0.015],
        )
        n = 4096
        times = np.arange(n) * (8 * np.pi / n)
        tr = EntanglementTrace(times=times, values=eval_time(f, times).real)
        for target, coeff in ((2.0, 0.02 + 0.01j), (5.0, -0.015)):
            a, _ = extract_component(tr, target)
            assert a == pytest.approx(2 * abs(coeff), abs=1e-8)

    def test_amplitude_against_prediction_n6(self):
        spec = ChainSpec(6, 1.0, 10.0)
        fields = sample_disorder(spec, 23)
        h = build_hamiltonian(spec, fields)
        eig = diagonalize(h)
        psi0 = basis_vector(0b101010, 64)
        site = 3
        tr = trace_q(eig, psi0, site, t_max=40.0, dt=0.01)
        for entry in second_order_prediction(fields, spec, site).entries:
            if entry.resonant or entry.amplitude > 0.2:
                continue
            omega, a, _ = locate_component(tr, entry.omega)
            assert abs(omega - entry.omega) <= 2 * np.pi / 40.0
            assert a == pytest.approx(entry.amplitude, rel=0.3)


class TestDominantPeaks:
    def test_two_spin_single_nonzero_peak(self):
        spec = ChainSpec(2, 1.0, 1.0)
        from qctflab.chain import DisorderFields

        h = build_hamiltonian(spec, DisorderFields((0.0, 0.0), 0))
        eig = diagonalize(h)
        tr = trace_q(eig, basis_vector(0b10, 4), 1, t_max=40.0, dt=0.01)
        peaks = dominant_peaks(dft_spectrum(tr), 1, exclude_dc=True)
        t_span = tr.times[-1] + tr.dt
        assert abs(peaks[0][0] - 2.0) <= 2 * np.pi / t_span

    def test_constant_trace_empty_when_dc_excluded(self):
        spec = dft_spectrum(make_trace(np.full(64, 0.1), 0.1))
        assert dominant_peaks(spec, 3, exclude_dc=True) == []

    def test_sorted_descending(self):
        n, dt = 400, 0.05
        times = np.arange(n) * dt
        values = (
            0.2
            + 0.05 * np.cos(2 * np.pi * 4 * times / (n * dt))
            + 0.02 * np.cos(2 * np.pi * 17 * times / (n * dt))
        )
        peaks = dominant_peaks(
            dft_spectrum(EntanglementTrace(times=times, values=values)),
            2,
            exclude_dc=True,
        )
        assert peaks[0][1] > peaks[1][1]
        assert peaks[0][0] == pytest.approx(2 * np.pi * 4 / (n * dt), abs=1e-9)

    def test_count_validation(self):
        spec = dft_spectrum(make_trace(np.zeros(32), 0.1))
        with pytest.raises(ValueError, match="positive"):
            dominant_peaks(spec, 0)
