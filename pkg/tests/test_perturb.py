import json

import numpy as np
import pytest

from qctflab.chain import ChainSpec, DisorderFields, sample_disorder
from qctflab.perturb import (
    amplitude_floor,
    first_order_energy,
    fourth_order_frequencies,
    full_prediction,
    interference_amplitude,
    second_order_prediction,
    state_network,
)


def fields_for(spec, values):
    assert len(values) == spec.n_sites
    return DisorderFields(tuple(float(v) for v in values), 0)


def four_index_terms(fields, spec, site):
    """Brute-force perturbative measure: every (l,k,i,j,i',j') term.

    Returns (order, omega, coeff) triples of the four-index sum with
    first-order pole energies; the up labels are {0,+-3}, down {+-1,+-2}.
    """
    net = state_network(spec, site)
    labels = sorted(net.configurations)
    up_labels = [l for l in (0, 3, -3) if l in net]
    dn_labels = [k for k in (1, -1, 2, -2) if k in net]
    e1 = {l: first_order_energy(fields, spec, net[l]) for l in labels}
    c = {
        (to, frm): interference_amplitude(fields, spec, net, frm, to)
        for to in labels
        for frm in labels
    }
    terms = []
    for l in up_labels:
        for k in dn_labels:
            for i in labels:
                for j in labels:
                    for ip in labels:
                        for jp in labels:
                            order = (
                                abs(i) + abs(i - l) + abs(j) + abs(j - k)
                                + abs(ip) + abs(ip - l) + abs(jp) + abs(jp - k)
                            )
                            coeff = (
                                np.conj(c[(i, 0)]) * c[(i, l)]
                                * c[(j, 0)] * np.conj(c[(j, k)])
                                * c[(ip, 0)] * np.conj(c[(ip, l)])
                                * np.conj(c[(jp, 0)]) * c[(jp, k)]
                            )
                            omega = e1[i] - e1[j] - e1[ip] + e1[jp]
                            terms.append((order, omega, coeff))
    return terms


class TestStateNetwork:
    def test_first_flip_touches_two_sites(self):
        spec = ChainSpec(6)
        net = state_network(spec, 3)
        diff = net[0].bits ^ net[1].bits
        assert diff == 0b001100  # sites 3 and 4

    def test_target_spin_coloring(self):
        spec = ChainSpec(7)
        net = state_network(spec, 4)
        for label in (1, -1, 2, -2):
            assert net[label].spin(4) == -0.5
        for label in (0, 3, -3):
            assert net[label].spin(4) == 0.5

    def test_bulk_has_all_labels(self):
        spec = ChainSpec(6)
        for site in (3, 4):
            net = state_network(spec, site)
            assert set(net.configurations) == set(range(-3, 4))

    def test_left_edge_truncation(self):
        net = state_network(ChainSpec(6), 1)
        assert set(net.configurations) == {0, 1}
        with pytest.raises(ValueError, match="absent"):
            net[-1]

    def test_right_edge_truncation(self):
        net = state_network(ChainSpec(6), 6)
        assert set(net.configurations) == {0, -1}

    def test_near_edge_partial(self):
        net = state_network(ChainSpec(6), 2)
        assert set(net.configurations) == {0, 1, -1, -2, -3}

    def test_every_step_is_one_bond_flip(self):
        net = state_network(ChainSpec(8), 4)
        for a, b in ((0, 1), (0, -1), (1, 2), (-1, -2), (2, 3), (-2, -3)):
            diff = net[a].bits ^ net[b].bits
            assert diff.bit_count() == 2

    def test_population_preserved(self):
        net = state_network(ChainSpec(8), 4)
        pops = {s.population() for s in net.configurations.values()}
        assert pops == {net[0].population()}


class TestFirstOrderEnergy:
    def test_neel_no_fields(self):
        spec = ChainSpec(4, 1.0, 0.0)
        net = state_network(spec, 2)
        e = first_order_energy(fields_for(spec, [0, 0, 0, 0]), spec, net[0])
        assert e == pytest.approx(-0.75)

    def test_bulk_difference(self):
        spec = ChainSpec(7, 1.0, 10.0)
        fields = sample_disorder(spec, 4)
        net = state_network(spec, 4)
        e0 = first_order_energy(fields, spec, net[0])
        for label, nb in ((1, 5), (-1, 3)):
            de = e0 - first_order_energy(fields, spec, net[label])
            dh = fields.fields[3] - fields.fields[nb - 1]
            assert de == pytest.approx(dh - 1.0, abs=1e-12)

    def test_edge_difference(self):
        spec = ChainSpec(6, 1.0, 10.0)
        fields = sample_disorder(spec, 5)
        net = state_network(spec, 1)
        e0 = first_order_energy(fields, spec, net[0])
        de = e0 - first_order_energy(fields, spec, net[1])
        dh = fields.fields[0] - fields.fields[1]
        assert de == pytest.approx(dh - 0.5, abs=1e-12)

    def test_boundary_bond_shift_at_site_two(self):
        # flipping bond (1,2) touches the chain end: J/2 shift, not J
        spec = ChainSpec(6, 1.0, 10.0)
        fields = sample_disorder(spec, 6)
        net = state_network(spec, 2)
        e0 = first_order_energy(fields, spec, net[0])
        de = e0 - first_order_energy(fields, spec, net[-1])
        dh = fields.fields[1] - fields.fields[0]
        assert de == pytest.approx(dh - 0.5, abs=1e-12)


class TestInterferenceAmplitude:
    def setup_method(self):
        self.spec = ChainSpec(7, 1.0, 10.0)
        self.fields = sample_disorder(self.spec, 8)
        self.net = state_network(self.spec, 4)

    def test_identity(self):
        assert interference_amplitude(self.fields, self.spec, self.net, 0, 0) == 1.0

    def test_single_step(self):
        c10 = interference_amplitude(self.fields, self.spec, self.net, 0, 1)
        dh = self.fields.fields[3] - self.fields.fields[4]
        assert c10 == pytest.approx(0.5 / dh)

    def test_path_product(self):
        amp = lambda i, j: interference_amplitude(self.fields, self.spec, self.net, i, j)
        assert abs(amp(0, 2)) == pytest.approx(abs(amp(1, 2)) * abs(amp(0, 1)))

    def test_conjugate_symmetry(self):
        amp = lambda i, j: interference_amplitude(self.fields, self.spec, self.net, i, j)
        assert amp(3, 0) == pytest.approx(np.conj(amp(0, 3)))

    def test_missing_configuration(self):
        net = state_network(self.spec, 1)
        with pytest.raises(ValueError, match="absent"):
            interference_amplitude(self.fields, self.spec, net, 0, -1)


class TestSecondOrderPrediction:
    def test_bulk_arithmetic(self):
        spec = ChainSpec(6, 1.0, 10.0)
        fields = fields_for(spec, [0.0, 1.0, 5.0, 0.0, 2.0, 0.0])
        pred = second_order_prediction(fields, spec, 3)
        by_neighbor = {e.neighbor: e for e in pred.entries}
        # right neighbor: dh = 5 - 0 = 5 -> omega |5 - 1| = 4, a = 1/50
        assert by_neighbor[4].omega == pytest.approx(4.0)
        assert by_neighbor[4].amplitude == pytest.approx(0.02)
        # left neighbor: dh = 5 - 1 = 4 -> omega 3, a = 1/32
        assert by_neighbor[2].omega == pytest.approx(3.0)
        assert by_neighbor[2].amplitude == pytest.approx(1.0 / 32.0)

    def test_edge_arithmetic(self):
        spec = ChainSpec(6, 1.0, 10.0)
        fields = fields_for(spec, [5.0, 0.0, 1.0, 0.0, 1.0, 0.0])
        pred = second_order_prediction(fields, spec, 1)
        assert len(pred.entries) == 1
        assert pred.entries[0].omega == pytest.approx(4.5)
        assert pred.entries[0].amplitude == pytest.approx(0.02)

    def test_resonant_flagged_not_raised(self):
        spec = ChainSpec(4, 1.0, 10.0)
        fields = fields_for(spec, [2.0, 2.0, 0.0, 1.0])
        pred = second_order_prediction(fields, spec, 2)
        by_neighbor = {e.neighbor: e for e in pred.entries}
        assert by_neighbor[1].resonant and by_neighbor[1].amplitude is None
        assert not by_neighbor[3].resonant

    def test_amplitude_floor(self):
        spec = ChainSpec(6, 1.0, 10.0)
        a0 = amplitude_floor(spec)
        assert a0 == pytest.approx(0.00125)
        for seed in range(40):
            fields = sample_disorder(spec, seed)
            for site in (1, 3):
                for e in second_order_prediction(fields, spec, site).entries:
                    if e.amplitude is not None:
                        assert e.amplitude >= a0

    def test_json_schema(self):
        spec = ChainSpec(6, 1.0, 10.0)
        pred = full_prediction(sample_disorder(spec, 9), spec, 3)
        payload = json.loads(pred.to_json())
        assert set(payload) == {"site", "a0", "entries"}
        assert all(
            set(e) == {"order", "omega", "amplitude", "resonant"}
            for e in payload["entries"]
        )
        orders = {e["order"] for e in payload["entries"]}
        assert orders == {2, 4}


class TestFourthOrderFrequencies:
    def test_contains_doubled_second_order(self):
        spec = ChainSpec(8, 1.0, 10.0)
        fields = sample_disorder(spec, 10)
        freqs = fourth_order_frequencies(fields, spec, 4)
        pred = second_order_prediction(fields, spec, 4)
        for e in pred.entries:
            assert np.min(np.abs(np.array(freqs) - 2 * e.omega)) < 1e-12

    def test_symmetric_fields_zero_entry(self):
        spec = ChainSpec(5, 1.0, 10.0)
        fields = fields_for(spec, [1.0, 3.0, 0.0, 3.0, 1.0])
        freqs = fourth_order_frequencies(fields, spec, 3)
        assert min(freqs) == pytest.approx(0.0, abs=1e-14)

    def test_edge_truncation_drops_labels(self):
        spec = ChainSpec(6, 1.0, 10.0)
        fields = sample_disorder(spec, 11)
        edge = fourth_order_frequencies(fields, spec, 1)
        bulk = fourth_order_frequencies(fields, spec, 3)
        assert len(edge) == 2  # single neighbor: |E1-E0| and its double
        assert len(bulk) == 8


class TestFourIndexSumOracle:
    def setup_method(self):
        self.spec = ChainSpec(5, 1.0, 10.0)
        self.fields = sample_disorder(self.spec, 12)
        self.site = 3
        self.terms = four_index_terms(self.fields, self.spec, self.site)

    def test_orders_always_even(self):
        assert all(order % 2 == 0 for order, _, _ in self.terms)

    def test_lowest_order_poles_match_prediction(self):
        pred = second_order_prediction(self.fields, self.spec, self.site)
        second = [
            (omega, coeff) for order, omega, coeff in self.terms
            if order == 2 and abs(omega) > 1e-9
        ]
        # one +- pair per neighbor
        assert len(second) == 2 * len(pred.entries)
        for entry in pred.entries:
            matches = [c for w, c in second if abs(abs(w) - entry.omega) < 1e-10]
            assert len(matches) == 2
            for coeff in matches:
                assert abs(coeff.imag) < 1e-15
                assert coeff.real == pytest.approx(entry.amplitude / 2, rel=1e-12)

    def test_listed_fourth_order_frequencies_appear(self):
        listed = fourth_order_frequencies(self.fields, self.spec, self.site)
        fourth = np.array(
            [
                abs(omega)
                for order, omega, coeff in self.terms
                if order == 4 and abs(coeff) > 0
            ]
        )
        for omega in listed:
            assert np.min(np.abs(fourth - omega)) < 1e-9
