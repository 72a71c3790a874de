"""Perturbative entanglement predictions read directly off the Hamiltonian.

Treating the exchange term as a perturbation on the disorder term, the
dominant oscillation of a spin's entanglement after a quench from the
alternating state sits at the first-order energy difference to each flipped
neighbor configuration, with amplitude fixed by the interference amplitude of
that single flip.  The configuration network below enumerates the flip
sequences that feed the lowest perturbation orders.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from qctflab.chain import (
    BasisState,
    ChainSpec,
    DisorderFields,
    apply_bond_flip,
    neel_with_site_up,
    unperturbed_energy,
)

RESONANCE_TOL = 1e-9  # |h_r - h_neighbor| below tol*J marks a resonant entry


@dataclass(frozen=True)
class StateNetwork:
    """Flip configurations j = -3..3 around a target site (0 = alternating).

    Labels follow the interference network of nearest-neighbor flips: the
    target spin is flipped in |+-1> and |+-2| and restored in |+-3>; entries
    whose construction would leave the chain are absent.
    """

    site: int
    configurations: dict[int, BasisState]

    def __contains__(self, label: int) -> bool:
        return label in self.configurations

    def __getitem__(self, label: int) -> BasisState:
        try:
            return self.configurations[label]
        except KeyError:
            raise ValueError(
                f"configuration |{label}> absent (edge truncation at site "
                f"{self.site})"
            ) from None


def state_network(spec: ChainSpec, site: int) -> StateNetwork:
    """Build the flip network around `site`; edge labels are truncated.

    Construction, with r = site: |1> flips bond (r, r+1) of |0>, |-1> flips
    (r-1, r); |2> flips (r-2, r-1) of |1>, |-2> flips (r+1, r+2) of |-1>;
    |3> flips (r-1, r) of |2>, |-3> flips (r, r+1) of |-2>.
    """
    n = spec.n_sites
    if not 1 <= site <= n:
        raise ValueError(f"site {site} out of range 1..{n}")
    root = neel_with_site_up(spec, site)
    configs = {0: root}

    def grow(label, parent, bond):
        if parent not in configs or not 1 <= bond <= n - 1:
            return
        flipped = apply_bond_flip(configs[parent], bond)
        assert flipped is not None, "network bonds are anti-parallel by design"
        configs[label] = flipped

    grow(1, 0, site)
    grow(-1, 0, site - 1)
    grow(2, 1, site - 2)
    grow(-2, -1, site + 1)
    grow(3, 2, site - 1)
    grow(-3, -2, site)
    return StateNetwork(site=site, configurations=configs)


def bond_alignment(state: BasisState) -> float:
    """sum over bonds of s_k s_{k+1}: +1/4 per parallel, -1/4 per anti."""
    return sum(
        state.spin(k) * state.spin(k + 1) for k in range(1, state.n_sites)
    )


def first_order_energy(
    fields: DisorderFields, spec: ChainSpec, state: BasisState
) -> float:
    """Unperturbed energy plus the diagonal exchange expectation."""
    return unperturbed_energy(fields, state) + spec.coupling * bond_alignment(state)


def interference_amplitude(
    fields: DisorderFields,
    spec: ChainSpec,
    network: StateNetwork,
    i: int,
    j: int,
) -> complex:
    """Path-product amplitude c_{j,i} between network configurations.

    Each step from `prev` to `next` along the label chain contributes
    <next|V|prev> / (E0_prev - E0_next) with flip element J/2 and unperturbed
    (disorder-only) energies; c_{i,i} = 1 and c_{j,i} = conj(c_{i,j}).
    """
    if abs(i) > 3 or abs(j) > 3:
        raise ValueError("labels range over -3..3")
    if i == j:
        return 1.0 + 0j
    if j < i:
        return complex(interference_amplitude(fields, spec, network, j, i)).conjugate()
    half = spec.coupling / 2.0
    amp = 1.0 + 0j
    for prev in range(i, j):
        e_prev = unperturbed_energy(fields, network[prev])
        e_next = unperturbed_energy(fields, network[prev + 1])
        amp *= half / (e_prev - e_next)
    return amp


@dataclass(frozen=True)
class PredictionEntry:
    order: int
    omega: float
    amplitude: float | None
    resonant: bool
    neighbor: int | None = None  # site index behind the entry, if any


@dataclass(frozen=True)
class PerturbationPrediction:
    """Predicted (order, frequency, amplitude) components for one site."""

    site: int
    lower_bound: float  # amplitude floor (J/W)^2 / 8 for uniform disorder
    entries: tuple[PredictionEntry, ...]

    def to_json(self) -> str:
        payload = {
            "site": self.site,
            "a0": self.lower_bound,
            "entries": [
                {
                    "order": e.order,
                    "omega": e.omega,
                    "amplitude": e.amplitude,
                    "resonant": e.resonant,
                }
                for e in self.entries
            ],
        }
        return json.dumps(payload, sort_keys=True)


def amplitude_floor(spec: ChainSpec) -> float:
    if spec.disorder_bound == 0:
        return math.inf
    return 0.125 * (spec.coupling / spec.disorder_bound) ** 2


def second_order_prediction(
    fields: DisorderFields,
    spec: ChainSpec,
    site: int,
    resonance_tol: float = RESONANCE_TOL,
) -> PerturbationPrediction:
    """One entry per existing neighbor: the dominant oscillation pair.

    omega = |E1_0 - E1_(+-1)| from first-order energies; amplitude
    a = 2|c_{+-1,0}|^2 = J^2 / (2 (h_r - h_neighbor)^2), undefined (None) for
    resonant field differences |h_r - h_neighbor| < resonance_tol * J.
    """
    network = state_network(spec, site)
    e0 = first_order_energy(fields, spec, network[0])
    entries = []
    for label, neighbor in ((-1, site - 1), (1, site + 1)):
        if label not in network:
            continue
        omega = abs(e0 - first_order_energy(fields, spec, network[label]))
        dh = fields.fields[site - 1] - fields.fields[neighbor - 1]
        resonant = abs(dh) < resonance_tol * spec.coupling
        if resonant:
            amplitude = None
        else:
            amplitude = 2.0 * abs(
                interference_amplitude(fields, spec, network, 0, label)
            ) ** 2
        entries.append(
            PredictionEntry(
                order=2,
                omega=omega,
                amplitude=amplitude,
                resonant=resonant,
                neighbor=neighbor,
            )
        )
    return PerturbationPrediction(
        site=site, lower_bound=amplitude_floor(spec), entries=tuple(entries)
    )


def fourth_order_frequencies(
    fields: DisorderFields, spec: ChainSpec, site: int
) -> list[float]:
    """Frequencies fed by fourth-order interference, edge labels dropped.

    Includes the doubled and the plain second-order differences, the
    cross-neighbor differences, and the two-flip configurations |+-2>.
    """
    network = state_network(spec, site)
    e1 = {
        label: first_order_energy(fields, spec, network[label])
        for label in network.configurations
    }
    freqs = []
    if 1 in e1 and -1 in e1:
        freqs.append(abs(e1[-1] - e1[1]))
        freqs.append(abs(2 * e1[0] - e1[1] - e1[-1]))
    for label in (2, -2):
        if label in e1:
            freqs.append(abs(e1[label] - e1[0]))
    for label in (1, -1):
        if label in e1:
            freqs.append(2 * abs(e1[label] - e1[0]))
            freqs.append(abs(e1[label] - e1[0]))
    return sorted(freqs)


def full_prediction(
    fields: DisorderFields,
    spec: ChainSpec,
    site: int,
    include_fourth: bool = True,
    resonance_tol: float = RESONANCE_TOL,
) -> PerturbationPrediction:
    """Second-order entries plus frequency-only fourth-order entries."""
    base = second_order_prediction(fields, spec, site, resonance_tol)
    entries = list(base.entries)
    if include_fourth:
        second = {round(e.omega, 12) for e in entries}
        for omega in fourth_order_frequencies(fields, spec, site):
            if round(omega, 12) in second:
                continue
            entries.append(
                PredictionEntry(order=4, omega=omega, amplitude=None, resonant=False)
            )
    return PerturbationPrediction(
        site=site, lower_bound=base.lower_bound, entries=tuple(entries)
    )
