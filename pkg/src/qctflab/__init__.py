"""Numerical laboratory for entanglement dynamics in disordered spin-1/2 chains.

The package computes single-spin entanglement of a quenched Heisenberg chain
three independent ways and cross-checks them:

* exact time evolution (spectral or Krylov) with reduced-density determinants,
* an exact pole-sum transfer-function algebra in the Laplace domain,
* perturbative frequency/amplitude predictions read off the Hamiltonian,
  together with their closed-form disorder statistics.

`qctflab.cli` exposes every pipeline as a subcommand.
"""

from qctflab.chain import (
    BasisState,
    ChainSpec,
    DisorderFields,
    HamiltonianMatrix,
    apply_bond_flip,
    build_hamiltonian,
    neel_state,
    sample_disorder,
    unperturbed_energy,
)
from qctflab.dynamics import (
    EigenSystem,
    EntanglementTrace,
    diagonalize,
    evolve,
    evolve_krylov,
    q_measure,
    q_minors,
    reduced_density,
    renyi2,
    trace_q,
)
__version__ = "0.1.0"
