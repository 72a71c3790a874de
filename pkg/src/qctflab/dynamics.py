"""Exact time evolution and time-domain entanglement measures.

Everything here is ground truth for the frequency-domain machinery: spectral
evolution from a per-block eigendecomposition, a Lanczos propagator for
dimensions past the dense cap, single-site reduced densities, and the
determinant measure q = det(rho_site) in [0, 1/4].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import eigh_tridiagonal

from qctflab.chain import HamiltonianMatrix
from qctflab.errors import DimensionCapError, NumericContractError

StateVector = np.ndarray  # complex amplitudes over the 2^N product basis

DENSE_DIM_CAP = 4096


def as_state(amplitudes, dim: int | None = None) -> StateVector:
    """Validate and return a normalized complex state vector."""
    psi = np.ascontiguousarray(amplitudes, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("state vector must be one-dimensional")
    if dim is not None and psi.size != dim:
        raise ValueError(f"state has dimension {psi.size}, expected {dim}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"state vector norm {norm!r} deviates from 1")
    return psi


def basis_vector(index: int, dim: int) -> StateVector:
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


@dataclass(frozen=True)
class EigenBlock:
    """Spectral data of one total-S^z sector."""

    indices: np.ndarray  # basis words of this sector, ascending
    energies: np.ndarray  # ascending within the block
    vectors: np.ndarray  # orthonormal columns, real


@dataclass(frozen=True)
class EigenSystem:
    """Full spectral decomposition assembled from S^z blocks."""

    dimension: int
    blocks: tuple[EigenBlock, ...]
    _order: np.ndarray = field(repr=False)  # global ascending-energy order

    @property
    def energies(self) -> np.ndarray:
        """All eigenvalues, ascending."""
        merged = np.concatenate([b.energies for b in self.blocks])
        return merged[self._order]

    def full_vectors(self) -> np.ndarray:
        """Dense eigenvector matrix with columns matching `energies`."""
        out = np.zeros((self.dimension, self.dimension))
        col = 0
        for b in self.blocks:
            out[np.ix_(b.indices, np.arange(col, col + b.energies.size))] = b.vectors
            col += b.energies.size
        return out[:, self._order]

    def eigenstate(self, n: int) -> StateVector:
        """The n-th eigenvector (ascending energy) as a full state."""
        flat = self._order[n]
        for b in self.blocks:
            if flat < b.energies.size:
                psi = np.zeros(self.dimension, dtype=complex)
                psi[b.indices] = b.vectors[:, flat]
                return psi
            flat -= b.energies.size
        raise IndexError(n)


def diagonalize(h: HamiltonianMatrix, dim_cap: int = DENSE_DIM_CAP) -> EigenSystem:
    """Dense eigensolve, one total-S^z sector at a time.

    Refuses dimensions above `dim_cap`; use `evolve_krylov` for those.
    """
    dim = h.dimension
    if dim > dim_cap:
        raise DimensionCapError(
            f"dimension {dim} exceeds the dense cap {dim_cap}; "
            "use the Krylov propagator (evolve_krylov) instead"
        )
    n = h.spec.n_sites
    words = np.arange(dim)
    pop = np.array([int(w).bit_count() for w in words])
    blocks = []
    for p in range(n + 1):
        idx = words[pop == p]
        sub = h.matrix[np.ix_(idx, idx)].toarray()
        energies, vectors = np.linalg.eigh(sub)
        blocks.append(EigenBlock(indices=idx, energies=energies, vectors=vectors))
    merged = np.concatenate([b.energies for b in blocks])
    order = np.argsort(merged, kind="stable")
    return EigenSystem(dimension=dim, blocks=tuple(blocks), _order=order)


def evolve(eig: EigenSystem, psi0: StateVector, t: float) -> StateVector:
    """psi(t) = sum_n exp(-i E_n t) <n|psi0> |n>."""
    psi0 = as_state(psi0, eig.dimension)
    out = np.zeros(eig.dimension, dtype=complex)
    for b in eig.blocks:
        c = b.vectors.T @ psi0[b.indices]
        out[b.indices] = b.vectors @ (np.exp(-1j * b.energies * t) * c)
    return out


def evolve_many(eig: EigenSystem, psi0: StateVector, times: np.ndarray) -> np.ndarray:
    """Column j is psi(times[j]); batched per S^z block."""
    psi0 = as_state(psi0, eig.dimension)
    times = np.asarray(times, dtype=float)
    out = np.zeros((eig.dimension, times.size), dtype=complex)
    for b in eig.blocks:
        c = b.vectors.T @ psi0[b.indices]
        live = np.abs(c) > 0
        if not np.any(live):
            continue
        phases = np.exp(-1j * np.outer(b.energies[live], times))
        out[b.indices, :] = b.vectors[:, live] @ (c[live, None] * phases)
    return out


def _lanczos_step(matvec, psi: np.ndarray, dt: float, tol: float, m_max: int):
    """One adaptive-order Lanczos approximation of exp(-i dt H) psi.

    Returns (state, error_estimate, order).  The estimate is the usual
    last-component bound beta_m * |[exp(-i dt T_m)]_{m-1,0}|.
    """
    dim = psi.size
    m_cap = min(m_max, dim)
    v = np.empty((m_cap + 1, dim), dtype=complex)
    alphas = np.empty(m_cap)
    betas = np.empty(m_cap)
    v[0] = psi
    err = math.inf
    small = None
    m = 0
    while m < m_cap:
        w = matvec(v[m])
        a = np.vdot(v[m], w).real
        alphas[m] = a
        w -= a * v[m]
        if m > 0:
            w -= betas[m - 1] * v[m - 1]
        # full reorthogonalization; m stays small so this is cheap
        w -= v[: m + 1].T @ (v[: m + 1].conj() @ w)
        beta = np.linalg.norm(w)
        betas[m] = beta
        m += 1
        if m >= 2 or beta <= tol:
            evals, evecs = eigh_tridiagonal(alphas[:m], betas[: m - 1])
            small = evecs @ (np.exp(-1j * dt * evals) * evecs[0])
            err = beta * abs(small[-1]) * abs(dt)
            if err <= tol or beta <= tol:
                break
        v[m] = w / beta
    if small is None or (err > tol and betas[m - 1] > tol):
        raise NumericContractError(
            f"Lanczos residual {err:.3e} above {tol:.1e} at order {m}"
        )
    state = v[:m].T @ small
    return state, err, m


def evolve_krylov(
    h: HamiltonianMatrix | sparse.spmatrix,
    psi0: StateVector,
    dt: float,
    steps: int,
    tol: float = 1e-10,
    m_max: int = 64,
) -> np.ndarray:
    """Propagate psi0 through `steps` intervals of dt; row i is psi(i*dt).

    Each step is an adaptive Lanczos approximation of exp(-i dt H) with local
    error below `tol`; non-convergence raises naming the failing step.
    """
    mat = h.matrix if isinstance(h, HamiltonianMatrix) else h
    psi = as_state(psi0, mat.shape[0])
    out = np.empty((steps + 1, psi.size), dtype=complex)
    out[0] = psi
    matvec = mat.dot
    for step in range(1, steps + 1):
        try:
            psi, _, _ = _lanczos_step(matvec, psi, dt, tol, m_max)
        except NumericContractError as exc:
            raise NumericContractError(f"step {step}: {exc}") from exc
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-8:
            raise NumericContractError(
                f"step {step}: norm drifted to {norm!r}"
            )
        psi = psi / norm
        out[step] = psi
    return out


def _site_axis_first(psi: StateVector, site: int, n_sites: int) -> np.ndarray:
    """View of psi as a 2 x 2^(N-1) coefficient matrix, site axis first.

    Row 0 holds the spin-up (bit 1) amplitudes so that 2x2 objects downstream
    use the (up, down) ordering; columns enumerate the other sites' words.
    """
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} out of range 1..{n_sites}")
    cube = psi.reshape((2,) * n_sites)
    return np.moveaxis(cube, site - 1, 0)[::-1].reshape(2, -1)


def reduced_density(psi: StateVector, site: int) -> np.ndarray:
    """Single-site density matrix: partial trace over every other site."""
    psi = np.asarray(psi, dtype=complex)
    n = psi.size.bit_length() - 1
    if 2**n != psi.size:
        raise ValueError("state length is not a power of two")
    m = _site_axis_first(psi, site, n)
    return m @ m.conj().T


def q_measure(rho: np.ndarray) -> float:
    """det(rho) of a 2x2 Hermitian density matrix, computed as ad - |b|^2."""
    return float(rho[0, 0].real * rho[1, 1].real - abs(rho[0, 1]) ** 2)


def q_minors(psi: StateVector, site: int) -> float:
    """Entanglement via the 2x2 minors of the coefficient matrix.

    Sums |det M^(ij)|^2 over column pairs i<j of the 2 x 2^(N-1) matrix M of
    amplitudes; independent of the partial-trace route against which it is
    cross-checked.
    """
    psi = np.asarray(psi, dtype=complex)
    n = psi.size.bit_length() - 1
    m = _site_axis_first(psi, site, n)
    d = np.outer(m[0], m[1])
    return float(0.5 * np.sum(np.abs(d - d.T) ** 2))


def renyi2(q: float) -> float:
    """Second-order Renyi entropy of a single spin, -ln(1 - 2q)."""
    if not 0.0 <= q < 0.5:
        raise ValueError(f"q={q!r} outside the domain [0, 0.5)")
    return -math.log1p(-2.0 * q)


@dataclass(frozen=True)
class EntanglementTrace:
    """q(t) on a uniform time grid."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have matching shapes")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,q\n")
            for t, q in zip(self.times, self.values):
                fh.write(f"{t:.17g},{q:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "EntanglementTrace":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(times=data[:, 0], values=data[:, 1])


def _checked_q(raw: np.ndarray) -> np.ndarray:
    bad = (raw < -1e-12) | (raw > 0.25 + 1e-12)
    if np.any(bad):
        worst = raw[bad][np.argmax(np.abs(raw[bad] - 0.125))]
        raise NumericContractError(
            f"entanglement value {worst!r} outside [0, 1/4] beyond tolerance"
        )
    return np.clip(raw, 0.0, 0.25)


def trace_q(
    evolver: EigenSystem | HamiltonianMatrix,
    psi0: StateVector,
    site: int,
    t_max: float,
    dt: float,
    chunk: int = 256,
) -> EntanglementTrace:
    """Sample q(t) = det(rho_site(t)) on the grid 0, dt, ..., <= t_max.

    Spectral when given an EigenSystem, Lanczos when given a Hamiltonian.
    Values outside [0, 1/4] by more than 1e-12 raise instead of clamping.
    """
    if dt <= 0 or t_max < dt:
        raise ValueError("need dt > 0 and t_max >= dt")
    steps = int(round(t_max / dt))
    times = np.arange(steps + 1) * dt
    values = np.empty(times.size)
    if isinstance(evolver, EigenSystem):
        psi0 = as_state(psi0, evolver.dimension)
        n = evolver.dimension.bit_length() - 1
        for lo in range(0, times.size, chunk):
            hi = min(lo + chunk, times.size)
            states = evolve_many(evolver, psi0, times[lo:hi])
            for j in range(hi - lo):
                values[lo + j] = q_measure(reduced_density(states[:, j], site))
    else:
        states = evolve_krylov(evolver, psi0, dt, steps)
        for j in range(times.size):
            values[j] = q_measure(reduced_density(states[j], site))
    return EntanglementTrace(times=times, values=_checked_q(values))
