"""Disordered Heisenberg chain: model parameters, product basis, Hamiltonian.

The model is N spin-1/2 particles on an open chain,

    H = J * sum_k S_k . S_{k+1}  +  sum_k h_k S^z_k,

with spin operators S = sigma/2 and random fields h_k drawn uniformly from
[-W, W].  Sites are numbered 1..N.  A product basis state is stored as an
N-bit word whose integer value is its index in the 2^N basis; site 1 is the
most significant bit and a set bit means spin up (s_k = +1/2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import sparse

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a published 64-bit avalanche mixer.

    Constants from Steele, Lea & Flood (2014); every output bit depends on
    every input bit, which makes `mix64(master + i*GOLDEN)` a sound
    per-realization seed derivation.
    """
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Per-realization seed: mix64(master + (index+1)*golden gamma)."""
    return mix64((master_seed + (index + 1) * _GOLDEN) & _MASK64)


def _splitmix64_stream(seed: int, count: int) -> np.ndarray:
    """First `count` outputs of the SplitMix64 generator started at `seed`."""
    out = np.empty(count, dtype=np.uint64)
    state = seed & _MASK64
    for i in range(count):
        state = (state + _GOLDEN) & _MASK64
        out[i] = mix64(state)
    return out


@dataclass(frozen=True)
class ChainSpec:
    """Chain size and energy scales (hbar = 1, open boundaries)."""

    n_sites: int
    coupling: float = 1.0
    disorder_bound: float = 10.0

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError(f"n_sites must be >= 2, got {self.n_sites}")
        if not self.coupling > 0:
            raise ValueError(f"coupling must be positive, got {self.coupling}")
        if self.disorder_bound < 0:
            raise ValueError(
                f"disorder_bound must be >= 0, got {self.disorder_bound}"
            )

    @property
    def dimension(self) -> int:
        return 2**self.n_sites


@dataclass(frozen=True)
class DisorderFields:
    """One realization of the on-site fields h_1..h_N and the seed behind it."""

    fields: tuple[float, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.fields)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.fields, dtype=float)


@dataclass(frozen=True)
class BasisState:
    """Product basis state as an N-bit word (site 1 = most significant bit)."""

    bits: int
    n_sites: int

    def __post_init__(self):
        if not 0 <= self.bits < (1 << self.n_sites):
            raise ValueError(
                f"word {self.bits:#x} does not fit in {self.n_sites} bits"
            )

    @property
    def index(self) -> int:
        """Position in the 2^N basis: the word's integer value."""
        return self.bits

    def spin(self, site: int) -> float:
        """s_k = +1/2 (up) or -1/2 (down) at 1-based site k."""
        _check_site(site, self.n_sites)
        return ((self.bits >> (self.n_sites - site)) & 1) - 0.5

    def population(self) -> int:
        return int(self.bits).bit_count()

    def __str__(self) -> str:
        return format(self.bits, f"0{self.n_sites}b")


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Sparse Hermitian H (real in the product basis) plus its provenance."""

    matrix: sparse.csr_matrix
    spec: ChainSpec
    fields: DisorderFields

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def _check_site(site: int, n: int) -> None:
    if not 1 <= site <= n:
        raise ValueError(f"site {site} out of range 1..{n}")


def sample_disorder(spec: ChainSpec, seed: int) -> DisorderFields:
    """Draw h_k i.i.d. uniform on [-W, W] from the SplitMix64 stream of `seed`.

    h_k = W * (2*u_k - 1) with u_k = z_k / 2^64, so the draw is reproducible
    bit for bit from the seed alone, independent of numpy's generator state.
    """
    raw = _splitmix64_stream(seed, spec.n_sites)
    u = raw.astype(np.float64) / float(1 << 64)
    h = spec.disorder_bound * (2.0 * u - 1.0)
    return DisorderFields(fields=tuple(float(x) for x in h), seed=seed & _MASK64)


def build_hamiltonian(spec: ChainSpec, fields: DisorderFields) -> HamiltonianMatrix:
    """Assemble H = J sum S_k.S_{k+1} + sum h_k S^z_k as a sparse matrix.

    Diagonal: sum_k h_k s_k + J sum_bonds s_k s_{k+1}.  Off-diagonal: J/2
    between words that differ by one anti-parallel bond flip, so total S^z is
    conserved and each row holds at most N+1 nonzeros.
    """
    n = spec.n_sites
    if len(fields) != n:
        raise ValueError(
            f"fields length {len(fields)} does not match n_sites {n}"
        )
    dim = spec.dimension
    words = np.arange(dim, dtype=np.int64)
    # spins[k-1, w] = s_k for word w
    shifts = np.array([n - k for k in range(1, n + 1)], dtype=np.int64)
    spins = ((words[None, :] >> shifts[:, None]) & 1) - 0.5

    h = fields.as_array()
    diag = h @ spins + spec.coupling * np.sum(spins[:-1] * spins[1:], axis=0)

    rows, cols = [words], [words]
    vals = [diag]
    half = spec.coupling / 2.0
    for k in range(1, n):  # bond between sites k, k+1
        anti = spins[k - 1] != spins[k]
        mask = (1 << (n - k)) | (1 << (n - k - 1))
        src = words[anti]
        rows.append(src)
        cols.append(src ^ mask)
        vals.append(np.full(src.size, half))
    mat = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    )
    return HamiltonianMatrix(matrix=mat, spec=spec, fields=fields)


def neel_state(spec: ChainSpec, up_first: bool = True) -> BasisState:
    """Alternating product state (up,down,up,...) or its mirror."""
    bits = 0
    for site in range(1, spec.n_sites + 1):
        up = (site % 2 == 1) == up_first
        if up:
            bits |= 1 << (spec.n_sites - site)
    return BasisState(bits=bits, n_sites=spec.n_sites)


def neel_with_site_up(spec: ChainSpec, site: int) -> BasisState:
    """The alternating state whose spin at `site` points up."""
    _check_site(site, spec.n_sites)
    return neel_state(spec, up_first=(site % 2 == 1))


def unperturbed_energy(fields: DisorderFields, state: BasisState) -> float:
    """Disorder-term energy sum_k h_k s_k of a product state."""
    if len(fields) != state.n_sites:
        raise ValueError("fields and state have inconsistent lengths")
    return float(
        sum(h * state.spin(k) for k, h in enumerate(fields.fields, start=1))
    )


def apply_bond_flip(state: BasisState, bond: int) -> BasisState | None:
    """Flip the anti-parallel pair on bond k=(k,k+1); None if parallel."""
    n = state.n_sites
    if not 1 <= bond <= n - 1:
        raise ValueError(f"bond {bond} out of range 1..{n - 1}")
    if state.spin(bond) == state.spin(bond + 1):
        return None
    mask = (1 << (n - bond)) | (1 << (n - bond - 1))
    return BasisState(bits=state.bits ^ mask, n_sites=n)


def insert_site_bit(l: int, bit: int, site: int, n_sites: int) -> int:
    """Full basis word from a complement word `l` and the bit at `site`.

    The complement word enumerates the other sites most-significant-first,
    matching the column order of the 2 x 2^(N-1) coefficient matrix.
    """
    p = n_sites - site
    low = l & ((1 << p) - 1)
    return ((l >> p) << (p + 1)) | (bit << p) | low


def extract_site_bit(word: int, site: int, n_sites: int) -> tuple[int, int]:
    """Inverse of insert_site_bit: (bit at site, complement word)."""
    p = n_sites - site
    bit = (word >> p) & 1
    low = word & ((1 << p) - 1)
    return bit, ((word >> (p + 1)) << p) | low


def disorder_to_json(spec: ChainSpec, fields: DisorderFields) -> str:
    """Serialize one realization as {"n","j","w","seed","fields"}."""
    payload = {
        "n": spec.n_sites,
        "j": spec.coupling,
        "w": spec.disorder_bound,
        "seed": fields.seed,
        "fields": list(fields.fields),
    }
    return json.dumps(payload, sort_keys=True)


def disorder_from_json(text: str) -> tuple[ChainSpec, DisorderFields]:
    payload = json.loads(text)
    spec = ChainSpec(
        n_sites=payload["n"],
        coupling=payload["j"],
        disorder_bound=payload["w"],
    )
    fields = DisorderFields(
        fields=tuple(float(x) for x in payload["fields"]),
        seed=int(payload["seed"]),
    )
    if len(fields) != spec.n_sites:
        raise ValueError("corrupt record: fields length does not match n")
    return spec, fields
