"""Exact pole-sum algebra for correlation transfer functions.

Every Laplace-domain object here is a finite sum of simple poles on the
imaginary axis,

    F(s) = sum_j c_j / (s + i w_j)   <->   f(t) = sum_j c_j exp(-i w_j t),

stored as parallel frequency/coefficient arrays.  The structural-frequency
contour integrals of the formalism reduce to index matching, so products and
the entanglement measure are computed by pure coefficient bookkeeping: the
star product adds frequencies and multiplies coefficients, and the dynamical
measure is

    Q(s) = r_pp * r_mm - r_pm * r_mp        (* = star product)

built from the four blocks r_ab(s) = sum_l c_{a,l}(s) * conj(c_{b,l}(s)) of
the site's 2x2 reduced density matrix in the Laplace domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qctflab.chain import extract_site_bit, insert_site_bit
from qctflab.dynamics import EigenSystem, StateVector, as_state, _site_axis_first
from qctflab.errors import NumericContractError, PoleBudgetError

DEFAULT_MAX_PAIRS = 1 << 23

# initial-state eigencomponents below this (states are unit norm) are
# indistinguishable from diagonalization roundoff and would only seed
# spurious poles, so the amplitude constructors drop them
OVERLAP_FLOOR = 1e-13


@dataclass(frozen=True)
class PoleSum:
    """Finite map frequency -> complex coefficient, frequencies ascending."""

    omegas: np.ndarray
    coeffs: np.ndarray
    real_valued: bool = False

    def __len__(self) -> int:
        return self.omegas.size

    def terms(self):
        return zip(self.omegas, self.coeffs)

    def total_mass(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def to_csv(self, path) -> None:
        """CSV `omega,re,im` sorted ascending by omega."""
        with open(path, "w") as fh:
            fh.write("omega,re,im\n")
            for w, c in self.terms():
                fh.write(f"{w:.17g},{c.real:.17g},{c.imag:.17g}\n")


def _merged(omegas: np.ndarray, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum coefficients of bit-identical frequencies; drop exact zeros."""
    uniq, inv = np.unique(omegas, return_inverse=True)
    re = np.bincount(inv, weights=coeffs.real, minlength=uniq.size)
    im = np.bincount(inv, weights=coeffs.imag, minlength=uniq.size)
    merged = re + 1j * im
    live = merged != 0
    return uniq[live], merged[live]


def polesum(omegas, coeffs, real_valued: bool = False) -> PoleSum:
    """Build a PoleSum, merging coincident frequencies."""
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    if w.shape != c.shape:
        raise ValueError("frequencies and coefficients must align")
    w, c = _merged(w, c)
    return PoleSum(omegas=w, coeffs=c, real_valued=real_valued)


def unit_step() -> PoleSum:
    """1/s: the star-product identity."""
    return polesum([0.0], [1.0], real_valued=True)


def eval_time(f: PoleSum, t) -> complex | np.ndarray:
    """Inverse Laplace transform at time t: sum_j c_j exp(-i w_j t)."""
    t_arr = np.asarray(t, dtype=float)
    out = np.exp(-1j * np.outer(t_arr.ravel(), f.omegas)) @ f.coeffs
    if t_arr.ndim == 0:
        return complex(out[0])
    return out.reshape(t_arr.shape)


def add(f: PoleSum, g: PoleSum) -> PoleSum:
    return polesum(
        np.concatenate([f.omegas, g.omegas]), np.concatenate([f.coeffs, g.coeffs])
    )


def scale(f: PoleSum, factor: complex) -> PoleSum:
    return PoleSum(omegas=f.omegas, coeffs=f.coeffs * factor)


def star_product(f: PoleSum, g: PoleSum, max_pairs: int = DEFAULT_MAX_PAIRS) -> PoleSum:
    """s-domain convolution: frequencies add, coefficients multiply.

    Equivalent to the pointwise product of the time-domain signals.
    """
    n_pairs = len(f) * len(g)
    if n_pairs > max_pairs:
        raise PoleBudgetError(
            f"star product needs {n_pairs} pair terms, budget {max_pairs}; "
            "consolidate or prune the operands first"
        )
    w = np.add.outer(f.omegas, g.omegas).ravel()
    c = np.multiply.outer(f.coeffs, g.coeffs).ravel()
    return polesum(w, c)


def conjugate_polesum(f: PoleSum) -> PoleSum:
    """The map F(s) -> F*(s*): each (w, c) becomes (-w, c*)."""
    return PoleSum(
        omegas=-f.omegas[::-1],
        coeffs=f.coeffs[::-1].conj(),
        real_valued=f.real_valued,
    )


def consolidate(
    f: PoleSum, freq_tol: float, prune_floor: float
) -> tuple[PoleSum, float]:
    """Merge frequency clusters within freq_tol, then drop tiny coefficients.

    Clusters are maximal runs of sorted frequencies with successive gaps at
    most freq_tol; each is replaced by its coefficient sum at the
    absolute-coefficient-weighted mean frequency.  Returns the pruned
    coefficient mass, which bounds the inverse transform's deviation at any
    time.
    """
    if freq_tol < 0 or prune_floor < 0:
        raise ValueError("tolerances must be nonnegative")
    w, c = f.omegas, f.coeffs
    if freq_tol > 0 and len(f) > 1:
        gaps = np.diff(w) > freq_tol
        cluster = np.concatenate([[0], np.cumsum(gaps)])
        n_clusters = cluster[-1] + 1
        re = np.bincount(cluster, weights=c.real, minlength=n_clusters)
        im = np.bincount(cluster, weights=c.imag, minlength=n_clusters)
        mass = np.bincount(cluster, weights=np.abs(c), minlength=n_clusters)
        wsum = np.bincount(cluster, weights=np.abs(c) * w, minlength=n_clusters)
        counts = np.bincount(cluster, minlength=n_clusters)
        plain = np.bincount(cluster, weights=w, minlength=n_clusters) / counts
        with np.errstate(invalid="ignore"):
            w = np.where(mass > 0, wsum / np.where(mass > 0, mass, 1.0), plain)
        c = re + 1j * im
    dropped = 0.0
    if prune_floor > 0:
        keep = np.abs(c) >= prune_floor
        dropped = float(np.sum(np.abs(c[~keep])))
        w, c = w[keep], c[keep]
    live = c != 0
    return PoleSum(omegas=w[live], coeffs=c[live], real_valued=f.real_valued), dropped


def real_asymmetry(f: PoleSum) -> float:
    """Max |c(w) - conj(c(-w))| over the pole set (0 for a real signal)."""
    if len(f) == 0:
        return 0.0
    mirrored = conjugate_polesum(f)
    both = np.unique(np.concatenate([f.omegas, mirrored.omegas]))
    c1 = np.zeros(both.size, dtype=complex)
    c2 = np.zeros(both.size, dtype=complex)
    c1[np.searchsorted(both, f.omegas)] = f.coeffs
    c2[np.searchsorted(both, mirrored.omegas)] = mirrored.coeffs
    return float(np.max(np.abs(c1 - c2)))


def polesum_distance(f: PoleSum, g: PoleSum, freq_tol: float = 1e-9) -> float:
    """Max coefficient difference after aligning pole sets within freq_tol."""
    fa, _ = consolidate(f, freq_tol, 0.0)
    ga, _ = consolidate(g, freq_tol, 0.0)
    diff = add(fa, scale(ga, -1.0))
    merged, _ = consolidate(diff, freq_tol, 0.0)
    if len(merged) == 0:
        return 0.0
    return float(np.max(np.abs(merged.coeffs)))


@dataclass(frozen=True)
class PolePolicy:
    """Consolidation and budget knobs for pole-sum pipelines.

    freq_tol merges near-degenerate frequencies (scale it to the coupling,
    e.g. 1e-9 * J); prune_floor trades accuracy for size and is reported as
    dropped mass; max_pairs caps star-product growth.
    """

    freq_tol: float = 0.0
    prune_floor: float = 0.0
    max_pairs: int = DEFAULT_MAX_PAIRS


def _amplitude_matrices(eig: EigenSystem, psi0: StateVector, site: int):
    """Pole coefficients <a l|n><n|psi0> for both site spins, all complement words.

    Returns (energies, c_up, c_dn) keeping only eigenstates with nonzero
    initial overlap: c_up[l, j] multiplies the pole at energies[j].
    """
    n = eig.dimension.bit_length() - 1
    if not 1 <= site <= n:
        raise ValueError(f"site {site} out of range 1..{n}")
    d = eig.dimension // 2
    energies, ups, dns = [], [], []
    for b in eig.blocks:
        c = b.vectors.T @ psi0[b.indices]
        live = np.abs(c) > OVERLAP_FLOOR
        if not np.any(live):
            continue
        amp = b.vectors[:, live] * c[live]
        bits = (b.indices >> (n - site)) & 1
        p = n - site
        ls = ((b.indices >> (p + 1)) << p) | (b.indices & ((1 << p) - 1))
        c_up = np.zeros((d, int(np.sum(live))), dtype=complex)
        c_dn = np.zeros_like(c_up)
        c_up[ls[bits == 1]] = amp[bits == 1]
        c_dn[ls[bits == 0]] = amp[bits == 0]
        energies.append(b.energies[live])
        ups.append(c_up)
        dns.append(c_dn)
    if not energies:
        raise ValueError("initial state has no overlap with any eigenstate")
    return (
        np.concatenate(energies),
        np.concatenate(ups, axis=1),
        np.concatenate(dns, axis=1),
    )


def amplitude_polesum(
    eig: EigenSystem, psi0: StateVector, site: int, up: bool, l: int
) -> PoleSum:
    """Laplace transform of the amplitude <a l|psi(t)>: poles at the energies.

    `up` selects the site spin a; `l` indexes the complement word.
    """
    psi0 = as_state(psi0, eig.dimension)
    n = eig.dimension.bit_length() - 1
    word = insert_site_bit(l, 1 if up else 0, site, n)
    target_pop = int(word).bit_count()
    for b in eig.blocks:
        if int(b.indices[0]).bit_count() != target_pop:
            continue
        pos = int(np.searchsorted(b.indices, word))
        c = b.vectors.T @ psi0[b.indices]
        c[np.abs(c) <= OVERLAP_FLOOR] = 0.0
        return polesum(b.energies, b.vectors[pos, :] * c)
    raise AssertionError("unreachable: every word belongs to one block")


@dataclass(frozen=True)
class QctfBlock:
    """Off-diagonal (up, down) block of the Laplace-domain density matrix."""

    site: int
    complement_dim: int
    entries: dict[tuple[int, int], PoleSum]

    def element(self, l: int, k: int) -> PoleSum:
        return self.entries.get((l, k), polesum([], []))


def qctf_block(
    eig: EigenSystem,
    psi0: StateVector,
    site: int,
    max_pairs: int = DEFAULT_MAX_PAIRS,
) -> QctfBlock:
    """All elements <up,l| rho(s) |down,k> as pole sums."""
    psi0 = as_state(psi0, eig.dimension)
    d = eig.dimension // 2
    energies, c_up, c_dn = _amplitude_matrices(eig, psi0, site)
    m = energies.size
    if d * d * m * m > max_pairs:
        raise PoleBudgetError(
            f"block needs about {d * d * m * m} pair terms, budget {max_pairs}"
        )
    omega = np.subtract.outer(energies, energies).ravel()
    entries = {}
    for l in range(d):
        if not np.any(c_up[l]):
            continue
        for k in range(d):
            if not np.any(c_dn[k]):
                continue
            coeff = np.multiply.outer(c_up[l], c_dn[k].conj()).ravel()
            ps = polesum(omega, coeff)
            if len(ps):
                entries[(l, k)] = ps
    return QctfBlock(site=site, complement_dim=d, entries=entries)


def reconstruct_element(block: QctfBlock, l: int, k: int, t: float) -> complex:
    """Inverse transform of one block element; absent entries are zero."""
    entry = block.entries.get((l, k))
    if entry is None:
        return 0j
    return complex(eval_time(entry, t))


def entanglement_polesum(
    eig: EigenSystem,
    psi0: StateVector,
    site: int,
    policy: PolePolicy | None = None,
) -> PoleSum:
    """Laplace transform of q(t) = det rho_site(t) as an exact pole sum.

    Assembles the four Laplace-domain blocks of the site's reduced density
    matrix and combines them as r_pp * r_mm - r_pm * r_mp; the result must be
    conjugate-symmetric (real signal) and is flagged as such.
    """
    if policy is None:
        policy = PolePolicy()
    psi0 = as_state(psi0, eig.dimension)
    energies, c_up, c_dn = _amplitude_matrices(eig, psi0, site)
    omega = np.subtract.outer(energies, energies).ravel()

    def block(ca, cb):
        return polesum(omega, (ca.T @ cb.conj()).ravel())

    r_pp = block(c_up, c_up)
    r_mm = block(c_dn, c_dn)
    r_pm = block(c_up, c_dn)
    r_mp = block(c_dn, c_up)
    pairs = len(r_pp) * len(r_mm) + len(r_pm) * len(r_mp)
    if pairs > policy.max_pairs:
        raise PoleBudgetError(
            f"measure needs {pairs} pair terms, budget {policy.max_pairs}; "
            "increase max_pairs or set a prune_floor"
        )
    q = add(
        star_product(r_pp, r_mm, policy.max_pairs),
        scale(star_product(r_pm, r_mp, policy.max_pairs), -1.0),
    )
    q, _ = consolidate(q, policy.freq_tol, policy.prune_floor)
    asym = real_asymmetry(q)
    if asym > 1e-9:
        raise NumericContractError(
            f"measure pole set breaks conjugate symmetry by {asym:.3e}"
        )
    return PoleSum(omegas=q.omegas, coeffs=q.coeffs, real_valued=True)


@dataclass(frozen=True)
class EigenstateSplit:
    """Decomposition a+|up>|A+> + a-|down>|A-> of a state at one site."""

    alpha_plus: complex
    alpha_minus: complex
    a_plus: np.ndarray
    a_minus: np.ndarray
    overlap: complex  # <A-|A+>; 0 sentinel when either branch is empty


def static_measure(
    vector: StateVector, site: int, _zero_tol: float = 1e-12
) -> tuple[EigenstateSplit, float]:
    """Entanglement of a single (eigen)state from its site split.

    q = |a+ a-|^2 (1 - |<A-|A+>|^2), which equals det of the site's reduced
    density matrix; the stationary measure of an eigenstate.
    """
    vector = as_state(vector)
    n = vector.size.bit_length() - 1
    m = _site_axis_first(vector, site, n)
    alpha_p = float(np.linalg.norm(m[0]))
    alpha_m = float(np.linalg.norm(m[1]))
    if min(alpha_p, alpha_m) < _zero_tol:
        # product along this cut: measure vanishes, overlap undefined
        a_plus = m[0] / alpha_p if alpha_p >= _zero_tol else np.zeros_like(m[0])
        a_minus = m[1] / alpha_m if alpha_m >= _zero_tol else np.zeros_like(m[1])
        split = EigenstateSplit(alpha_p, alpha_m, a_plus, a_minus, 0j)
        return split, 0.0
    a_plus = m[0] / alpha_p
    a_minus = m[1] / alpha_m
    overlap = complex(np.vdot(a_minus, a_plus))
    q = (alpha_p * alpha_m) ** 2 * (1.0 - abs(overlap) ** 2)
    return EigenstateSplit(alpha_p, alpha_m, a_plus, a_minus, overlap), float(q)


def nonlocality_overlap(split: EigenstateSplit, _zero_tol: float = 1e-12) -> float:
    """|<A-|A+>| in [0, 1]: 1 means locally product-like, 0 strictly non-local."""
    if min(abs(split.alpha_plus), abs(split.alpha_minus)) < _zero_tol:
        raise ValueError(
            "overlap undefined: one spin branch has no weight at this site"
        )
    return abs(split.overlap)
