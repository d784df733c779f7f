"""System-side primitives: spectra, couplings, superoperator indexing.

Everything downstream works in the eigenbasis of the system Hamiltonian,
so this module owns the conventions:

* levels are sorted non-decreasing and indexed 0..d-1,
* the Bohr frequency between levels p and q is E[p] - E[q],
* a superoperator row/column is the flattened ordered pair (p, p') with
  flat index p*d + p', row-major, so that mapping rho -> A rho B becomes
  the matrix kron(A, B.T) acting on rho.ravel().

Degeneracy is decided by a tolerance ``eps_deg``.  Levels closer than
eps_deg (chained through neighbours) form one class and are snapped to
their class mean for every derived frequency, which keeps selection
rules and Bohr-frequency coincidences exact instead of
rounding-accident-dependent.  A chain whose total spread exceeds
eps_deg has no unambiguous class structure and is rejected.
"""

import numpy as np
from dataclasses import dataclass, field


__all__ = [
    "InputError",
    "InvariantError",
    "EnergySpectrum",
    "CouplingChannelSet",
    "DensityMatrix",
    "Superoperator",
    "JumpOperatorSet",
    "build_spectrum",
    "default_degeneracy_tol",
    "bohr_frequencies",
    "decompose_jump_operators",
    "flat_index",
    "index_pair",
    "lmul",
    "rmul",
    "lrmul",
    "hermitian_channel",
    "ladder_channels",
]

# validation defaults for density matrices
TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_POS = 1e-8


class InputError(ValueError):
    """Malformed or inconsistent input (CLI maps this to exit code 2)."""


class InvariantError(RuntimeError):
    """A checked invariant failed (CLI maps this to exit code 1)."""


# ---------------------------------------------------------------------------
# flat superoperator indexing

def flat_index(p, p2, dim):
    """Flat row-major index of the ordered pair (p, p2), i.e. p*dim + p2."""
    return p * dim + p2


def index_pair(k, dim):
    """Inverse of :func:`flat_index`."""
    return divmod(k, dim)


def lmul(a):
    """Superoperator matrix of rho -> a @ rho."""
    d = a.shape[0]
    return np.kron(a, np.eye(d))


def rmul(b):
    """Superoperator matrix of rho -> rho @ b."""
    d = b.shape[0]
    return np.kron(np.eye(d), b.T)


def lrmul(a, b):
    """Superoperator matrix of rho -> a @ rho @ b."""
    return np.kron(a, b.T)


# ---------------------------------------------------------------------------
# energy spectrum

def default_degeneracy_tol(levels):
    """Default eps_deg: 1e-9 times the largest level magnitude."""
    levels = np.asarray(levels, dtype=float)
    return 1e-9 * float(np.max(np.abs(levels))) if levels.size else 0.0


@dataclass(frozen=True)
class EnergySpectrum:
    """Validated energy levels plus their degeneracy-class structure.

    :param levels: raw eigenvalues, sorted non-decreasing.
    :param eps_deg: degeneracy tolerance used for classes and Bohr bins.
    :param labels: one name per level (auto-generated when omitted).

    Derived fields (filled in by :func:`build_spectrum`):

    * ``class_of[n]`` -- degeneracy-class index of level n,
    * ``class_energy[c]`` -- snapped (class-mean) energy of class c,
    * ``snapped[n]`` -- class_energy[class_of[n]].
    """

    levels: np.ndarray
    eps_deg: float
    labels: tuple
    class_of: np.ndarray
    class_energy: np.ndarray

    @property
    def dim(self):
        return len(self.levels)

    @property
    def snapped(self):
        return self.class_energy[self.class_of]

    @property
    def n_classes(self):
        return len(self.class_energy)

    def classes(self):
        """Level indices grouped by degeneracy class, in energy order."""
        return [np.flatnonzero(self.class_of == c) for c in range(self.n_classes)]

    def bohr_matrix(self):
        """d x d matrix of snapped differences E[p] - E[q], antisymmetric."""
        e = self.snapped
        return e[:, None] - e[None, :]

    def same_class(self):
        """Boolean d x d mask, True where two levels are degenerate."""
        return self.class_of[:, None] == self.class_of[None, :]


def build_spectrum(levels, eps_deg=None, labels=None):
    """Validate levels and derive the degeneracy-class structure.

    :param levels: finite reals, sorted non-decreasing.
    :param eps_deg: degeneracy tolerance; default 1e-9 * max|E|.
    :raises InputError: on unsorted/non-finite input, or when chaining
        levels within eps_deg produces a class spread over more than
        eps_deg (no unambiguous grouping exists for that tolerance).
    """
    arr = np.asarray(levels, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError("levels must be a non-empty 1d array")
    if not np.all(np.isfinite(arr)):
        raise InputError("levels must be finite")
    if np.any(np.diff(arr) < 0):
        raise InputError("levels must be sorted non-decreasing")
    if eps_deg is None:
        eps_deg = default_degeneracy_tol(arr)
    eps_deg = float(eps_deg)
    if not (eps_deg >= 0.0 and np.isfinite(eps_deg)):
        raise InputError("eps_deg must be a finite non-negative number")

    class_of = np.empty(arr.size, dtype=int)
    class_of[0] = 0
    for n in range(1, arr.size):
        # chain: a gap <= eps_deg keeps the class open
        class_of[n] = class_of[n - 1] + (1 if arr[n] - arr[n - 1] > eps_deg else 0)
    class_energy = np.array(
        [arr[class_of == c].mean() for c in range(class_of[-1] + 1)]
    )
    for c in range(class_of[-1] + 1):
        members = arr[class_of == c]
        span = members[-1] - members[0]
        if span > eps_deg:
            raise InputError(
                f"degeneracy chaining is ambiguous: levels {members.tolist()} "
                f"chain within eps_deg={eps_deg:g} but spread over {span:g}"
            )
    if labels is None:
        labels = tuple(f"E{n}" for n in range(arr.size))
    else:
        labels = tuple(str(s) for s in labels)
        if len(labels) != arr.size:
            raise InputError("labels length must match levels length")
    return EnergySpectrum(
        levels=arr.copy(),
        eps_deg=eps_deg,
        labels=labels,
        class_of=class_of,
        class_energy=class_energy,
    )


# ---------------------------------------------------------------------------
# coupling channels

@dataclass(frozen=True)
class CouplingChannelSet:
    """System operators S^a of the coupling sum_a S^a (x) B^a.

    ``adjoint_map`` sends each channel index to the index of its
    hermitian conjugate partner; it must be an involution and the stored
    matrices must satisfy S[adjoint_map[a]] == S[a]^dagger entrywise.
    A hermitian channel is its own partner.
    """

    matrices: np.ndarray          # (n_channels, d, d) complex
    labels: tuple
    adjoint_map: tuple

    @property
    def n_channels(self):
        return self.matrices.shape[0]

    @property
    def dim(self):
        return self.matrices.shape[1]

    def adjoint_matrices(self):
        """Array with entry a holding S^a-bar = (S^a)^dagger."""
        return self.matrices[list(self.adjoint_map)]

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=complex)
        if m.ndim != 3 or m.shape[1] != m.shape[2]:
            raise InputError("coupling matrices must be a (n, d, d) array")
        object.__setattr__(self, "matrices", m)
        n = m.shape[0]
        adj = tuple(int(a) for a in self.adjoint_map)
        object.__setattr__(self, "adjoint_map", adj)
        if sorted(adj) != list(range(n)):
            raise InputError("adjoint_map must be a permutation of channel indices")
        if any(adj[adj[a]] != a for a in range(n)):
            raise InputError("adjoint_map must be an involution")
        labels = tuple(str(s) for s in self.labels)
        if len(labels) != n:
            raise InputError("labels length must match channel count")
        object.__setattr__(self, "labels", labels)
        scale = max(np.max(np.abs(m)), 1.0)
        for a in range(n):
            if np.max(np.abs(m[adj[a]] - m[a].conj().T)) > 1e-13 * scale:
                raise InputError(
                    f"channel {labels[adj[a]]!r} is not the adjoint of {labels[a]!r}"
                )


def hermitian_channel(s, label="S"):
    """Single self-adjoint coupling channel."""
    s = np.asarray(s, dtype=complex)
    return CouplingChannelSet(
        matrices=s[None, :, :], labels=(label,), adjoint_map=(0,)
    )


def ladder_channels(s, label="L"):
    """Channel pair (S, S^dagger) with the swap adjoint map."""
    s = np.asarray(s, dtype=complex)
    return CouplingChannelSet(
        matrices=np.stack([s, s.conj().T]),
        labels=(label, label + "dag"),
        adjoint_map=(1, 0),
    )


# ---------------------------------------------------------------------------
# states and superoperators

@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix.

    Hermiticity and unit trace are enforced at tolerances tol_herm and
    tol_trace (1e-10 by default); the smallest eigenvalue may dip to
    -tol_pos (1e-8) to leave room for float noise in downstream checks.
    """

    matrix: np.ndarray
    tol_herm: float = TOL_HERM
    tol_trace: float = TOL_TRACE
    tol_pos: float = TOL_POS

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError("density matrix must be square")
        object.__setattr__(self, "matrix", m)
        if np.max(np.abs(m - m.conj().T)) > self.tol_herm:
            raise InputError("density matrix is not hermitian within tol_herm")
        if abs(np.trace(m).real - 1.0) > self.tol_trace or abs(np.trace(m).imag) > self.tol_trace:
            raise InputError("density matrix trace is not 1 within tol_trace")
        if self.min_eigenvalue() < -self.tol_pos:
            raise InputError("density matrix has an eigenvalue below -tol_pos")

    @property
    def dim(self):
        return self.matrix.shape[0]

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)[0])

    @classmethod
    def from_ket(cls, ket, **kw):
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(np.outer(ket, ket.conj()), **kw)

    @classmethod
    def maximally_mixed(cls, dim, **kw):
        return cls(np.eye(dim, dtype=complex) / dim, **kw)


@dataclass(frozen=True)
class Superoperator:
    """Dense d^2 x d^2 matrix acting on row-major flattened operators."""

    dim: int
    data: np.ndarray

    def __post_init__(self):
        d2 = self.dim * self.dim
        m = np.asarray(self.data, dtype=complex)
        if m.shape != (d2, d2):
            raise InputError(f"superoperator data must be {d2} x {d2}")
        object.__setattr__(self, "data", m)

    def apply(self, rho):
        rho = np.asarray(rho, dtype=complex)
        return (self.data @ rho.ravel()).reshape(self.dim, self.dim)

    def tensor(self):
        """(d, d, d, d) view indexed [p, p', q, q']."""
        d = self.dim
        return self.data.reshape(d, d, d, d)

    @classmethod
    def zero(cls, dim):
        return cls(dim, np.zeros((dim * dim, dim * dim), dtype=complex))


# ---------------------------------------------------------------------------
# Bohr frequencies and jump operators

@dataclass(frozen=True)
class BohrBin:
    """One Bohr-frequency bin: value omega and the ordered level pairs
    (p, q) whose snapped difference E[q] - E[p] falls in the bin."""

    omega: float
    pairs: tuple


def bohr_frequencies(spectrum):
    """All Bohr-frequency bins of a spectrum, sorted by omega.

    Every ordered level pair (p, q) lands in exactly one bin, keyed by
    E[q] - E[p] of the snapped energies.  Bins are built on the
    nonnegative side and mirrored by exact negation, so the set is
    exactly symmetric under omega -> -omega.

    :raises InputError: when distinct Bohr differences chain within
        eps_deg over a spread larger than eps_deg (ambiguous binning).
    """
    eps = spectrum.eps_deg
    diff = -spectrum.bohr_matrix()          # diff[p, q] = E[q] - E[p]
    same = spectrum.same_class()

    zero_pairs = tuple(zip(*np.nonzero(same)))
    pos_mask = diff > 0
    pos_vals = np.unique(diff[pos_mask])
    groups = []
    for v in pos_vals:
        if groups and v - groups[-1][0] <= eps:
            groups[-1].append(v)
        else:
            groups.append([v])
    bins = [BohrBin(0.0, zero_pairs)]
    for g in groups:
        if g[-1] - g[0] > eps:
            raise InputError(
                f"Bohr frequencies {g} chain within eps_deg={eps:g} "
                f"but spread over more than eps_deg"
            )
        omega = float(np.mean(g))
        sel = np.zeros_like(pos_mask)
        for v in g:
            sel |= diff == v
        pairs = tuple(zip(*np.nonzero(sel)))
        bins.append(BohrBin(omega, pairs))
        # mirror: transposed pairs at exactly -omega
        bins.append(BohrBin(-omega, tuple((q, p) for (p, q) in pairs)))
    bins.sort(key=lambda b: b.omega)
    return bins


@dataclass(frozen=True)
class JumpOperatorSet:
    """Frequency-resolved coupling operators S^a(omega).

    ``operators[b, a]`` is the d x d matrix of channel a restricted to
    the Bohr bin with frequency ``omegas[b]``; entry (p, q) survives iff
    E[q] - E[p] falls in that bin.  Summing a channel over all bins
    reproduces the full coupling matrix exactly, because the bins
    partition the ordered pairs.
    """

    omegas: np.ndarray            # (n_bins,)
    channel_labels: tuple
    operators: np.ndarray         # (n_bins, n_channels, d, d)
    adjoint_map: tuple

    @property
    def n_bins(self):
        return len(self.omegas)

    @property
    def dim(self):
        return self.operators.shape[2]

    def bin_index(self, omega, eps):
        hits = np.flatnonzero(np.abs(self.omegas - omega) <= max(eps, 0.0))
        if hits.size != 1:
            raise InputError(f"omega={omega:g} does not match a unique Bohr bin")
        return int(hits[0])

    def operator(self, omega, channel, eps=0.0):
        return self.operators[self.bin_index(omega, eps), channel]

    def completeness_defect(self, couplings):
        """max-abs difference between bin sums and the raw couplings."""
        total = self.operators.sum(axis=0)
        return float(np.max(np.abs(total - couplings.matrices)))

    def triples(self):
        """Iterate (omega, channel label, matrix) over nonzero entries."""
        for b, w in enumerate(self.omegas):
            for a, lab in enumerate(self.channel_labels):
                op = self.operators[b, a]
                if np.any(op != 0):
                    yield float(w), lab, op


def decompose_jump_operators(spectrum, couplings):
    """Split each coupling channel over the Bohr bins of the spectrum.

    The adjoint pairing S^a(omega)^dagger == S^{a-bar}(-omega) holds
    exactly because the bin set is exactly mirror-symmetric.
    """
    if couplings.dim != spectrum.dim:
        raise InputError("coupling dimension does not match spectrum")
    bins = bohr_frequencies(spectrum)
    d = spectrum.dim
    n = couplings.n_channels
    ops = np.zeros((len(bins), n, d, d), dtype=complex)
    for b, bn in enumerate(bins):
        for (p, q) in bn.pairs:
            ops[b, :, p, q] = couplings.matrices[:, p, q]
    return JumpOperatorSet(
        omegas=np.array([bn.omega for bn in bins]),
        channel_labels=couplings.labels,
        operators=ops,
        adjoint_map=couplings.adjoint_map,
    )
