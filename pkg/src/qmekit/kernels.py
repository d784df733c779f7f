"""Dissipative kernel builders in the energy eigenbasis.

Five constructions of the d^2 x d^2 kernel K_{pp',qq'} for the same
system/bath data, differing in where the bath spectrum is sampled:

``born_kernel_frequency``
    frequency-resolved second-order kernel K~(omega), the common
    ancestor of the rest.
``redfield_kernel``
    Markov kernel with the resonance argument taken from the incoming
    (column) index pair (``ansatz="in"``) or the outgoing (row) pair
    (``ansatz="out"``).
``energy_conserving_kernel``
    the "in" kernel with Kronecker selection rules enforcing energy
    conservation between the paired indices.
``lindblad_kernel``
    jump-operator (GKLS) form summed over Bohr-frequency bins.

The energy-conserving and Lindblad constructions are algebraically the
same object; ``tests`` and the comparison helpers check the agreement to
float rounding with no rotating-wave step involved.

Index conventions live in :mod:`qmekit.core`: rows are the out pair
(p, p'), columns the in pair (q, q'), flat index p*d + p'.The bath
enters through D^{ab}(w) = gamma^{a-bar, b}(w) with the channel adjoint
map supplied by the coupling set.
"""

import numpy as np
from dataclasses import dataclass

from .core import InputError, Superoperator, decompose_jump_operators
from . import io as _io

__all__ = [
    "KernelVariant",
    "KossakowskiBlock",
    "VARIANT_TAGS",
    "born_kernel_frequency",
    "redfield_kernel",
    "energy_conserving_kernel",
    "lindblad_kernel",
    "build_kernel",
    "kossakowski_matrix",
    "kernel_difference",
    "trace_condition_residual",
    "kernel_provenance",
    "kernel_to_csv",
    "kernel_envelope",
]

VARIANT_TAGS = ("born", "redfield-in", "redfield-out", "energy-conserving", "lindblad")


@dataclass(frozen=True)
class KernelVariant:
    """Kernel tag plus the provenance of everything that went into it."""

    tag: str
    omega: float          # only meaningful for the born variant
    spectrum_hash: str
    coupling_hash: str
    bath_id: str

    def as_dict(self):
        d = {
            "tag": self.tag,
            "spectrum_hash": self.spectrum_hash,
            "coupling_hash": self.coupling_hash,
            "bath_id": self.bath_id,
        }
        if self.tag == "born":
            d["omega"] = self.omega
        return d


def _prep(spectrum, couplings, bath_spec):
    """Shared validation; returns (bohr matrix, S stack, D-tilde evaluator)."""
    if couplings.dim != spectrum.dim:
        raise InputError("coupling dimension does not match spectrum")
    if bath_spec.n_channels != couplings.n_channels:
        raise InputError(
            f"bath has {bath_spec.n_channels} channels, couplings have "
            f"{couplings.n_channels}"
        )
    bohr = spectrum.bohr_matrix()          # bohr[p, q] = E_p - E_q, snapped
    adj = list(couplings.adjoint_map)

    def dtilde(args):
        # D^{ab}(w) = gamma^{a-bar, b}(w); rows permuted by the adjoint map
        return bath_spec.gamma(args)[..., adj, :]

    return bohr, couplings.matrices, dtilde


def born_kernel_frequency(spectrum, couplings, bath_spec, omega):
    """Frequency-resolved Born kernel K~(omega).

    Parameters
    ----------
    omega : float
        Fourier frequency of the kernel.  The Markov variants fix it to
        a Bohr frequency per matrix element; here it stays free.

    Returns
    -------
    Superoperator

    Notes
    -----
    The four terms sample the bath at omega +/- shifted Bohr
    frequencies; columns (q, q') always trace-cancel against the two
    gain terms, so sum_p K[p, p, q, q'] vanishes to rounding at any
    omega.  K~(omega) is a hermiticity-preserving map only at omega = 0;
    at finite omega the exact symmetry pairs it with K~(-omega).
    """
    bohr, s, dtilde = _prep(spectrum, couplings, bath_spec)
    omega = float(omega)
    d = spectrum.dim
    k = np.zeros((d, d, d, d), dtype=complex)
    rng = np.arange(d)

    wp = dtilde(omega + bohr)              # [x, y] = omega + E_{xy}
    wm = dtilde(-omega + bohr)

    t1 = np.einsum("apl,blq,Qlab->pqQ", s, s, wp)      # D(omega + E_{q'l})
    k[:, rng, :, rng] -= 0.5 * t1.transpose(2, 0, 1)

    t2 = np.einsum("aQl,blP,qlab->QPq", s, s, wm)      # D(-omega + E_{ql})
    k[rng, :, rng, :] -= 0.5 * t2.transpose(2, 1, 0)

    k += 0.5 * np.einsum("bpq,aQP,qPab->pPqQ", s, s, wm)   # D(-omega + E_{qp'})
    k += 0.5 * np.einsum("bpq,aQP,Qpab->pPqQ", s, s, wp)   # D(omega + E_{q'p})

    return Superoperator(d, k.reshape(d * d, d * d))


def redfield_kernel(spectrum, couplings, bath_spec, ansatz="in"):
    """Markov kernel with the bath sampled at literal Bohr differences.

    Parameters
    ----------
    ansatz : {"in", "out"}
        "in" takes the resonance frequency from the incoming (column)
        pair, which resolves the four bath arguments to E_{ql}, E_{q'l},
        E_{q'p'}, E_{qp}.  "out" uses the outgoing (row) pair instead,
        swapping the loss-term arguments to E_{pl}, E_{p'l}; the two
        gain terms carry the same half weight and merely exchange their
        arguments, so the ansatz choice only moves entries in coherence
        rows/columns.

    Returns
    -------
    Superoperator
    """
    if ansatz not in ("in", "out"):
        raise InputError(f"unknown ansatz {ansatz!r}, want 'in' or 'out'")
    bohr, s, dtilde = _prep(spectrum, couplings, bath_spec)
    d = spectrum.dim
    g = dtilde(bohr)                       # g[x, y, a, b] = D^{ab}(E_{xy})
    k = np.zeros((d, d, d, d), dtype=complex)
    rng = np.arange(d)

    if ansatz == "in":
        t1 = np.einsum("apl,blq,qlab->pq", s, s, g)
        t2 = np.einsum("aQl,blP,Qlab->QP", s, s, g)
    else:
        t1 = np.einsum("apl,blq,plab->pq", s, s, g)
        t2 = np.einsum("aQl,blP,Plab->QP", s, s, g)
    k[:, rng, :, rng] -= 0.5 * t1[None, :, :]
    k[rng, :, rng, :] -= 0.5 * t2.T[None, :, :]

    # gain terms: half weight each, arguments E_{q'p'} and E_{qp}; their
    # sum is ansatz-independent
    k += 0.5 * np.einsum("bpq,aQP,QPab->pPqQ", s, s, g)
    k += 0.5 * np.einsum("bpq,aQP,qpab->pPqQ", s, s, g)

    return Superoperator(d, k.reshape(d * d, d * d))


def energy_conserving_kernel(spectrum, couplings, bath_spec):
    """The "in" kernel restricted by energy-conservation selection rules.

    Loss terms pick up the same-degeneracy-class masks on (p, q) and
    (p', q'); the two gain terms collapse into a single unit-weight term
    carrying the mass-shell constraint |E_pq + E_q'p'| <= eps_deg with
    the bath sampled at E_{q'p'}.  On the constraint surface the
    alternative argument E_{qp} is the same number; tests assert that
    instead of choosing.

    Cross-blocks between populations and coherences vanish identically
    for nondegenerate spectra: the masks are built from exact
    class-snapped energies, so the zeros are structural, not rounded.
    """
    bohr, s, dtilde = _prep(spectrum, couplings, bath_spec)
    d = spectrum.dim
    g = dtilde(bohr)                       # g[x, y, a, b] = D^{ab}(E_{xy})
    same = spectrum.same_class().astype(float)
    # mass shell |E_pq + E_q'p'| <= eps_deg, axes [p, q, Q, P]
    shell = (
        np.abs(bohr[:, :, None, None] + bohr[None, None, :, :]) <= spectrum.eps_deg
    ).astype(float)
    k = np.zeros((d, d, d, d), dtype=complex)
    rng = np.arange(d)

    t1 = np.einsum("apl,blq,qlab,pq->pq", s, s, g, same)
    t2 = np.einsum("aQl,blP,Qlab,QP->QP", s, s, g, same)
    k[:, rng, :, rng] -= 0.5 * t1[None, :, :]
    k[rng, :, rng, :] -= 0.5 * t2.T[None, :, :]
    k += np.einsum("bpq,aQP,QPab,pqQP->pPqQ", s, s, g, shell)

    return Superoperator(d, k.reshape(d * d, d * d))


def lindblad_kernel(spectrum, couplings, bath_spec):
    """GKLS kernel summed over Bohr-frequency bins.

    For each bin omega_b with jump operators J_a = S^a(omega_b):

        K += sum_ab gamma^{ab}(omega_b) [ kron(J_b, conj(J_a))
             - 1/2 kron(J_a^H J_b, 1) - 1/2 kron(1, (J_a^H J_b)^T) ]

    No rotating-wave averaging is involved; binning plus the snapped
    energies make this agree with :func:`energy_conserving_kernel` to
    summation rounding.
    """
    bohr, s, _ = _prep(spectrum, couplings, bath_spec)
    d = spectrum.dim
    jumps = decompose_jump_operators(spectrum, couplings)
    k = np.zeros((d, d, d, d), dtype=complex)
    rng = np.arange(d)

    for b, omega_b in enumerate(jumps.omegas):
        j = jumps.operators[b]
        if not np.any(j != 0):
            continue
        g = bath_spec.gamma(float(omega_b))
        gain = np.einsum("ab,bpq,aPQ->pPqQ", g, j, j.conj())
        loss = np.einsum("ab,alp,blq->pq", g, j.conj(), j)   # sum_ab g (J_a^H J_b)
        k += gain
        k[:, rng, :, rng] -= 0.5 * loss[None, :, :]
        k[rng, :, rng, :] -= 0.5 * loss.T[None, :, :]

    return Superoperator(d, k.reshape(d * d, d * d))


def build_kernel(spectrum, couplings, bath_spec, variant, omega=None):
    """Dispatch on a variant tag; see ``VARIANT_TAGS``."""
    if variant == "born":
        if omega is None:
            raise InputError("born variant needs omega")
        return born_kernel_frequency(spectrum, couplings, bath_spec, omega)
    if variant == "redfield-in":
        return redfield_kernel(spectrum, couplings, bath_spec, "in")
    if variant == "redfield-out":
        return redfield_kernel(spectrum, couplings, bath_spec, "out")
    if variant == "energy-conserving":
        return energy_conserving_kernel(spectrum, couplings, bath_spec)
    if variant == "lindblad":
        return lindblad_kernel(spectrum, couplings, bath_spec)
    raise InputError(f"unknown kernel variant {variant!r}")


# ---------------------------------------------------------------------------
# per-bin dissipator blocks

@dataclass(frozen=True)
class KossakowskiBlock:
    """Channel-space rate matrix of one Bohr bin."""

    omega: float
    labels: tuple
    matrix: np.ndarray
    min_eigenvalue: float
    is_psd: bool


def kossakowski_matrix(spectrum, couplings, bath_spec, omega):
    """gamma(omega_b) restricted to the channels active in the bin.

    Parameters
    ----------
    omega : float
        Must match a Bohr bin of the spectrum within eps_deg.

    Raises
    ------
    InputError
        When omega matches no bin, or the bin carries no coupling
        support (empty Kossakowski block).
    """
    if bath_spec.n_channels != couplings.n_channels:
        raise InputError("bath/coupling channel mismatch")
    jumps = decompose_jump_operators(spectrum, couplings)
    b = jumps.bin_index(float(omega), spectrum.eps_deg)
    active = [a for a in range(couplings.n_channels)
              if np.any(jumps.operators[b, a] != 0)]
    if not active:
        raise InputError(
            f"no coupling channel has support in the Bohr bin at "
            f"omega={jumps.omegas[b]:g}"
        )
    g = bath_spec.gamma(float(jumps.omegas[b]))[np.ix_(active, active)]
    h = (g + g.conj().T) / 2
    evals = np.linalg.eigvalsh(h)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(h))))
    return KossakowskiBlock(
        omega=float(jumps.omegas[b]),
        labels=tuple(couplings.labels[a] for a in active),
        matrix=g,
        min_eigenvalue=float(evals[0]),
        is_psd=bool(evals[0] >= -tol),
    )


# ---------------------------------------------------------------------------
# comparisons and checks

def kernel_difference(kernel_a, kernel_b):
    """Entrywise max |A - B| and the ((p, p'), (q, q')) index where it sits."""
    if kernel_a.dim != kernel_b.dim:
        raise InputError("kernel dimensions differ")
    d = kernel_a.dim
    diff = np.abs(kernel_a.data - kernel_b.data)
    row, col = np.unravel_index(np.argmax(diff), diff.shape)
    return float(diff[row, col]), (divmod(int(row), d), divmod(int(col), d))


def trace_condition_residual(kernel):
    """max over columns of |sum_p K[p p, q q']|; zero means trace is
    conserved by the dissipator."""
    d = kernel.dim
    t = kernel.tensor()
    col_sums = np.einsum("ppqr->qr", t)
    return float(np.max(np.abs(col_sums)))


# ---------------------------------------------------------------------------
# provenance and export

def kernel_provenance(spectrum, couplings, bath_spec, variant, omega=None):
    return KernelVariant(
        tag=variant,
        omega=float(omega) if omega is not None else 0.0,
        spectrum_hash=_io.spectrum_hash(spectrum),
        coupling_hash=_io.coupling_hash(couplings),
        bath_id=_io.bath_id(bath_spec),
    )


def kernel_to_csv(kernel, path):
    """Write entries as (flat index, Re, Im); index is row*d^2 + col."""
    flat = kernel.data.ravel()
    with open(path, "w", newline="") as fh:
        fh.write("index,re,im\n")
        for i, z in enumerate(flat):
            fh.write(f"{i},{_io.fmt(z.real)},{_io.fmt(z.imag)}\n")


def kernel_envelope(kernel, variant, include_entries=False):
    """JSON-ready report enveloping a kernel build."""
    env = {
        "dim": kernel.dim,
        "variant": variant.as_dict(),
        "trace_residual": trace_condition_residual(kernel),
        "max_abs_entry": float(np.max(np.abs(kernel.data))),
        "version": _io.PACKAGE_VERSION,
    }
    if include_entries:
        env["entries"] = _io.complex_matrix_to_json(kernel.data)
    return env
