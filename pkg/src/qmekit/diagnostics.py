"""Complete-positivity probes and variant comparison reports.

A generator is probed, not certified: the Choi matrix of exp(L t) is
examined at a few relaxation-scale times, and a family of states is
pushed through the map looking for a negative eigenvalue.  A negative
Choi eigenvalue alone proves the map is not CP but not that any state
goes bad (positive non-CP maps exist), so the verdicts distinguish the
two situations instead of collapsing them.
"""

import numpy as np
from dataclasses import dataclass
from scipy.linalg import expm

from .core import InputError
from .kernels import kernel_difference, trace_condition_residual
from . import io as _io

__all__ = [
    "MapCheck",
    "choi_matrix",
    "choi_spectrum",
    "default_probe_times",
    "positivity_scan",
    "map_check",
    "flip_gain_sign",
    "equivalence_report",
]

CHOI_TOL = 1e-8


def choi_matrix(superop_data, dim):
    """Choi matrix of a superoperator given on the flat pair index.

    Row index (p, q), column (p', q'): C[(p q), (p' q')] = T[p p', q q'].
    The map is CP iff C is positive semidefinite; hermiticity
    preservation of the map is hermiticity of C.
    """
    d = int(dim)
    t = np.asarray(superop_data, dtype=complex).reshape(d, d, d, d)
    return t.transpose(0, 2, 1, 3).reshape(d * d, d * d)


def default_probe_times(kernel):
    """Probe times 0.1, 1 and 10 in units of the slowest kernel rate.

    The rate is the smallest nonzero eigenvalue magnitude of the
    dissipative kernel, so the probes straddle the relaxation knee.
    """
    evals = np.linalg.eigvals(kernel.data)
    mags = np.abs(evals)
    floor = 1e-12 * max(float(mags.max()), 1e-300)
    nonzero = mags[mags > floor]
    if nonzero.size == 0:
        raise InputError("kernel is numerically zero; no rate to set probe times")
    rate = float(nonzero.min())
    return (0.1 / rate, 1.0 / rate, 10.0 / rate)


def choi_spectrum(liouv, t_probes):
    """Smallest Choi eigenvalue of exp(L t) at each probe time.

    Returns (min_eigs, herm_defects); the defect is how far each Choi
    matrix sits from hermitian, reported rather than silently absorbed
    by the hermitization that precedes the eigensolve.
    """
    d = liouv.dim
    mins, defects = [], []
    for t in t_probes:
        prop = expm(liouv.data * float(t))
        c = choi_matrix(prop, d)
        defects.append(float(np.max(np.abs(c - c.conj().T))))
        ch = (c + c.conj().T) / 2
        mins.append(float(np.linalg.eigvalsh(ch)[0]))
    return np.array(mins), np.array(defects)


def _probe_states(dim, n_random, seed):
    rng = np.random.default_rng(seed)
    states = [np.eye(dim, dtype=complex)[k] for k in range(dim)]
    for _ in range(n_random):
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        states.append(v / np.linalg.norm(v))
    return states


def positivity_scan(liouv, t_probes, n_random=64, seed=0):
    """Push pure states through exp(L t) and track the worst eigenvalue.

    Returns (min_eig, witness) with witness = (ket, time); replaying the
    witness through the same propagator reproduces min_eig, which makes
    a reported violation checkable instead of anecdotal.
    """
    d = liouv.dim
    worst = np.inf
    witness = None
    for t in t_probes:
        prop = expm(liouv.data * float(t))
        for ket in _probe_states(d, n_random, seed):
            rho = np.outer(ket, ket.conj())
            out = (prop @ rho.ravel()).reshape(d, d)
            out = (out + out.conj().T) / 2
            low = float(np.linalg.eigvalsh(out)[0])
            if low < worst:
                worst = low
                witness = (ket.copy(), float(t))
    return worst, witness


@dataclass(frozen=True)
class MapCheck:
    """Outcome of the CP/positivity probe of a generator."""

    verdict: str           # "cp-consistent" | "positivity-violating" | "inconclusive"
    probe_times: tuple
    choi_min: np.ndarray   # per probe
    choi_herm_defect: np.ndarray
    scan_min: float
    witness_ket: np.ndarray
    witness_time: float

    def as_dict(self):
        rep = {
            "verdict": self.verdict,
            "probe_times": [float(t) for t in self.probe_times],
            "choi_min": [float(x) for x in self.choi_min],
            "choi_herm_defect": [float(x) for x in self.choi_herm_defect],
            "scan_min_eigenvalue": self.scan_min,
            "tolerance": CHOI_TOL,
            "version": _io.PACKAGE_VERSION,
        }
        if self.witness_ket is not None:
            rep["witness"] = {
                "ket": _io.complex_matrix_to_json(self.witness_ket),
                "time": self.witness_time,
            }
        return rep


def map_check(liouv, kernel, t_probes=None, n_random=64, seed=0):
    """Classify a generator by Choi spectra plus a state-level scan.

    cp-consistent: no Choi eigenvalue below -1e-8 at any probe.
    positivity-violating: some evolved state has an eigenvalue below
    -1e-8; a concrete (ket, time) witness is attached.
    inconclusive: the Choi matrix dips negative but no probed state
    does, which is what a positive non-CP map looks like from here.
    """
    if t_probes is None:
        t_probes = default_probe_times(kernel)
    choi_min, defects = choi_spectrum(liouv, t_probes)
    scan_min, witness = positivity_scan(liouv, t_probes, n_random, seed)
    if np.all(choi_min >= -CHOI_TOL):
        verdict = "cp-consistent"
        wk, wt = None, None
    elif scan_min < -CHOI_TOL:
        verdict = "positivity-violating"
        wk, wt = witness
    else:
        verdict = "inconclusive"
        wk, wt = witness
    return MapCheck(
        verdict=verdict, probe_times=tuple(float(t) for t in t_probes),
        choi_min=choi_min, choi_herm_defect=defects,
        scan_min=float(scan_min), witness_ket=wk,
        witness_time=wt if wt is not None else float("nan"),
    )


def flip_gain_sign(spectrum, couplings, bath_spec):
    """Jump-form kernel rebuilt with the sandwich (gain) term negated.

    Deliberately broken: the result violates trace conservation and
    positivity by construction.  It exists so the diagnostics have a
    known-guilty generator to convict in tests and demos.
    """
    from .core import Superoperator, decompose_jump_operators
    d = spectrum.dim
    jumps = decompose_jump_operators(spectrum, couplings)
    k = np.zeros((d, d, d, d), dtype=complex)
    rng = np.arange(d)
    for b, omega_b in enumerate(jumps.omegas):
        j = jumps.operators[b]
        if not np.any(j != 0):
            continue
        g = bath_spec.gamma(float(omega_b))
        k -= np.einsum("ab,bpq,aPQ->pPqQ", g, j, j.conj())
        loss = np.einsum("ab,alp,blq->pq", g, j.conj(), j)
        k[:, rng, :, rng] -= 0.5 * loss[None, :, :]
        k[rng, :, rng, :] -= 0.5 * loss.T[None, :, :]
    return Superoperator(d, k.reshape(d * d, d * d))


def equivalence_report(spectrum, couplings, bath_spec, omega=0.0,
                       ec_tol=1e-12, coincide_tol=None):
    """Pairwise comparison of the four Markov kernels plus the resolved
    kernel at a chosen frequency.

    Asserts nothing; reports max |difference| per pair, whether the
    energy-conserving and jump constructions coincide below ec_tol
    (relative to the largest kernel entry), and where the in/out
    discrepancy lives relative to the population block.
    """
    from .kernels import build_kernel
    tags = ("redfield-in", "redfield-out", "energy-conserving", "lindblad")
    kernels = {tag: build_kernel(spectrum, couplings, bath_spec, tag) for tag in tags}
    kernels["born"] = build_kernel(spectrum, couplings, bath_spec, "born", omega=omega)
    scale = max(float(np.max(np.abs(k.data))) for k in kernels.values())
    pairs = {}
    names = list(kernels)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            diff, where = kernel_difference(kernels[a], kernels[b])
            pairs[f"{a}|{b}"] = {"max_abs_diff": diff, "at": [list(where[0]), list(where[1])]}
    ec_diff = pairs["energy-conserving|lindblad"]["max_abs_diff"]
    in_out = _in_out_entries(kernels["redfield-in"], kernels["redfield-out"],
                             threshold=(coincide_tol if coincide_tol is not None
                                        else 1e-12 * max(scale, 1e-300)))
    return {
        "dim": spectrum.dim,
        "born_omega": float(omega),
        "scale": scale,
        "pairs": pairs,
        "ec_equals_lindblad": bool(ec_diff <= ec_tol * max(scale, 1e-300)),
        "ec_lindblad_diff": ec_diff,
        "in_out": in_out,
        "trace_residuals": {tag: trace_condition_residual(k)
                            for tag, k in kernels.items()},
        "version": _io.PACKAGE_VERSION,
    }


def _in_out_entries(kernel_in, kernel_out, threshold):
    d = kernel_in.dim
    diff = np.abs(kernel_in.tensor() - kernel_out.tensor())
    entries = []
    pop_block_hit = False
    for p in range(d):
        for p2 in range(d):
            for q in range(d):
                for q2 in range(d):
                    if diff[p, p2, q, q2] > threshold:
                        on_pop = (p == p2 and q == q2)
                        pop_block_hit = pop_block_hit or on_pop
                        entries.append({
                            "row": [p, p2], "col": [q, q2],
                            "abs_diff": float(diff[p, p2, q, q2]),
                            "population_block": on_pop,
                        })
    entries.sort(key=lambda e: -e["abs_diff"])
    return {
        "max_abs_diff": float(diff.max()),
        "n_entries": len(entries),
        "entries": entries[:32],
        "population_block_touched": pop_block_hit,
        "threshold": float(threshold),
    }
