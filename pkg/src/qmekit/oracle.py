"""Ground truth to test the kernels against.

Three independent sources: closed-form qubit rate-equation results, an
exact unitary simulation of the system plus a finite oscillator bath,
and a direct quadrature of the second-order double-commutator kernel.
None of them go through the kernel builders, which is the point.
"""

import numpy as np
from dataclasses import dataclass, field

from .core import DensityMatrix, InputError, InvariantError, Superoperator, lrmul
from .dynamics import Trajectory, _check_grid, _as_state, _diagnostics

__all__ = [
    "QubitClosedForms",
    "FiniteBathModel",
    "qubit_analytic",
    "gauss_legendre_modes",
    "exact_reduced_evolution",
    "eqm_born_kernel",
]

DIM_CAP = 4096
LEAKAGE_TOL = 1e-6
UNITARITY_TOL = 1e-10


# ---------------------------------------------------------------------------
# analytic qubit

@dataclass(frozen=True)
class QubitClosedForms:
    """Rate-equation results for a two-level system.

    Populations follow p_e(t) = p_inf + (p_e(0) - p_inf) exp(-t/T1) and
    the coherence rho_{eg} follows exp(-(i omega0 + 1/T2) t) with no
    pure dephasing channel present.
    """

    omega0: float
    beta: float
    gamma_up: float
    gamma_down: float
    relaxation_rate: float
    dephasing_rate: float
    p_excited: float
    kms_ratio: float          # expected p_e / p_g at inverse temperature beta

    @property
    def t1(self):
        return 1.0 / self.relaxation_rate

    @property
    def t2(self):
        return 1.0 / self.dephasing_rate

    def population_trajectory(self, p0):
        p0 = float(p0)
        return lambda t: self.p_excited + (p0 - self.p_excited) * np.exp(
            -self.relaxation_rate * np.asarray(t, dtype=float))

    def coherence_trajectory(self, c0):
        c0 = complex(c0)
        return lambda t: c0 * np.exp(
            -(1j * self.omega0 + self.dephasing_rate) * np.asarray(t, dtype=float))


def qubit_analytic(beta, gamma_up, gamma_down, omega0):
    """Closed-form qubit results from the up/down golden-rule rates."""
    gu, gd = float(gamma_up), float(gamma_down)
    if gu < 0 or gd < 0:
        raise InputError("rates must be nonnegative")
    total = gu + gd
    if total == 0:
        raise InputError("both rates zero: steady populations are undefined")
    beta = float(beta)
    with np.errstate(over="ignore"):
        kms = float(np.exp(-beta * omega0))
    return QubitClosedForms(
        omega0=float(omega0), beta=beta, gamma_up=gu, gamma_down=gd,
        relaxation_rate=total, dephasing_rate=total / 2,
        p_excited=gu / total, kms_ratio=kms,
    )


# ---------------------------------------------------------------------------
# finite oscillator bath

def gauss_legendre_modes(j_fn, omega_max, n_modes):
    """Discretize a spectral density J(w) >= 0 on [0, omega_max].

    Couplings follow g_k^2 = J(w_k) w_k^{GL} / pi, so the mode sum
    sum_k g_k^2 f(w_k) converges to (1/pi) int_0^wmax J(w) f(w) dw.
    Returns (frequencies, couplings, record) with the quadrature rule
    documented in the record.
    """
    n = int(n_modes)
    if n < 1:
        raise InputError("need at least one mode")
    x, w = np.polynomial.legendre.leggauss(n)
    omegas = 0.5 * float(omega_max) * (x + 1.0)
    weights = 0.5 * float(omega_max) * w
    jv = np.asarray([float(j_fn(o)) for o in omegas])
    if np.any(jv < 0):
        raise InputError("spectral density must be nonnegative on the grid")
    gs = np.sqrt(jv * weights / np.pi)
    record = {
        "rule": "gauss-legendre",
        "n_modes": n,
        "omega_max": float(omega_max),
        "total_weight": float(np.sum(gs ** 2)),
    }
    return omegas, gs, record


@dataclass(frozen=True)
class FiniteBathModel:
    """System plus N oscillator modes, exact and finite.

    coupling_kind "hermitian" pairs one hermitian channel with
    sum_k g_k (a_k + a_k^dag); "rotating-pair" pairs a (lower, raise)
    channel doublet with (sum_k g_k a_k^dag, sum_k g_k a_k), i.e. the
    excitation-conserving coupling.
    """

    spectrum: object
    couplings: object
    mode_frequencies: np.ndarray
    mode_couplings: np.ndarray
    n_max: int
    beta: float
    coupling_kind: str
    dim_cap: int = DIM_CAP
    quadrature: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.mode_frequencies, dtype=float)
        g = np.asarray(self.mode_couplings, dtype=float)
        if w.ndim != 1 or w.size == 0 or g.shape != w.shape:
            raise InputError("mode frequencies/couplings must be matching 1d arrays")
        if np.any(w < 0):
            raise InputError("mode frequencies must be nonnegative")
        object.__setattr__(self, "mode_frequencies", w)
        object.__setattr__(self, "mode_couplings", g)
        if self.n_max < 1:
            raise InputError("n_max must be at least 1")
        if self.coupling_kind not in ("hermitian", "rotating-pair"):
            raise InputError(f"unknown coupling kind {self.coupling_kind!r}")
        n_ch = self.couplings.n_channels
        if self.coupling_kind == "hermitian":
            if n_ch != 1:
                raise InputError("hermitian coupling kind needs exactly one channel")
        else:
            if n_ch != 2 or tuple(self.couplings.adjoint_map) != (1, 0):
                raise InputError(
                    "rotating-pair coupling kind needs a (lower, raise) "
                    "channel doublet with the swap adjoint map"
                )
        if self.effective_dim > self.dim_cap:
            raise InputError(
                f"Hilbert dimension {self.effective_dim} exceeds the cap "
                f"{self.dim_cap}"
            )

    @property
    def n_modes(self):
        return self.mode_frequencies.size

    @property
    def total_dim(self):
        return self.spectrum.dim * (self.n_max + 1) ** self.n_modes

    @property
    def sector_eligible(self):
        """Excitation-conserving qubit on a vacuum bath: solvable in the
        one-excitation sector, independent of n_max."""
        return (self.coupling_kind == "rotating-pair"
                and np.isinf(self.beta)
                and self.spectrum.dim == 2)

    @property
    def effective_dim(self):
        """Dimension of the space the evolution actually runs in."""
        if self.sector_eligible:
            return self.n_modes + 2
        return self.total_dim

    def recurrence_time(self):
        """Half the coarse revival period 2 pi / (mean mode spacing)."""
        if self.n_modes < 2:
            return np.inf
        w = np.sort(self.mode_frequencies)
        spacing = (w[-1] - w[0]) / (self.n_modes - 1)
        if spacing <= 0:
            return np.inf
        return 0.5 * 2.0 * np.pi / spacing


def _mode_gibbs(omega, beta, n_max):
    n = np.arange(n_max + 1, dtype=float)
    if np.isinf(beta):
        p = np.zeros(n_max + 1)
        p[0] = 1.0
        return p
    logw = -beta * omega * n
    logw -= logw.max()
    p = np.exp(logw)
    return p / p.sum()


def _exact_sector(model, rho0, t_grid):
    """Rotating-pair qubit on a vacuum bath via the one-excitation sector.

    The coupling conserves excitation number, so |e, vac> only mixes
    with the one-photon states; no Fock truncation enters at all and
    the leakage question is void.
    """
    w0 = model.spectrum.snapped
    n = model.n_modes
    h = np.zeros((n + 1, n + 1))
    h[0, 0] = w0[1]
    h[1:, 1:] = np.diag(w0[0] + model.mode_frequencies)
    h[0, 1:] = model.mode_couplings
    h[1:, 0] = model.mode_couplings
    evals, vecs = np.linalg.eigh(h)

    phases = np.exp(-1j * np.outer(t_grid, evals))          # (nt, n+1)
    coeffs = phases * vecs[0].conj()[None, :]               # e^{-iEt} V^H e_0
    comps = coeffs @ vecs.T                                 # sector state at t
    amp = comps[:, 0]                                       # <e,vac|...|e,vac>
    norms = np.linalg.norm(comps, axis=1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > UNITARITY_TOL:
        raise InvariantError(f"sector evolution norm drift {drift:g}")

    ground_phase = np.exp(-1j * w0[0] * t_grid)
    pe = rho0[1, 1].real * np.abs(amp) ** 2
    coh = rho0[1, 0] * amp * np.conj(ground_phase)
    states = np.zeros((t_grid.size, 2, 2), dtype=complex)
    states[:, 1, 1] = pe
    states[:, 0, 0] = 1.0 - pe
    states[:, 1, 0] = coh
    states[:, 0, 1] = coh.conj()
    return states, drift


def _dense_operators(model):
    d = model.spectrum.dim
    nm = model.n_modes
    m1 = model.n_max + 1
    a_single = np.diag(np.sqrt(np.arange(1, m1)), k=1)
    nums = np.diag(np.arange(m1, dtype=float))
    eye_m = np.eye(m1)

    def embed(op_list):
        out = np.array([[1.0 + 0j]])
        for op in op_list:
            out = np.kron(out, op)
        return out

    h = np.kron(np.diag(model.spectrum.snapped).astype(complex),
                np.eye(m1 ** nm))
    lowers = []
    for k in range(nm):
        ops = [eye_m] * nm
        ops[k] = a_single
        ak = embed(ops)
        lowers.append(ak)
        hk = [eye_m] * nm
        hk[k] = model.mode_frequencies[k] * nums
        h += np.kron(np.eye(d), embed(hk))
    b_lower = sum(g * ak for g, ak in zip(model.mode_couplings, lowers))
    s = model.couplings.matrices
    if model.coupling_kind == "hermitian":
        h += np.kron(s[0], b_lower + b_lower.conj().T)
    else:
        h += np.kron(s[0], b_lower.conj().T) + np.kron(s[1], b_lower)
    return h, lowers


def _exact_dense(model, rho0, t_grid):
    d = model.spectrum.dim
    nm = model.n_modes
    m1 = model.n_max + 1
    mdim = m1 ** nm
    h, _ = _dense_operators(model)
    evals, vecs = np.linalg.eigh(h)

    probs = [_mode_gibbs(w, model.beta, model.n_max)
             for w in model.mode_frequencies]
    pbath = np.array([1.0])
    for p in probs:
        pbath = np.kron(pbath, p)

    rho_bath = np.diag(pbath).astype(complex)
    rho_glob = np.kron(rho0, rho_bath)
    pure_global = bool(np.isinf(model.beta)
                       and abs(np.trace(rho0 @ rho0).real - 1.0) < 1e-12)

    coeff = vecs.conj().T @ rho_glob @ vecs
    states = np.empty((t_grid.size, d, d), dtype=complex)
    top_occ = 0.0
    drift = 0.0
    # occupation projector of the top Fock level of any mode
    top_mask = np.zeros(mdim, dtype=bool)
    idx = np.arange(mdim)
    for k in range(nm):
        digit = (idx // m1 ** (nm - 1 - k)) % m1
        top_mask |= digit == model.n_max
    occ0 = None
    for i, t in enumerate(t_grid):
        ph = np.exp(-1j * evals * t)
        rho_t = vecs @ (coeff * np.outer(ph, ph.conj())) @ vecs.conj().T
        tr = np.trace(rho_t).real
        drift = max(drift, abs(tr - 1.0))
        if pure_global:
            purity = np.trace(rho_t @ rho_t).real
            drift = max(drift, abs(purity - 1.0))
        r = rho_t.reshape(d, mdim, d, mdim)
        states[i] = np.einsum("pmqm->pq", r)
        occ = float(np.einsum("pmpm->m", r).real[top_mask].sum())
        if occ0 is None:
            occ0 = occ
        top_occ = max(top_occ, occ)
    if drift > UNITARITY_TOL:
        raise InvariantError(f"global evolution not unitary: drift {drift:g}")
    # a thermal initial state occupies the top level by its Gibbs weight;
    # only growth beyond that signals truncation error
    if top_occ - occ0 > LEAKAGE_TOL:
        raise InvariantError(
            f"Fock truncation leakage: top-level occupation grew by "
            f"{top_occ - occ0:g} (limit {LEAKAGE_TOL:g}); raise n_max"
        )
    return states, drift


def exact_reduced_evolution(model, rho_s0, t_grid):
    """rho_S(t) = Tr_B[e^{-iHt} (rho_S0 x rho_B) e^{+iHt}], exactly.

    The product initial condition is built in.  Runs past half the
    coarse revival time of the discretized bath are rejected rather
    than silently returned, since the finite bath recurs there and the
    comparison with any Markov kernel stops meaning anything.
    """
    t = _check_grid(t_grid)
    rho0 = _as_state(rho_s0)
    if rho0.shape[0] != model.spectrum.dim:
        raise InputError("initial state dimension does not match model")
    t_rec = model.recurrence_time()
    if t[-1] >= t_rec:
        raise InputError(
            f"requested horizon {t[-1]:g} exceeds the recurrence guard "
            f"{t_rec:g} for this mode grid"
        )
    if model.sector_eligible:
        states, _ = _exact_sector(model, rho0, t)
        method = "exact-sector"
    else:
        states, _ = _exact_dense(model, rho0, t)
        method = "exact-dense"
    drift, herm, mineig = _diagnostics(states)
    return Trajectory(t, states, drift, herm, mineig, method)


# ---------------------------------------------------------------------------
# double-commutator quadrature

def eqm_born_kernel(spectrum, couplings, corr):
    """Second-order kernel by direct quadrature of the double commutator.

    Evaluates -(1/2) int_{-T}^{T} dtau Tr_B [H_SB(0), [H_SB(-tau), . x
    rho_B]] with T the extent of the stored correlation grid and
    S(-tau) fully conjugated by the free propagator (time-local form;
    the state carries no transport here, unlike the memory kernel used
    by the nonlocal propagator).  The symmetric window keeps only the
    dissipative part: the principal-value pieces at +tau and -tau
    cancel pairwise.  Comparable entry by entry to the Markov kernel
    with the incoming-pair resonance argument.
    """
    if couplings.dim != spectrum.dim:
        raise InputError("coupling dimension does not match spectrum")
    if corr.n_channels != couplings.n_channels:
        raise InputError("correlation/coupling channel mismatch")
    if tuple(corr.adjoint_map) != tuple(couplings.adjoint_map):
        raise InputError(
            "correlation function was built with a different channel adjoint "
            "map than the couplings; rebuild it with the matching map"
        )
    grid = corr.tau_grid
    taus = np.concatenate([-grid[:0:-1], grid])
    weights = np.full(taus.size, corr.dtau)
    weights[0] = weights[-1] = 0.5 * corr.dtau

    esnap = spectrum.snapped
    s = couplings.matrices
    n = couplings.n_channels
    d = spectrum.dim
    eye = np.eye(d)
    data = np.zeros((d * d, d * d), dtype=complex)
    for tau, w in zip(taus, weights):
        u = np.diag(np.exp(-1j * esnap * tau))
        dp = corr.at(tau)
        dm = corr.at(-tau)
        for a in range(n):
            for b in range(n):
                sbt = u @ s[b] @ u.conj().T       # S_b(-tau)
                sa = s[a]
                term = (-dp[a, b] * lrmul(sa @ sbt, eye)
                        - dm[b, a] * lrmul(eye, sbt @ sa)
                        + dm[b, a] * lrmul(sa, sbt)
                        + dp[a, b] * lrmul(sbt, sa))
                data += 0.5 * w * term
    return Superoperator(d, data)
