"""Batch front-end: JSON configs in, tables and reports out.

Every command reads one config document, validates it completely before
touching any numerics (failures name the offending field), and embeds a
provenance hash of the normalized config plus the package version in
each report it writes.  Identical config and seed give byte-identical
JSON output.

Exit codes: 0 ok, 1 invariant breach, 2 input error.
"""

import argparse
import sys
import json
import numpy as np
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    DensityMatrix, InputError, InvariantError,
    build_spectrum, hermitian_channel, ladder_channels, CouplingChannelSet,
)
from . import bath as _bath
from . import io as _io
from .kernels import (
    VARIANT_TAGS, build_kernel, kernel_provenance, kernel_to_csv,
    kernel_envelope, trace_condition_residual,
)
from .dynamics import (
    build_liouvillian, evolve_markov, evolve_nonlocal, steady_state,
    block_structure_report, trace_distance, trajectory_to_csv,
    steady_result_json,
)
from .diagnostics import equivalence_report
from .oracle import FiniteBathModel, exact_reduced_evolution, gauss_legendre_modes

__all__ = ["main", "parse_config", "serialize_config", "ModelConfig"]

TRACE_RESIDUAL_LIMIT = 1e-12
EC_AGREEMENT_LIMIT = 1e-12
SCALING_BAND = (3.0, 5.0)


# ---------------------------------------------------------------------------
# config parsing: parse first, validate everything, name the field

def _fail(path, msg):
    raise InputError(f"{path}: {msg}")


def _req(d, key, path):
    if not isinstance(d, dict):
        _fail(path, "expected an object")
    if key not in d:
        _fail(f"{path}.{key}", "missing required field")
    return d[key]


def _num(x, path):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        _fail(path, f"expected a number, got {type(x).__name__}")
    return float(x)


def _int(x, path):
    if isinstance(x, bool) or not isinstance(x, int):
        _fail(path, f"expected an integer, got {type(x).__name__}")
    return x


def _str(x, path, allowed=None):
    if not isinstance(x, str):
        _fail(path, f"expected a string, got {type(x).__name__}")
    if allowed is not None and x not in allowed:
        _fail(path, f"expected one of {sorted(allowed)}, got {x!r}")
    return x


def _matrix(x, path):
    try:
        return _io.complex_matrix_from_json(x)
    except (InputError, ValueError, TypeError) as exc:
        _fail(path, f"not a complex matrix of [re, im] pairs ({exc})")


@dataclass(frozen=True)
class ExperimentConfig:
    variant: str
    omega: float
    t_grid: np.ndarray
    initial_state: np.ndarray
    seed: int
    nonlocal_params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ModelConfig:
    spectrum: object
    couplings: object
    bath: object
    bath_doc: dict
    experiment: ExperimentConfig
    validate_params: dict

    @property
    def seed(self):
        return self.experiment.seed

    @property
    def normalized(self):
        return serialize_config(self)


def _parse_spectrum(d):
    levels = _req(d, "levels", "spectrum")
    if not isinstance(levels, list) or not levels:
        _fail("spectrum.levels", "expected a nonempty list of numbers")
    vals = [_num(x, f"spectrum.levels[{i}]") for i, x in enumerate(levels)]
    eps = d.get("eps_deg")
    if eps is not None:
        eps = _num(eps, "spectrum.eps_deg")
    try:
        return build_spectrum(vals, eps_deg=eps) if eps is not None else build_spectrum(vals)
    except InputError as exc:
        _fail("spectrum", str(exc))


def _parse_couplings(d, dim):
    kind = _str(_req(d, "kind", "couplings"), "couplings.kind",
                {"hermitian", "ladder", "explicit"})
    if kind in ("hermitian", "ladder"):
        m = _matrix(_req(d, "matrix", "couplings"), "couplings.matrix")
        if m.shape != (dim, dim):
            _fail("couplings.matrix", f"expected shape {(dim, dim)}, got {m.shape}")
        label = d.get("label", "S" if kind == "hermitian" else "L")
        _str(label, "couplings.label")
        try:
            if kind == "hermitian":
                return hermitian_channel(m, label=label)
            return ladder_channels(m, label=label)
        except InputError as exc:
            _fail("couplings.matrix", str(exc))
    mats = _req(d, "matrices", "couplings")
    if not isinstance(mats, list) or not mats:
        _fail("couplings.matrices", "expected a nonempty list")
    labels, arrays = [], []
    for i, entry in enumerate(mats):
        labels.append(_str(_req(entry, "label", f"couplings.matrices[{i}]"),
                           f"couplings.matrices[{i}].label"))
        m = _matrix(_req(entry, "matrix", f"couplings.matrices[{i}]"),
                    f"couplings.matrices[{i}].matrix")
        if m.shape != (dim, dim):
            _fail(f"couplings.matrices[{i}].matrix",
                  f"expected shape {(dim, dim)}, got {m.shape}")
        arrays.append(m)
    amap = _req(d, "adjoint_map", "couplings")
    if (not isinstance(amap, list)
            or len(amap) != len(arrays)
            or any(isinstance(x, bool) or not isinstance(x, int) for x in amap)):
        _fail("couplings.adjoint_map",
              f"expected a list of {len(arrays)} channel indices")
    try:
        return CouplingChannelSet(np.array(arrays), tuple(labels), tuple(amap))
    except InputError as exc:
        _fail("couplings", str(exc))


def _parse_bath(d, n_channels):
    kind = _str(_req(d, "kind", "bath"), "bath.kind",
                {"flat", "thermal-ohmic", "lorentzian", "gaussian", "tabulated"})
    try:
        if kind == "flat":
            return _bath.flat_spectrum(n_channels, _num(_req(d, "rate", "bath"), "bath.rate"))
        if kind == "thermal-ohmic":
            return _bath.thermal_ohmic_spectrum(
                _num(_req(d, "coupling", "bath"), "bath.coupling"),
                _num(_req(d, "cutoff", "bath"), "bath.cutoff"),
                _num(_req(d, "beta", "bath"), "bath.beta"),
                n_channels=n_channels,
            )
        if kind == "lorentzian":
            return _bath.lorentzian_spectrum(
                _num(_req(d, "rate", "bath"), "bath.rate"),
                _num(_req(d, "width", "bath"), "bath.width"),
                n_channels=n_channels,
            )
        if kind == "gaussian":
            return _bath.gaussian_spectrum(
                _num(_req(d, "rate", "bath"), "bath.rate"),
                _num(_req(d, "width", "bath"), "bath.width"),
                n_channels=n_channels,
            )
        path = _str(_req(d, "path", "bath"), "bath.path")
        beta = d.get("beta")
        if beta is not None:
            beta = _num(beta, "bath.beta")
        spec = _bath.tabulated_spectrum(path, beta=beta)
        if spec.n_channels != n_channels:
            _fail("bath.path",
                  f"tabulated file has {spec.n_channels} channels, "
                  f"couplings have {n_channels}")
        return spec
    except InputError as exc:
        msg = str(exc)
        if msg.startswith("bath"):
            raise
        _fail("bath", msg)


def _parse_t_grid(d, path):
    if isinstance(d, list):
        vals = [_num(x, f"{path}[{i}]") for i, x in enumerate(d)]
        return np.asarray(vals)
    start = _num(_req(d, "start", path), f"{path}.start")
    stop = _num(_req(d, "stop", path), f"{path}.stop")
    num = _int(_req(d, "num", path), f"{path}.num")
    if num < 2:
        _fail(f"{path}.num", "need at least 2 points")
    if stop <= start:
        _fail(f"{path}.stop", "must exceed start")
    return np.linspace(start, stop, num)


def _parse_initial_state(d, dim):
    kind = _str(_req(d, "kind", "experiment.initial_state"),
                "experiment.initial_state.kind",
                {"ground", "excited", "maximally-mixed", "matrix"})
    if kind == "ground":
        m = np.zeros((dim, dim), dtype=complex)
        m[0, 0] = 1.0
    elif kind == "excited":
        m = np.zeros((dim, dim), dtype=complex)
        m[-1, -1] = 1.0
    elif kind == "maximally-mixed":
        m = np.eye(dim, dtype=complex) / dim
    else:
        m = _matrix(_req(d, "matrix", "experiment.initial_state"),
                    "experiment.initial_state.matrix")
        if m.shape != (dim, dim):
            _fail("experiment.initial_state.matrix",
                  f"expected shape {(dim, dim)}, got {m.shape}")
    try:
        return DensityMatrix(m).matrix
    except InputError as exc:
        _fail("experiment.initial_state", str(exc))


def _parse_experiment(d, dim):
    if d is None:
        d = {}
    if not isinstance(d, dict):
        _fail("experiment", "expected an object")
    variant = d.get("variant", "lindblad")
    _str(variant, "experiment.variant", set(VARIANT_TAGS))
    omega = _num(d.get("omega", 0.0), "experiment.omega")
    t_grid = (_parse_t_grid(d["t_grid"], "experiment.t_grid")
              if "t_grid" in d else np.linspace(0.0, 10.0, 101))
    init = (_parse_initial_state(d["initial_state"], dim)
            if "initial_state" in d else _parse_initial_state({"kind": "excited"}, dim))
    seed = _int(d.get("seed", 0), "experiment.seed")
    nl = d.get("nonlocal", {})
    if nl:
        tau_grid = _parse_t_grid(_req(nl, "tau_grid", "experiment.nonlocal"),
                                 "experiment.nonlocal.tau_grid")
        tau_memory = _num(_req(nl, "tau_memory", "experiment.nonlocal"),
                          "experiment.nonlocal.tau_memory")
        nl = {"tau_grid": tau_grid, "tau_memory": tau_memory}
    return ExperimentConfig(variant, omega, t_grid, init, seed, nl)


def _parse_validate(d):
    if d is None:
        return {}
    out = {
        "eta": _num(_req(d, "eta", "validate"), "validate.eta"),
        "omega_band": _num(_req(d, "omega_band", "validate"), "validate.omega_band"),
        "n_modes": _int(_req(d, "n_modes", "validate"), "validate.n_modes"),
        "t_star": _num(_req(d, "t_star", "validate"), "validate.t_star"),
        "num": _int(d.get("num", 121), "validate.num"),
        "scales": [_num(x, f"validate.scales[{i}]")
                   for i, x in enumerate(d.get("scales", [1.0, 0.5, 0.25]))],
    }
    if out["n_modes"] < 2:
        _fail("validate.n_modes", "need at least 2 modes")
    if len(out["scales"]) < 3:
        _fail("validate.scales", "need at least 3 scale points")
    return out


def parse_config(doc):
    """Parse and fully validate a config document (dict or JSON text)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise InputError(f"config is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise InputError("config: expected a JSON object at top level")
    unknown = set(doc) - {"spectrum", "couplings", "bath", "experiment", "validate"}
    if unknown:
        _fail(sorted(unknown)[0], "unknown top-level section")
    spectrum = _parse_spectrum(_req(doc, "spectrum", "config"))
    couplings = _parse_couplings(_req(doc, "couplings", "config"), spectrum.dim)
    bath_doc = _req(doc, "bath", "config")
    bath_spec = _parse_bath(bath_doc, couplings.n_channels)
    experiment = _parse_experiment(doc.get("experiment"), spectrum.dim)
    validate_params = _parse_validate(doc.get("validate"))
    return ModelConfig(spectrum, couplings, bath_spec, dict(bath_doc),
                       experiment, validate_params)


def serialize_config(cfg):
    """Normalized dict form of a parsed config; parse(serialize(c)) == c."""
    spec = {"levels": [float(x) for x in cfg.spectrum.levels],
            "eps_deg": float(cfg.spectrum.eps_deg)}
    n = cfg.couplings.n_channels
    coup = {
        "kind": "explicit",
        "matrices": [
            {"label": cfg.couplings.labels[i],
             "matrix": _io.complex_matrix_to_json(cfg.couplings.matrices[i])}
            for i in range(n)
        ],
        "adjoint_map": [int(x) for x in cfg.couplings.adjoint_map],
    }
    exp = cfg.experiment
    exp_doc = {
        "variant": exp.variant,
        "omega": exp.omega,
        "t_grid": [float(t) for t in exp.t_grid],
        "initial_state": {"kind": "matrix",
                          "matrix": _io.complex_matrix_to_json(exp.initial_state)},
        "seed": exp.seed,
    }
    if exp.nonlocal_params:
        exp_doc["nonlocal"] = {
            "tau_grid": [float(t) for t in exp.nonlocal_params["tau_grid"]],
            "tau_memory": float(exp.nonlocal_params["tau_memory"]),
        }
    out = {"spectrum": spec, "couplings": coup, "bath": dict(cfg.bath_doc),
           "experiment": exp_doc}
    if cfg.validate_params:
        out["validate"] = dict(cfg.validate_params)
    return out


def _provenance(cfg):
    return {
        "config_sha256": _io.sha256_of(_io.canonical_dumps(cfg.normalized)),
        "version": _io.PACKAGE_VERSION,
        "seed": cfg.seed,
    }


# ---------------------------------------------------------------------------
# commands

def _build(cfg, variant, omega):
    kernel = build_kernel(cfg.spectrum, cfg.couplings, cfg.bath, variant,
                          omega=omega if variant == "born" else None)
    prov = kernel_provenance(cfg.spectrum, cfg.couplings, cfg.bath, variant,
                             omega=omega)
    return kernel, prov


def cmd_build_kernel(cfg, args, out_dir):
    variant = args.variant or cfg.experiment.variant
    if variant not in VARIANT_TAGS:
        raise InputError(f"--variant: expected one of {list(VARIANT_TAGS)}, "
                         f"got {variant!r}")
    kernel, prov = _build(cfg, variant, cfg.experiment.omega)
    residual = trace_condition_residual(kernel)
    if args.format == "csv":
        kernel_to_csv(kernel, out_dir / f"kernel-{variant}.csv")
    else:
        env = kernel_envelope(kernel, prov, include_entries=True)
        env["provenance"] = _provenance(cfg)
        _io.write_json(out_dir / f"kernel-{variant}.json", env)
    report = kernel_envelope(kernel, prov)
    report["provenance"] = _provenance(cfg)
    _io.write_json(out_dir / f"kernel-{variant}-report.json", report)
    print(f"trace residual: {_io.fmt(residual)}")
    return 0 if residual < TRACE_RESIDUAL_LIMIT else 1


def _trajectory_json(traj):
    return {
        "times": [float(t) for t in traj.times],
        "states": _io.complex_matrix_to_json(traj.states),
        "trace_drift_max": float(np.max(traj.trace_drift)),
        "herm_defect_max": float(np.max(traj.herm_defect)),
        "min_eigenvalue": float(np.min(traj.min_eigenvalue)),
        "method": traj.method,
    }


def _write_trajectory(traj, out_dir, stem, fmt):
    if fmt == "csv":
        trajectory_to_csv(traj, out_dir / f"{stem}.csv")
    else:
        _io.write_json(out_dir / f"{stem}.json", _trajectory_json(traj))


def cmd_evolve(cfg, args, out_dir):
    exp = cfg.experiment
    kernel, _ = _build(cfg, exp.variant, exp.omega)
    liouv = build_liouvillian(cfg.spectrum, kernel, exp.variant)
    traj = evolve_markov(liouv, exp.initial_state, exp.t_grid)
    _write_trajectory(traj, out_dir, "trajectory", args.format)
    diag = {
        "provenance": _provenance(cfg),
        "variant": exp.variant,
        "markov": {
            "trace_drift_max": float(np.max(traj.trace_drift)),
            "herm_defect_max": float(np.max(traj.herm_defect)),
            "min_eigenvalue": float(np.min(traj.min_eigenvalue)),
            "method": traj.method,
        },
    }
    if exp.nonlocal_params:
        corr = _bath.time_correlation(
            cfg.bath, exp.nonlocal_params["tau_grid"],
            exp.nonlocal_params["tau_memory"],
            adjoint_map=cfg.couplings.adjoint_map,
        )
        nl = evolve_nonlocal(cfg.spectrum, cfg.couplings, corr,
                             exp.initial_state, exp.t_grid)
        _write_trajectory(nl, out_dir, "trajectory-nonlocal", args.format)
        tds = [trace_distance(nl.states[i], traj.states[i])
               for i in range(exp.t_grid.size)]
        diag["nonlocal"] = {
            "trace_drift_max": float(np.max(nl.trace_drift)),
            "min_eigenvalue": float(np.min(nl.min_eigenvalue)),
            "max_trace_distance_to_markov": float(np.max(tds)),
        }
    _io.write_json(out_dir / "evolve-diagnostics.json", diag)
    print(f"evolved {exp.t_grid.size} steps; "
          f"trace drift {_io.fmt(float(np.max(traj.trace_drift)))}")
    return 0


def cmd_steady_state(cfg, args, out_dir):
    exp = cfg.experiment
    kernel, _ = _build(cfg, exp.variant, exp.omega)
    liouv = build_liouvillian(cfg.spectrum, kernel, exp.variant)
    result = steady_state(liouv)
    report = steady_result_json(result)
    report["provenance"] = _provenance(cfg)
    report["variant"] = exp.variant
    _io.write_json(out_dir / "steady-state.json", report)
    print(f"steady-state multiplicity: {result.multiplicity}")
    return 0


def cmd_compare(cfg, args, out_dir):
    rep = equivalence_report(cfg.spectrum, cfg.couplings, cfg.bath,
                             omega=cfg.experiment.omega,
                             ec_tol=EC_AGREEMENT_LIMIT)
    rep["provenance"] = _provenance(cfg)
    _io.write_json(out_dir / "compare.json", rep)
    width = max(len(k) for k in rep["pairs"])
    print(f"{'pair'.ljust(width)}  max |difference|")
    for name in sorted(rep["pairs"]):
        print(f"{name.ljust(width)}  {_io.fmt(rep['pairs'][name]['max_abs_diff'])}")
    ok = rep["ec_equals_lindblad"]
    print(f"energy-conserving == lindblad: {'yes' if ok else 'NO'}")
    return 0 if ok else 1


def cmd_block_report(cfg, args, out_dir):
    exp = cfg.experiment
    kernel, _ = _build(cfg, exp.variant, exp.omega)
    rep = block_structure_report(cfg.spectrum, kernel)
    doc = {
        "provenance": _provenance(cfg),
        "variant": exp.variant,
        "coherences_feed_populations": rep.coherences_feed_populations,
        "populations_feed_coherences": rep.populations_feed_coherences,
        "cross_entries": [
            {"row": list(r), "col": list(c), "abs_value": v}
            for r, c, v in rep.cross_entries
        ],
        "degeneracy_classes": rep.degeneracy_classes,
        "threshold": rep.threshold,
    }
    _io.write_json(out_dir / "block-report.json", doc)
    print(f"coherences feed populations: {rep.coherences_feed_populations}; "
          f"populations feed coherences: {rep.populations_feed_coherences}")
    return 0


def cmd_validate(cfg, args, out_dir):
    if not cfg.validate_params:
        raise InputError("validate: section missing from config")
    if cfg.spectrum.dim != 2:
        raise InputError("validate: needs a two-level spectrum")
    if (cfg.couplings.n_channels != 2
            or tuple(cfg.couplings.adjoint_map) != (1, 0)):
        raise InputError("validate: needs a ladder coupling pair")
    p = cfg.validate_params
    eta0, band = p["eta"], p["omega_band"]
    t = np.linspace(0.0, p["t_star"], p["num"])
    rho0 = cfg.experiment.initial_state
    omegas, gs, record = gauss_legendre_modes(
        lambda w: eta0 * w, band, p["n_modes"])
    rows = []
    for c in p["scales"]:
        model = FiniteBathModel(cfg.spectrum, cfg.couplings, omegas, c * gs,
                                n_max=1, beta=np.inf,
                                coupling_kind="rotating-pair",
                                quadrature=record)
        exact = exact_reduced_evolution(model, rho0, t)
        eta = eta0 * c * c

        def gamma_fn(w, eta=eta, band=band):
            w = np.asarray(w, dtype=float)
            j = np.where((w > 0) & (w < band), 2 * eta * np.clip(w, 0, None), 0.0)
            out = np.zeros(w.shape + (2, 2))
            out[..., 0, 0] = j
            return out

        bspec = _bath.custom_spectrum(2, gamma_fn, beta=np.inf,
                                      support_scale=band + 1.0)
        kernel = build_kernel(cfg.spectrum, cfg.couplings, bspec, "lindblad")
        liouv = build_liouvillian(cfg.spectrum, kernel, "lindblad")
        markov = evolve_markov(liouv, rho0, t)
        td = trace_distance(exact.states[-1], markov.states[-1])
        rows.append({"scale": float(c), "trace_distance": float(td)})
    ratios = [rows[i]["trace_distance"] / rows[i + 1]["trace_distance"]
              for i in range(len(rows) - 1)]
    in_band = all(SCALING_BAND[0] <= r <= SCALING_BAND[1] for r in ratios)
    doc = {
        "provenance": _provenance(cfg),
        "quadrature": record,
        "t_star": p["t_star"],
        "points": rows,
        "ratios": [float(r) for r in ratios],
        "expected_band": list(SCALING_BAND),
        "in_band": in_band,
    }
    _io.write_json(out_dir / "validate.json", doc)
    print("scale     trace distance")
    for row in rows:
        print(f"{row['scale']:<8g}  {_io.fmt(row['trace_distance'])}")
    print(f"contraction ratios: {', '.join(f'{r:.3f}' for r in ratios)} "
          f"(band {SCALING_BAND[0]:g}..{SCALING_BAND[1]:g})")
    return 0 if in_band else 1


COMMANDS = {
    "build-kernel": cmd_build_kernel,
    "evolve": cmd_evolve,
    "steady-state": cmd_steady_state,
    "compare": cmd_compare,
    "validate": cmd_validate,
    "block-report": cmd_block_report,
}


def _parser():
    p = argparse.ArgumentParser(
        prog="qmekit",
        description="Dissipative kernel builders, propagators and oracles.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON config path")
        sp.add_argument("--variant", default=None,
                        help="kernel variant override (build-kernel)")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="seed override recorded in provenance")
        sp.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="payload format for kernels and trajectories")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: --config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
        if args.seed is not None:
            exp = cfg.experiment
            cfg = ModelConfig(
                cfg.spectrum, cfg.couplings, cfg.bath, cfg.bath_doc,
                ExperimentConfig(exp.variant, exp.omega, exp.t_grid,
                                 exp.initial_state, args.seed,
                                 exp.nonlocal_params),
                cfg.validate_params,
            )
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out_dir)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
