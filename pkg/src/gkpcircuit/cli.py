"""Command-line front end writing plot-ready CSV/JSON tables and a run manifest.

Every subcommand accepts ``--out``, ``--format {csv,json}``, ``--config``
(a JSON file of parameter values) and ``--manifest``.  Parameter values are
resolved as flags > config file > built-in defaults.  The number of worker
threads used by sweeps is read from GKPCIRCUIT_THREADS.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
import time
import warnings
from fractions import Fraction

import numpy as np

from . import __version__
from .core import (GYRATOR_G, G0, PLANCK, CircuitParams, ConvergenceError, FluxRatio, GKPError,
                   ModelParams, TruncationWarning, ValidationError, delta_from_ratio,
                   map_circuit_to_model)

# name -> (type, default, help) per subcommand
SPECS = {
    "butterfly": {
        "max_denominator": (int, 12, "largest p and q"),
        "max_ratio": (float, 4.0, "largest q/p"),
        "k_grid": (int, 32, "k-points per Brillouin-zone direction"),
    },
    "bands": {
        "v_over_hwc": (float, 0.25, "V / hbar w_c"),
        "max_denominator": (int, 6, "largest p and q"),
        "max_ratio": (float, 4.0, "largest q/p"),
        "k_grid": (int, 6, "k-points per direction"),
        "n_max": (int, 10, "highest Landau level"),
        "levels": (int, 3, "Landau levels kept per k-point"),
    },
    "confined-spectrum": {
        "v_over_hwc": (float, 0.25, "V / hbar w_c"),
        "hw0_min": (float, 0.05, "smallest hbar w0 / V"),
        "hw0_max": (float, 1.0, "largest hbar w0 / V"),
        "points": (int, 20, "grid points"),
        "levels": (int, 10, "levels per point"),
        "n_max": (int, 10, "Landau-level truncation"),
        "m_max": (int, 120, "guiding-center truncation"),
    },
    "gap-fit": {
        "v_over_hwc": (float, 0.25, "V / hbar w_c"),
        "hw0_min": (float, 0.08, "smallest hbar w0 / V"),
        "hw0_max": (float, 0.2, "largest hbar w0 / V"),
        "points": (int, 7, "grid points"),
        "n_max": (int, 10, "Landau-level truncation"),
        "m_max": (int, 200, "guiding-center truncation"),
    },
    "lll-weight": {
        "v_over_hwc": (float, 0.4, "V / hbar w_c"),
        "hw0_over_v": (float, 0.8, "hbar w0 / V"),
        "flux": (str, "1/2", "flux ratio p/q"),
        "n_max": (int, 32, "Landau-level truncation"),
        "m_max": (int, 64, "guiding-center truncation"),
        "check_convergence": (bool, False, "also solve at doubled truncation"),
        "max_defect": (float, 1e-6, "allowed change on doubling (hbar w_c)"),
    },
    "grid-states": {
        "delta": (float, 0.25, "squeezing Delta (ignored when ratio is set)"),
        "ratio": (float, 0.0, "hbar w0^2/(w_c V0); sets Delta when positive"),
        "m_max": (int, 300, "Fock truncation of the LLL Hamiltonian"),
    },
    "husimi": {
        "state": (str, "h_plus", "psi0, psi1, h_plus, h_minus or vacuum"),
        "delta": (float, 0.25, "squeezing Delta"),
        "points": (int, 256, "grid points per axis"),
        "half_width": (float, 4 * math.sqrt(math.pi), "half width of the square window"),
    },
    "wavefunction-2d": {
        "kind": (str, "h_plus", "zak, confined, h_plus or h_minus"),
        "j": (int, 0, "codeword index for kind=confined"),
        "delta": (float, 0.25, "squeezing Delta"),
        "k1": (float, 0.0, "crystal momentum k1 for kind=zak"),
        "k2": (float, 0.0, "crystal momentum k2 for kind=zak"),
        "points": (int, 256, "grid points per axis"),
        "half_width": (float, 4 * math.sqrt(math.pi), "half width of the square window"),
    },
    "noise-sweep": {
        "ej_over_ec": (float, 0.26, "E_J / E_C"),
        "el_over_ec": (float, 5e-3, "E_L / E_C"),
        "ec_ghz": (float, 13.5, "E_C / h in GHz"),
        "axis": (str, "phi1", "phi1, phi2, phiG1 or phiG2"),
        "points": (int, 41, "flux points on [0, 2 pi]"),
        "levels": (int, 4, "levels per point"),
        "n_max": (int, 24, "Landau-level truncation"),
        "m_max": (int, 48, "guiding-center truncation"),
    },
    "noise-elements": {
        "ej_over_ec": (float, 0.26, "E_J / E_C"),
        "el_over_ec": (float, 5e-3, "E_L / E_C"),
        "ec_ghz": (float, 13.5, "E_C / h in GHz"),
        "n_max": (int, 24, "Landau-level truncation"),
        "m_max": (int, 48, "guiding-center truncation"),
    },
    "gate-sim": {
        "current_na": (float, 1.0, "drive current in nA"),
        "duration_tz": (float, 1.0, "duration in units of the gate time"),
        "delta": (float, 0.25, "squeezing Delta"),
        "ej_ghz": (float, 3.5, "E_J / h in GHz (sets V0)"),
        "m_max": (int, 300, "Fock truncation"),
        "port": (int, 1, "1 drives X (logical Z), 2 drives P (logical X)"),
        "c0": (float, 1.0, "initial amplitude of codeword 0"),
        "c1": (float, 0.0, "initial amplitude of codeword 1"),
        "unconfined": (bool, False, "drop the confining term"),
    },
    "circuit-map": {
        "C": (float, 1.434e-15, "capacitance (F)"),
        "L": (float, 2.3e-6, "inductance (H); 0 for none"),
        "EJ_GHz": (float, 3.5, "E_J / h in GHz"),
        "G": (str, "two_e2_h", "gyration conductance in S, or two_e2_h / four_e2_h"),
    },
}

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE = 0, 2, 3


def _flag(name):
    return "--" + name.replace("_", "-")


def _bool(s):
    if isinstance(s, bool):
        return s
    if str(s).lower() in ("1", "true", "yes", "on"):
        return True
    if str(s).lower() in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {s!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="gkpcircuit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, spec in SPECS.items():
        p = sub.add_parser(name)
        for key, (typ, default, hlp) in spec.items():
            kw = {"dest": key, "default": argparse.SUPPRESS, "help": f"{hlp} (default {default})"}
            if typ is bool:
                kw.update(nargs="?", const=True, type=_bool_arg)
            else:
                kw["type"] = typ
            p.add_argument(_flag(key), **kw)
        p.add_argument("--out", default=None, help="output file (stdout when omitted)")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--config", default=None, help="JSON file with parameter values")
        p.add_argument("--manifest", default=None, help="manifest path (default <out>.manifest.json)")
    return parser


def _bool_arg(s):
    try:
        return _bool(s)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def resolve_config(command, flags: dict, config_path=None) -> dict:
    spec = SPECS[command]
    cfg = {k: v[1] for k, v in spec.items()}
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {config_path}: {exc}")
        if not isinstance(data, dict):
            raise ValidationError("config file must hold a JSON object")
        unknown = sorted(set(data) - set(spec))
        if unknown:
            raise ValidationError(f"unknown config keys for {command}: {', '.join(unknown)}")
        for k, v in data.items():
            typ = spec[k][0]
            try:
                cfg[k] = _bool(v) if typ is bool else typ(v)
            except (TypeError, ValueError):
                raise ValidationError(f"config key {k} must be {typ.__name__}")
    for k in spec:
        if k in flags:
            cfg[k] = flags[k]
    return cfg


# --------------------------------------------------------------------------
# subcommand bodies: each returns (columns, rows, extra manifest dict)

def _parse_flux(s):
    try:
        f = Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"flux must be a rational p/q, got {s!r}")
    return FluxRatio(f.numerator, f.denominator)


def run_butterfly(cfg):
    from .spectra import butterfly, farey_fluxes
    res = butterfly(farey_fluxes(cfg["max_denominator"], cfg["max_ratio"]), cfg["k_grid"])
    rows = [[x, e] for x, es in zip(res.values, res.energies) for e in es]
    return ["q_over_p", "energy_over_V0"], rows, {"fluxes": res.metadata["fluxes"]}


def run_bands(cfg):
    from .spectra import crystal_bands, farey_fluxes
    res = crystal_bands(cfg["v_over_hwc"], farey_fluxes(cfg["max_denominator"], cfg["max_ratio"]),
                        cfg["k_grid"], cfg["n_max"], cfg["levels"])
    rows = [[x, e] for x, es in zip(res.values, res.energies) for e in es]
    return ["q_over_p", "energy_over_hwc"], rows, {}


def _hw_grid(cfg):
    if cfg["points"] < 1:
        raise ValidationError("points must be positive")
    if not (0 < cfg["hw0_min"] <= cfg["hw0_max"]):
        raise ValidationError("need 0 < hw0_min <= hw0_max")
    return np.linspace(cfg["hw0_min"], cfg["hw0_max"], cfg["points"])


def run_confined_spectrum(cfg):
    from .spectra import confinement_sweep, find_level_crossings
    res = confinement_sweep(cfg["v_over_hwc"], _hw_grid(cfg), cfg["levels"], cfg["n_max"], cfg["m_max"])
    cross = [{"between": [float(res.values[i]), float(res.values[i + 1])], "levels": [l, l + 1]}
             for i, l in find_level_crossings(res)]
    return ["hw0_over_v", "level", "energy_over_hwc", "sector"], res.rows(), {"crossings": cross}


def run_gap_fit(cfg):
    from .spectra import confinement_sweep, fit_gap_law
    res = confinement_sweep(cfg["v_over_hwc"], _hw_grid(cfg), 2, cfg["n_max"], cfg["m_max"])
    fit = fit_gap_law(res)
    rows = [[x, 1 / x, g] for x, g in zip(res.values, fit["gap"])]
    summary = {"alpha": fit["alpha"], "c": fit["c"], "r2": fit["r2"]}
    return ["hw0_over_v", "v_over_hw0", "gap_over_hwc"], rows, {"fit": summary, "_print": summary}


def run_lll_weight(cfg):
    from .spectra import confined_spectrum, lll_weight
    model = ModelParams(_parse_flux(cfg["flux"]), cfg["v_over_hwc"], cfg["hw0_over_v"])
    n, m = cfg["n_max"], cfg["m_max"]
    sol = confined_spectrum(model, n, m, 1)
    w = lll_weight(sol.vectors[:, 0], n, m)
    extra = {"defects": {"displacement_unitarity": sol.defect, "residual": sol.residual},
             "_print": {"lll_weight": round(w, 6)}}
    if cfg["check_convergence"]:
        big = confined_spectrum(model, 2 * n, 2 * m, 1)
        dw = abs(lll_weight(big.vectors[:, 0], 2 * n, 2 * m) - w)
        de = abs(big.values[0] - sol.values[0])
        extra["defects"].update(doubling_energy=float(de), doubling_weight=float(dw))
        if de > cfg["max_defect"]:
            extra["_fail"] = f"doubling the truncation moved the ground energy by {de:.2e}"
    return ["v_over_hwc", "hw0_over_v", "lll_weight", "ground_energy_over_hwc"], \
        [[model.v_over_hwc, model.hw0_over_v, w, sol.values[0]]], extra


def run_grid_states(cfg):
    from .spectra import lll_spectrum
    from .states import approx_grid_state, hadamard_pair, fidelity, fock_to_grid
    delta = delta_from_ratio(cfg["ratio"]) if cfg["ratio"] > 0 else cfg["delta"]
    p0, p1 = approx_grid_state(0, delta), approx_grid_state(1, delta)
    hp, hm = hadamard_pair(p0, p1)
    model = ModelParams.from_lll_ratio(4 * math.pi * delta**4)
    sol = lll_spectrum(model, cfg["m_max"], 4)
    idx = {int(s): i for i, s in reversed(list(enumerate(sol.labels)))}
    nums = []
    for sec, ref in ((0, hp), (2, hm)):
        v = fock_to_grid(sol.vectors[:, idx[sec]], p0.grid).normalized()
        if np.vdot(ref.values, v.values).real < 0:
            v.values = -v.values
        nums.append(v)
    fids = {"h_plus": fidelity(hp, nums[0]), "h_minus": fidelity(hm, nums[1])}
    cols = ["X", "psi0", "psi1", "psi_h_plus", "psi_h_minus", "numerical_h_plus", "numerical_h_minus"]
    data = np.column_stack([p0.grid] + [s.values.real for s in (p0, p1, hp, hm, *nums)])
    return cols, data.tolist(), {"delta": delta, "fidelity": fids, "_print": fids,
                                 "defects": {"displacement_unitarity": sol.defect}}


def _square(cfg):
    g = np.linspace(-cfg["half_width"], cfg["half_width"], cfg["points"])
    return g, g.copy()


def run_husimi(cfg):
    from .states import SampledWavefunction, approx_grid_state, hadamard_pair, default_grid
    from .transform import lift_to_2d
    d = cfg["delta"]
    st = cfg["state"]
    if st == "vacuum":
        x = default_grid(d)
        psi = SampledWavefunction(x, math.pi ** -0.25 * np.exp(-x**2 / 2))
    elif st in ("psi0", "psi1", "h_plus", "h_minus"):
        p0, p1 = approx_grid_state(0, d), approx_grid_state(1, d)
        hp, hm = hadamard_pair(p0, p1)
        psi = {"psi0": p0, "psi1": p1, "h_plus": hp, "h_minus": hm}[st]
    else:
        raise ValidationError(f"unknown state {st!r}")
    g1, g2 = _square(cfg)
    lifted = lift_to_2d(psi, g1, g2, norm_tol=None)
    q = np.abs(lifted.values) ** 2
    a, b = np.meshgrid(g1, g2, indexing="ij")
    rows = np.column_stack([a.ravel(), b.ravel(), q.ravel()]).tolist()
    return ["x1", "x2", "q"], rows, {"norm_in_window": lifted.norm}


def run_wavefunction_2d(cfg):
    from .transform import confined_wavefunction_2d, hadamard_2d, zak_wavefunction_2d
    g1, g2 = _square(cfg)
    kind = cfg["kind"]
    if kind == "zak":
        psi = zak_wavefunction_2d(cfg["k1"], cfg["k2"], g1, g2)
    elif kind == "confined":
        psi = confined_wavefunction_2d(cfg["j"], cfg["delta"], g1, g2)
    elif kind in ("h_plus", "h_minus"):
        pair = hadamard_2d(confined_wavefunction_2d(0, cfg["delta"], g1, g2),
                           confined_wavefunction_2d(1, cfg["delta"], g1, g2))
        psi = pair[0 if kind == "h_plus" else 1]
    else:
        raise ValidationError(f"unknown kind {kind!r}")
    a, b = np.meshgrid(g1, g2, indexing="ij")
    v = psi.values.ravel()
    rows = np.column_stack([a.ravel(), b.ravel(), v.real, v.imag, np.abs(v) ** 2]).tolist()
    return ["x1", "x2", "re", "im", "abs2"], rows, {}


def _fig10(cfg):
    from .circuit import fig10_circuit
    return fig10_circuit(cfg["ej_over_ec"], cfg["el_over_ec"], cfg["ec_ghz"])


def run_noise_sweep(cfg):
    from .circuit import flux_sweep, sweet_spot_derivatives
    circ = _fig10(cfg)
    if cfg["points"] < 1:
        raise ValidationError("points must be positive")
    grid = np.linspace(0, 2 * np.pi, cfg["points"])
    res = flux_sweep(circ, cfg["axis"], grid, cfg["levels"], cfg["n_max"], cfg["m_max"])
    der = sweet_spot_derivatives(circ, cfg["axis"], levels=cfg["levels"],
                                 n_max=cfg["n_max"], m_max=cfg["m_max"])
    extra = {"sweet_spot_derivatives": {"points": [0, "pi", "2pi"], "values": der.tolist()},
             "periodicity_defect": float(np.max(np.abs(res.energies[0] - res.energies[-1])))}
    return ["phi_ext", "level", "energy_over_hwc"], res.rows(), extra


def run_noise_elements(cfg):
    from .circuit import noise_matrix_elements
    reps = noise_matrix_elements(_fig10(cfg), cfg["n_max"], cfg["m_max"], with_controls=True)
    rows = [[r.label, r.magnitude, int(r.vanishes)] for r in reps]
    return ["operator", "magnitude", "below_threshold"], rows, {}


def run_gate_sim(cfg):
    from .circuit import DriveProtocol, simulate_z_gate
    if cfg["current_na"] <= 0:
        from .circuit import ZeroCurrent
        raise ZeroCurrent("current must be positive")
    proto = DriveProtocol.constant(cfg["current_na"] * 1e-9, cfg["duration_tz"], cfg["port"])
    v0 = cfg["ej_ghz"] * 1e9 * PLANCK * math.exp(-math.pi)
    r = simulate_z_gate(proto, cfg["delta"], v0, cfg["m_max"], (cfg["c0"], cfg["c1"]),
                        confined=not cfg["unconfined"])
    t = sum(d for _, d in proto.segments)
    row = [t, r.n_gates, r.fidelity, r.logical_fidelity, r.raw_return, r.leakage, max(r.norm_defects)]
    cols = ["time_s", "n_gates", "fidelity", "logical_fidelity", "raw_return", "leakage", "norm_defect"]
    return cols, [row], {"_print": dict(zip(cols, row)),
                         "defects": {"norm_per_segment": r.norm_defects}}


def run_circuit_map(cfg):
    g = cfg["G"]
    named = {"two_e2_h": GYRATOR_G, "four_e2_h": G0}
    try:
        gval = named[g] if g in named else float(g)
    except ValueError:
        raise ValidationError(f"G must be a number or one of {sorted(named)}")
    circ = CircuitParams(cfg["C"], cfg["L"] if cfg["L"] > 0 else None, cfg["EJ_GHz"] * 1e9 * PLANCK, gval)
    model, d = map_circuit_to_model(circ)
    ghz = d.in_ghz()
    rows = [[k, v] for k, v in ghz.items()]
    rows += [["p", model.flux.p], ["q", model.flux.q], ["v_over_hwc", model.v_over_hwc],
             ["hw0_over_v", model.hw0_over_v], ["delta", d.delta]]
    return ["quantity", "value"], rows, {"_default_format": "json"}


RUNNERS = {
    "butterfly": run_butterfly, "bands": run_bands, "confined-spectrum": run_confined_spectrum,
    "gap-fit": run_gap_fit, "lll-weight": run_lll_weight, "grid-states": run_grid_states,
    "husimi": run_husimi, "wavefunction-2d": run_wavefunction_2d, "noise-sweep": run_noise_sweep,
    "noise-elements": run_noise_elements, "gate-sim": run_gate_sim, "circuit-map": run_circuit_map,
}


# --------------------------------------------------------------------------
# serialization

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    return v


def to_json(config, columns, rows) -> str:
    obj = {"config": config, "columns": columns, "rows": _jsonable(rows)}
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    cmd = ns.command
    meta_keys = {"command", "out", "format", "config", "manifest"}
    flags = {k: v for k, v in vars(ns).items() if k not in meta_keys}
    t0 = time.perf_counter()
    try:
        cfg = resolve_config(cmd, flags, ns.config)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", TruncationWarning)
            columns, rows, extra = RUNNERS[cmd](cfg)
    except ConvergenceError as exc:
        print(f"gkpcircuit {cmd}: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValidationError, GKPError) as exc:
        print(f"gkpcircuit {cmd}: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    wall = time.perf_counter() - t0
    fmt = ns.format or extra.pop("_default_format", "csv")
    extra.pop("_default_format", None)
    printed = extra.pop("_print", None)
    failure = extra.pop("_fail", None)
    text = to_csv(columns, rows) if fmt == "csv" else to_json(cfg, columns, rows)
    manifest = {
        "command": cmd, "version": __version__, "config": cfg,
        "defaults": {k: v[1] for k, v in SPECS[cmd].items()},
        "columns": columns, "format": fmt, "output": ns.out, "wall_time_s": wall,
        "truncation_warnings": sorted({str(w.message) for w in caught}),
    }
    manifest.update(extra)
    manifest = _jsonable(manifest)
    if ns.out:
        with open(ns.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        if printed is not None:
            print(json.dumps(_jsonable(printed)))
    else:
        sys.stdout.write(text)
    mpath = ns.manifest or (ns.out + ".manifest.json" if ns.out else None)
    if mpath:
        with open(mpath, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, indent=1)
            fh.write("\n")
    if failure:
        print(f"gkpcircuit {cmd}: convergence failure: {failure}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
