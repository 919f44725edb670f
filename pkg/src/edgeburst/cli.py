"""Command-line front end.

Commands: decay-profile, evolve, perturb, modes, transform-check, verify.
Option precedence: hard defaults < preset < --config JSON < explicit flags;
the resolved configuration is echoed as the first comment line of every
output file and can be fed back through --config to reproduce it.

Exit codes: 0 success, 1 check failure, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import dynamics, lattice, perturbation, spectral
from .csvio import sibling_path, write_csv
from .errors import EdgeBurstError
from .lattice import LatticeParams
from .presets import PRESETS
from .verification import run_verification

MODELS = ("walk", "H1", "H2", "H3", "H4")

_DEFAULTS = {
    "x0": 1,
    "tmax": 40.0,
    "dt": 0.002,
    "eps_norm": 1e-8,
    "order": 40,
    "top_k": 8,
    "model": "walk",
    "sites": "all",
}
_PARAM_KEYS = ("t1", "t2", "gamma", "length", "x0")
_OPTION_KEYS = ("tmax", "dt", "eps_norm", "order", "top_k", "model", "sites")


class UsageError(Exception):
    pass


def _add_common(sub):
    sub.add_argument("--t1", type=float)
    sub.add_argument("--t2", type=float)
    sub.add_argument("--gamma", type=float)
    sub.add_argument("--length", type=int)
    sub.add_argument("--x0", type=int)
    sub.add_argument("--preset", choices=sorted(PRESETS))
    sub.add_argument("--config", help="JSON file with configuration keys")
    sub.add_argument("--out", help="output path (base path for commands "
                                   "that emit more than one file)")


def _add_options(sub, *names):
    flags = {
        "tmax": dict(type=float),
        "dt": dict(type=float),
        "eps_norm": dict(type=float),
        "order": dict(type=int),
        "top_k": dict(type=int),
        "model": dict(choices=MODELS),
        "sites": dict(type=str, help="comma list like 1B,5A or 'all'"),
    }
    for name in names:
        sub.add_argument("--" + name.replace("_", "-"), dest=name,
                         **flags[name])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgeburst",
        description="Lossy quantum-walk chain: decay profiles, trajectories, "
                    "closed-form series, and mode analysis.")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("decay-profile",
                         help="per-cell loss probabilities P_x")
    _add_common(sp)
    _add_options(sp, "eps_norm", "dt", "model")

    sp = subs.add_parser("evolve", help="site amplitudes over time")
    _add_common(sp)
    _add_options(sp, "tmax", "dt", "model", "sites")

    sp = subs.add_parser("perturb",
                         help="closed-form series vs main-path vs direct")
    _add_common(sp)
    _add_options(sp, "tmax", "dt", "order")

    sp = subs.add_parser("modes",
                         help="spectrum and mode-filtered edge amplitude")
    _add_common(sp)
    _add_options(sp, "tmax", "top_k")

    sp = subs.add_parser("transform-check",
                         help="symmetry and equivalence checks of the models")
    _add_common(sp)

    sp = subs.add_parser("verify", help="run the full invariant suite")
    _add_common(sp)

    return parser


def resolve_config(args) -> dict:
    """Merge defaults, preset, config file, and explicit flags."""
    file_cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise UsageError("--config must hold a JSON object")

    preset = getattr(args, "preset", None) or file_cfg.get("preset")
    cfg = dict(_DEFAULTS)
    cfg["preset"] = preset
    if preset:
        if preset not in PRESETS:
            raise UsageError(f"unknown preset {preset!r}")
        cfg.update(PRESETS[preset])
    for key in _PARAM_KEYS + _OPTION_KEYS:
        if key in file_cfg and file_cfg[key] is not None:
            cfg[key] = file_cfg[key]
    for key in _PARAM_KEYS + _OPTION_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v

    missing = [k for k in ("t1", "t2", "gamma", "length") if k not in cfg]
    if missing:
        raise UsageError(
            f"missing parameters {missing}; give a --preset or flags")
    cfg["command"] = args.command
    return cfg


def _params(cfg) -> LatticeParams:
    try:
        return LatticeParams(t1=float(cfg["t1"]), t2=float(cfg["t2"]),
                             gamma=float(cfg["gamma"]),
                             length=int(cfg["length"]), x0=int(cfg["x0"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _echo(cfg, keys) -> dict:
    out = {k: cfg[k] for k in ("command", "preset") if cfg.get(k)}
    out["command"] = cfg["command"]
    for k in _PARAM_KEYS:
        out[k] = cfg[k]
    for k in keys:
        out[k] = cfg[k]
    return out


def _require_out(cfg, args):
    if not getattr(args, "out", None):
        raise UsageError("--out is required for this command")
    return args.out


def _parse_sites(spec: str, length: int):
    if spec == "all":
        return [(x, s) for x in range(1, length + 1) for s in ("A", "B")]
    sites = []
    for token in spec.split(","):
        token = token.strip()
        if len(token) < 2 or token[-1].upper() not in ("A", "B"):
            raise UsageError(f"bad site token {token!r} (want e.g. 5B)")
        try:
            cell = int(token[:-1])
        except ValueError as exc:
            raise UsageError(f"bad site token {token!r}") from exc
        if not 1 <= cell <= length:
            raise UsageError(f"site {token!r} outside the chain")
        sites.append((cell, token[-1].upper()))
    return sites


def cmd_decay_profile(args) -> int:
    cfg = resolve_config(args)
    out = _require_out(cfg, args)
    p = _params(cfg)
    echo = _echo(cfg, ("eps_norm", "dt", "model"))
    h = lattice.build_model(p, cfg["model"])
    prof = dynamics.decay_profile(h, p, eps_norm=float(cfg["eps_norm"]),
                                  dt=float(cfg["dt"]))
    rows = [(x + 1, float(prof.probabilities[x])) for x in range(p.length)]
    write_csv(out, ("x", "P"), rows, echo, trailers=(
        f"sum_P = {prof.total:.17g}",
        f"truncation_error = {prof.truncation_error:.17g}",
        f"horizon = {prof.horizon:.17g}",
    ))
    return 0


def cmd_evolve(args) -> int:
    cfg = resolve_config(args)
    out = _require_out(cfg, args)
    p = _params(cfg)
    echo = _echo(cfg, ("tmax", "dt", "model", "sites"))
    sites = _parse_sites(cfg["sites"], p.length)
    h = lattice.build_model(p, cfg["model"])
    traj = dynamics.evolve(h, dynamics.initial_state(p),
                           float(cfg["tmax"]), dt=float(cfg["dt"]), params=p)

    def rows():
        for i, t in enumerate(traj.times):
            for cell, sub in sites:
                amp = traj.states[i, 2 * (cell - 1) + (0 if sub == "A" else 1)]
                yield (float(t), cell, sub, float(amp.real), float(amp.imag))

    write_csv(out, ("t", "cell", "sublattice", "re", "im"), rows(), echo)
    return 0


def cmd_perturb(args) -> int:
    cfg = resolve_config(args)
    out = _require_out(cfg, args)
    p = _params(cfg)
    if int(cfg["order"]) < 1:
        raise UsageError("--order must be >= 1")
    echo = _echo(cfg, ("tmax", "dt", "order"))

    oa = perturbation.solve_perturbation(p, int(cfg["order"]))
    h = lattice.build_walk_hamiltonian(p)
    traj = dynamics.evolve(h, dynamics.initial_state(p), float(cfg["tmax"]),
                           dt=float(cfg["dt"]), params=p)
    stride = max(1, round(0.02 / float(cfg["dt"])))
    times = traj.times[::stride]
    full = perturbation.amplitude(oa, 1, "B", times)
    mp = perturbation.main_path_edge(oa, times)
    ref = traj.site_amplitude(1, "B")[::stride]

    write_csv(out, ("t", "full_im", "mainpath_im"),
              ((float(t), float(f.imag), float(m.imag))
               for t, f, m in zip(times, full, mp)), echo)
    write_csv(sibling_path(out, "_reference"),
              ("t", "cell", "sublattice", "re", "im"),
              ((float(t), 1, "B", float(r.real), float(r.imag))
               for t, r in zip(times, ref)), echo)
    return 0


def cmd_modes(args) -> int:
    cfg = resolve_config(args)
    out = _require_out(cfg, args)
    p = _params(cfg)
    echo = _echo(cfg, ("tmax", "top_k"))
    h = lattice.build_walk_hamiltonian(p)
    modes = spectral.eig(h)
    expn = spectral.expand(modes, dynamics.initial_state(p))
    chosen = spectral.select_by_im(modes, int(cfg["top_k"]), expn)

    write_csv(sibling_path(out, "_spectrum"), ("n", "re", "im"),
              ((n + 1, float(e.real), float(e.imag))
               for n, e in enumerate(modes.values)), echo)

    times = np.arange(0.0, float(cfg["tmax"]) + 1e-12, 0.05)
    idx_1b = 1

    def rows():
        for t in times:
            filt = spectral.propagate(modes, expn, float(t), chosen)
            full = spectral.propagate(modes, expn, float(t))
            yield (float(t), float(abs(filt[idx_1b])),
                   float(abs(full[idx_1b])))

    write_csv(out, ("t", "abs_psi_1B_filtered", "abs_psi_1B_full"),
              rows(), echo)
    return 0


def cmd_transform_check(args) -> int:
    cfg = resolve_config(args)
    p = _params(cfg)
    echo = _echo(cfg, ())
    checks = []

    h1 = lattice.build_model(p, "H1")
    h2 = lattice.build_model(p, "H2")
    gam = lattice.build_transform(p, "Gamma")
    rot = lattice.build_transform(p, "R")
    checks.append(("chiral", float(np.abs(gam @ h1 @ gam + h1).max()), 1e-12))
    checks.append(("rotation-equivalence",
                   float(np.abs(rot.conj().T @ h1 @ rot - h2).max()), 1e-12))
    if p.t1 > p.gamma / 2:
        h3 = lattice.build_model(p, "H3")
        s = lattice.build_transform(p, "S")
        checks.append(("similarity-equivalence",
                       float(np.abs(np.linalg.solve(s, h2 @ s) - h3).max()),
                       1e-10))
        checks.append(("spectrum-sharing",
                       max(lattice.spectrum_distance(h1, h2),
                           lattice.spectrum_distance(h2, h3)), 1e-8))
    ev1 = np.linalg.eigvals(h1)
    checks.append(("chiral-pairing",
                   lattice._matching_distance(ev1, -ev1), 1e-8))

    failed = False
    report = []
    for name, residual, tol in checks:
        ok = residual <= tol
        failed |= not ok
        report.append({"name": name, "residual": residual,
                       "tolerance": tol, "passed": ok})
        print(f"{'PASS' if ok else 'FAIL'} {name}: residual {residual:.3e} "
              f"(tol {tol:.1e})")
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            json.dump({"config": echo, "checks": report,
                       "passed": not failed}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 1 if failed else 0


def cmd_verify(args) -> int:
    presets = [args.preset] if getattr(args, "preset", None) else None
    report = run_verification(presets)
    for c in report["checks"]:
        status = c["status"].upper()
        extra = ""
        if c["residual"] is not None and c["tolerance"] is not None:
            extra = f" residual {c['residual']:.3e} (tol {c['tolerance']:.1e})"
        print(f"{status} [{c['preset']}] {c['name']}{extra}")
    counts = report["counts"]
    print(f"{counts['pass']} passed, {counts['fail']} failed, "
          f"{counts['skip']} skipped")
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0 if report["passed"] else 1


_COMMANDS = {
    "decay-profile": cmd_decay_profile,
    "evolve": cmd_evolve,
    "perturb": cmd_perturb,
    "modes": cmd_modes,
    "transform-check": cmd_transform_check,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EdgeBurstError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
