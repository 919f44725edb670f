"""Cross-module invariant suite run by the ``verify`` command.

Each check returns a record instead of raising, so one failure never hides
the others; the CLI turns the collected records into a JSON report and an
exit status.
"""

from __future__ import annotations

import numpy as np

from . import dynamics, lattice, perturbation, spectral
from .errors import EdgeBurstError, ExceptionalPointError, NonConvergenceError
from .lattice import LatticeParams, Site
from .presets import PRESETS, preset_params


def _record(name, preset, status, residual=None, tolerance=None, detail=""):
    return {
        "name": name,
        "preset": preset,
        "status": status,
        "residual": None if residual is None else float(residual),
        "tolerance": None if tolerance is None else float(tolerance),
        "detail": detail,
    }


def _bounded(name, preset, residual, tol, detail=""):
    status = "pass" if residual <= tol else "fail"
    return _record(name, preset, status, residual, tol, detail)


def _lattice_checks(name: str, p: LatticeParams):
    out = []
    h = lattice.build_walk_hamiltonian(p)
    h0 = lattice.build_h0(p)
    hp = lattice.build_hprime(p)
    out.append(_bounded("lattice-split-exact", name,
                        float(np.abs(h0 + hp - h).max()), 0.0))

    proj_b = np.zeros_like(h)
    proj_b[1::2, 1::2][np.diag_indices(p.length)] = 1.0
    out.append(_bounded("hermiticity-defect", name,
                        float(np.abs(h - h.conj().T
                                     + 2j * p.gamma * proj_b).max()), 0.0,
                        "H - H^dag = -2i*gamma * (B projector)"))

    h1 = lattice.build_model(p, "H1")
    h2 = lattice.build_model(p, "H2")
    gam = lattice.build_transform(p, "Gamma")
    rot = lattice.build_transform(p, "R")
    out.append(_bounded("chiral-residual", name,
                        float(np.abs(gam @ h1 @ gam + h1).max()), 1e-12))
    out.append(_bounded("rotation-equivalence", name,
                        float(np.abs(rot.conj().T @ h1 @ rot - h2).max()),
                        1e-12))

    if p.t1 > p.gamma / 2:
        h3 = lattice.build_model(p, "H3")
        s = lattice.build_transform(p, "S")
        sim = np.linalg.solve(s, h2 @ s)
        out.append(_bounded("similarity-equivalence", name,
                            float(np.abs(sim - h3).max()), 1e-10))
        rs = max(lattice.spectrum_distance(h1, h2),
                 lattice.spectrum_distance(h2, h3))
        out.append(_bounded("spectrum-sharing", name, rs, 1e-8))
    else:
        out.append(_record("similarity-equivalence", name, "skip",
                           detail="t1 <= gamma/2: no real Hermitian form"))
        out.append(_record("spectrum-sharing", name, "skip",
                           detail="t1 <= gamma/2"))

    if p.length >= 3 and p.t1 != 0 and p.t2 != 0:
        degs = [len(lattice.in_neighbors(Site(x, "B"), p))
                for x in range(1, p.length + 1)]
        ok = (degs[0] == 3 and degs[-1] == 3
              and all(d == 5 for d in degs[1:-1]))
        out.append(_record("neighbor-counts", name,
                           "pass" if ok else "fail",
                           detail=f"B in-degrees {degs[0]}/{degs[1]}/{degs[-1]}"))

    shift_exact = float(np.abs(h1 - 0.5j * p.gamma * np.eye(p.dim) - h).max())
    if abs(p.t1) == p.gamma / 2:
        # defective spectrum: eigenvalues carry O(eps^(1/k)) noise, so
        # verify the operator identity itself (exact) instead of matching
        out.append(_bounded("spectrum-shift", name, shift_exact, 0.0,
                            "H1 - i*gamma/2 = H as matrices (defective "
                            "spectrum, eigenvalue matching skipped)"))
    else:
        ev_h = np.linalg.eigvals(h)
        ev_h1 = np.linalg.eigvals(h1) - 0.5j * p.gamma
        out.append(_bounded("spectrum-shift", name,
                            max(lattice._matching_distance(ev_h, ev_h1),
                                shift_exact), 1e-10,
                            "spec(H) = spec(H1) - i*gamma/2"))
    ev1 = np.linalg.eigvals(lattice.build_model(p, "H1"))
    out.append(_bounded("chiral-pairing", name,
                        lattice._matching_distance(ev1, -ev1), 1e-8,
                        "eigenvalues of H1 come in +-E pairs"))
    return out


def _spectral_checks(name: str, p: LatticeParams, traj):
    out = []
    h = lattice.build_walk_hamiltonian(p)
    try:
        modes = spectral.eig(h)
    except ExceptionalPointError as exc:
        out.append(_record("exceptional-point-detected", name, "pass",
                           detail=str(exc)))
        out.append(_record("biorthogonality", name, "skip",
                           detail="defective basis"))
        out.append(_record("propagation-equivalence", name, "skip",
                           detail="defective basis"))
        return out

    out.append(_bounded("biorthogonality", name,
                        modes.residuals["biorthogonality"], 1e-8))
    comp_tol = max(1e-8, 50 * np.finfo(float).eps * modes.condition)
    out.append(_bounded("completeness", name, modes.residuals["completeness"],
                        comp_tol,
                        "" if comp_tol <= 1e-8 else
                        f"conditioning-limited (cond {modes.condition:.1e})"))
    out.append(_bounded("eigen-residual", name, modes.residuals["right"],
                        1e-8))

    diag = spectral.spectrum_diagnostics(modes, p.gamma)
    out.append(_record("imag-nonpositive", name,
                       "pass" if diag.all_decaying else "fail",
                       diag.max_imag, 1e-10))
    out.append(_bounded("imag-symmetric", name, diag.symmetry_residual, 1e-8,
                        "Im spectrum symmetric about -gamma/2"))
    out.append(_record("imag-even-multiplicity", name,
                       "pass" if diag.even_multiplicities else "fail",
                       detail=f"multiplicities {diag.multiplicities}"))
    if p.t1 > p.gamma / 2:
        res = float(np.abs(modes.values.imag + 0.5 * p.gamma).max())
        out.append(_bounded("imag-uniform", name, res, 1e-8,
                            "all Im(E) = -gamma/2 for t1 > gamma/2"))

    expn = spectral.expand(modes, dynamics.initial_state(p))
    worst = 0.0
    idx = np.linspace(0, len(traj.times) - 1, 9).astype(int)
    for i in idx:
        ref = traj.states[i]
        psi = spectral.propagate(modes, expn, float(traj.times[i]))
        worst = max(worst, float(np.abs(psi - ref).max()))
    out.append(_bounded("propagation-equivalence", name, worst, 1e-6,
                        "mode propagation vs direct integration"))

    if p.t1 > p.gamma / 2:
        out.append(_skin_check(name, p))
    return out


def _skin_check(name: str, p: LatticeParams):
    # right eigenvectors of the nonreciprocal chain must be the similarity
    # image of the Hermitian chain's (extended) eigenvectors; undoing the
    # per-cell beta^n envelope has to leave an eigenvector of the Hermitian
    # form.  The envelope amplification beta^-L overwhelms double precision
    # on long chains, so the check is scoped to short ones.
    beta = abs(lattice.bloch_factor(p))
    if p.length > 16 and beta < 1:
        return _record("skin-envelope", name, "skip",
                       detail=f"beta^-L = {beta ** -p.length:.1e} amplifies "
                              "noise beyond double precision")
    h2 = lattice.build_model(p, "H2")
    h3 = lattice.build_model(p, "H3")
    s_inv = np.linalg.inv(lattice.build_transform(p, "S"))
    values, v2 = np.linalg.eig(h2)
    scale = float(np.abs(h3).max()) or 1.0
    worst = 0.0
    for col in range(v2.shape[1]):
        u = s_inv @ v2[:, col]
        u /= np.linalg.norm(u)
        res = np.linalg.norm(h3 @ u - values[col] * u) / scale
        worst = max(worst, float(res))
    return _bounded("skin-envelope", name, worst, 1e-6,
                    "descaled skin modes solve the Hermitian chain")


def _dynamics_checks(name: str, p: LatticeParams, traj):
    out = []
    a_amp = traj.states[:, 0::2]
    b_amp = traj.states[:, 1::2]
    out.append(_bounded("realness-A", name,
                        float(np.abs(a_amp.imag).max()), 1e-8,
                        "Im psi^A stays zero"))
    out.append(_bounded("realness-B", name,
                        float(np.abs(b_amp.real).max()), 1e-8,
                        "Re psi^B stays zero"))
    n2 = traj.norms_squared()
    out.append(_bounded("norm-monotonic", name,
                        float(np.diff(n2).max()) if len(n2) > 1 else 0.0,
                        1e-10))
    dt = float(traj.times[1] - traj.times[0])
    # 5-point central difference: the 3-point one is not accurate enough
    # at strong hopping to resolve the 1e-6 budget
    dndt = (-n2[4:] + 8 * n2[3:-1] - 8 * n2[1:-3] + n2[:-4]) / (12 * dt)
    rates = 2.0 * p.gamma * np.abs(b_amp[2:-2]) ** 2 @ np.ones(p.length)
    out.append(_bounded("loss-rate-consistency", name,
                        float(np.abs(dndt + rates).max()), 1e-6,
                        "d<psi|psi>/dt = -2*gamma*sum|psi_B|^2"))

    if p.gamma <= 0:
        out.append(_record("decay-conservation", name, "skip",
                           detail="undefined observable at gamma = 0"))
        return out
    try:
        prof = dynamics.decay_profile(lattice.build_walk_hamiltonian(p), p)
    except NonConvergenceError as exc:
        out.append(_record("decay-conservation", name, "fail",
                           detail=str(exc)))
        return out
    total = prof.total
    ok = 0.999 <= total <= 1.001 and abs(total + prof.truncation_error - 1) <= 1e-4
    out.append(_record("decay-conservation", name, "pass" if ok else "fail",
                       abs(total - 1.0), 1e-3,
                       f"sum P = {total:.9f}, truncation "
                       f"{prof.truncation_error:.2e}"))
    return out


def _perturbation_checks(name: str, p: LatticeParams, order: int):
    out = []
    oa = perturbation.solve_perturbation(p, order)
    # exact parity of the closed-form coefficients
    worst_re, worst_im = 0.0, 0.0
    for maps in oa.orders:
        for site, poly in maps.items():
            for c in poly.scaled.values():
                if site.sub == "A":
                    worst_im = max(worst_im, abs(float(c.imag)))
                else:
                    worst_re = max(worst_re, abs(float(c.real)))
    out.append(_bounded("series-parity", name, max(worst_re, worst_im), 0.0,
                        "A coefficients real, B imaginary, exactly"))

    # d/dt of order l must reproduce the recursion right-hand side
    worst = 0.0
    for l in (1, min(3, order)):
        for site, poly in oa.orders[l].items():
            rhs = perturbation.ExpPoly(p.gamma)
            for src, coup in lattice.in_neighbors(site, p):
                prev = oa.orders[l - 1].get(src)
                if prev is None:
                    continue
                shift = perturbation._shift_for(site.sub, src.sub)
                rhs = rhs + prev.mshift(shift) * (-1j * coup)
            diff = poly.derivative() + rhs * (-1.0)
            worst = max(worst, diff.max_abs_coeff())
    out.append(_bounded("series-derivative-identity", name, worst, 1e-10,
                        "termwise d/dt(order l) == recursion RHS"))

    # final-hop decomposition resums to the full amplitude
    t_probe = np.linspace(0.0, 5.0, 11)
    total = np.zeros(len(t_probe), dtype=complex)
    for src, _ in lattice.in_neighbors(Site(1, "B"), p):
        total = total + perturbation.final_step_amplitude(
            oa, Site(1, "B"), src, t_probe)
    direct = perturbation.amplitude(oa, 1, "B", t_probe)
    out.append(_bounded("final-step-closure", name,
                        float(np.abs(total - direct).max()), 1e-12,
                        "in-neighbor resummation at matched order"))

    # series vs direct integration, only where the preset pins the order
    if order >= 40:
        h = lattice.build_walk_hamiltonian(p)
        traj = dynamics.evolve(h, dynamics.initial_state(p), 10.0, params=p)
        window = perturbation.convergence_window(oa, traj, 1e-2)
        out.append(_record("series-window", name,
                           "pass" if window >= 10.0 else "fail",
                           window, 10.0,
                           f"order-{order} series valid to t={window:g} "
                           "at tol 1e-2"))
    return out


def run_verification(preset_names=None, trajectory_tmax: float = 20.0):
    """Run every module invariant across the preset family."""
    names = list(PRESETS) if preset_names is None else list(preset_names)
    checks = []
    for name in names:
        p = preset_params(name)
        try:
            h = lattice.build_walk_hamiltonian(p)
            traj = dynamics.evolve(h, dynamics.initial_state(p),
                                   trajectory_tmax, params=p)
            checks.extend(_lattice_checks(name, p))
            checks.extend(_dynamics_checks(name, p, traj))
            checks.extend(_spectral_checks(name, p, traj))
            if p.gamma > 0 and p.length <= 16:
                order = PRESETS[name].get("order", 12)
                checks.extend(_perturbation_checks(name, p, order))
        except (EdgeBurstError, ValueError) as exc:
            checks.append(_record("suite", name, "fail", detail=repr(exc)))
    counts = {"pass": 0, "fail": 0, "skip": 0}
    for c in checks:
        counts[c["status"]] += 1
    return {
        "presets": names,
        "checks": checks,
        "counts": counts,
        "passed": counts["fail"] == 0,
    }
