import numpy as np
import pytest

import edgeburst as eb


@pytest.fixture(scope="session")
def fig2a_profile():
    p = eb.preset_params("fig2a")
    return eb.decay_profile(eb.build_walk_hamiltonian(p), p)


@pytest.fixture(scope="session")
def fig2b_profile():
    p = eb.preset_params("fig2b")
    return eb.decay_profile(eb.build_walk_hamiltonian(p), p)


@pytest.fixture(scope="session")
def fig3_engines():
    """Order-40 series plus a matching direct-integration reference."""
    out = {}
    for name in ("fig3e", "fig3f"):
        p = eb.preset_params(name)
        oa = eb.solve_perturbation(p, 40)
        traj = eb.evolve(eb.build_walk_hamiltonian(p),
                         eb.initial_state(p), 10.0, params=p)
        out[name] = (oa, traj)
    return out


@pytest.fixture(scope="session")
def fig4_modes():
    out = {}
    for name in ("fig4b", "fig4c", "fig4d"):
        p = eb.preset_params(name)
        modes = eb.eig(eb.build_walk_hamiltonian(p))
        expn = eb.expand(modes, eb.initial_state(p))
        out[name] = (p, modes, expn)
    return out


def local_maxima(times, values, floor_rel=1e-3):
    """Indices of strict local maxima above floor_rel * max(values)."""
    values = np.asarray(values)
    idx = np.nonzero((values[1:-1] > values[:-2])
                     & (values[1:-1] > values[2:]))[0] + 1
    return idx[values[idx] > floor_rel * values.max()]
