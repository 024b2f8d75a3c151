import numpy as np
import pytest

from twopatch.params import PatchParams, compute_dispersion, derive_aux_constants
from twopatch.reaction import logistic


def p0(K2: float = 1.0) -> PatchParams:
    return PatchParams(1.0, 0.5, 1.0, logistic(1.0, 1.0), logistic(1.2, K2))


def sigma2() -> PatchParams:
    return PatchParams(1.0, 1.0, 2.0, logistic(1.0, 1.0), logistic(1.6, 1.0))


@pytest.fixture(scope="session")
def P0():
    return p0()


@pytest.fixture(scope="session")
def P0_K2():
    return p0(2.0)


@pytest.fixture(scope="session")
def S2():
    return sigma2()


@pytest.fixture(scope="session")
def p0_setup():
    """P0 with K2 = 2 on a moderate grid: V, phi1 and the envelope pair."""
    from twopatch.bounds import build_envelopes
    from twopatch.evolve import solve_stationary
    from twopatch.grid import build_grid
    from twopatch.wave import compute_profile

    p = p0(2.0)
    disp = compute_dispersion(p)
    aux = derive_aux_constants(p, disp)
    grid = build_grid(-100.0, 60.0, 0.05)
    V = solve_stationary(p, grid, tol=1e-10)
    phi1 = compute_profile(p.reaction_left, p.d1, disp.c1, -60.0, 120.0, 0.005)
    env = build_envelopes(p, disp, aux, V, phi1)
    return {"p": p, "disp": disp, "aux": aux, "grid": grid, "V": V, "phi1": phi1, "env": env}


def random_smooth(rng, x, n_bumps=6):
    out = np.zeros_like(x)
    for _ in range(n_bumps):
        c, w, a = rng.uniform(x[0], x[-1]), rng.uniform(0.5, 4.0), rng.uniform(0, 1.0)
        out += a * np.exp(-((x - c) / w) ** 2)
    return out
