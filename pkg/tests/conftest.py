import math

import numpy as np
import pytest

from lqr_landscape.lti_model import random_plant, spectral_abscissa
from lqr_landscape.registry import example_3_1, example_4_3, example_5_1, single_integrator


def suite_dims(seed):
    """Dimensions of the random suite: n in 2..6, m in 1..3 with m >= ceil(n/3).

    Single-input plants with five or six states are routinely close to
    uncontrollable, which inflates ||P*|| past 1e6.
    """
    n = 2 + seed % 5
    return n, max(1 + (seed // 5) % 3, math.ceil(n / 3))


def suite_plant(seed):
    n, m = suite_dims(seed)
    return random_plant(n, m, seed)


@pytest.fixture
def si():
    return single_integrator().plant


@pytest.fixture
def ex31():
    return example_3_1(0.1).plant


@pytest.fixture
def ex43():
    return example_4_3(0.1).plant


@pytest.fixture
def ex51():
    return example_5_1().plant


def random_stable(n, rng, margin=0.5):
    M = rng.standard_normal((n, n))
    shift = np.max(np.linalg.eigvals(M).real) + margin
    return M - shift * np.eye(n)


def random_psd(n, rng):
    G = rng.standard_normal((n, n))
    return G @ G.T


def fd_gradient(f, K, h=1e-5):
    G = np.zeros_like(K)
    for idx in np.ndindex(K.shape):
        E = np.zeros_like(K)
        E[idx] = h
        G[idx] = (f(K + E) - f(K - E)) / (2 * h)
    return G


def perturbed_gain(plant, K_star, rng, scale=0.5):
    """A stabilizing gain a fixed distance away from ``K_star`` in a random direction."""
    V = rng.standard_normal(K_star.shape)
    V /= np.linalg.norm(V)
    t = scale * (1.0 + np.linalg.norm(K_star))
    while spectral_abscissa(plant.A + plant.B @ (K_star + t * V)) > -1e-2:
        t *= 0.5
    return K_star + t * V



def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(results, key=lambda k: int(k.split("_")[1])):
        ok, detail = results[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name:<12}  {detail}")
