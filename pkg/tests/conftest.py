"""Shared fixtures: the rain/umbrella desk examples and random generators."""

from __future__ import annotations

import numpy as np
import pytest

import credalcast as cc


@pytest.fixture(scope="session")
def binary_rain_space():
    return cc.OutcomeSpace(("rain=0", "rain=1"), (0, 0), (0.0, 1.0))


@pytest.fixture(scope="session")
def loss_c01(binary_rain_space):
    return cc.cost_sensitive_matrix(0.1, binary_rain_space)


@pytest.fixture(scope="session")
def interval_85_95():
    return cc.binary_interval(0.85, 0.95)


@pytest.fixture(scope="session")
def interval_05_15():
    return cc.binary_interval(0.05, 0.15)


@pytest.fixture(scope="session")
def full_interval():
    return cc.binary_interval(0.0, 1.0)


# -- lifted example: features cloudy/sunny, countries A and B ------------


@pytest.fixture(scope="session")
def lifted_space():
    return cc.OutcomeSpace(
        ("cloudy/rain=0", "cloudy/rain=1", "sunny/rain=0", "sunny/rain=1"),
        (0, 0, 1, 1),
        (0.0, 1.0, 0.0, 1.0),
    )


def joint_rain(m_cloudy: float, rain_cloudy: float, rain_sunny: float) -> list[float]:
    """Joint over (cloudy/sunny x rain) from marginal and conditionals."""
    return [
        m_cloudy * (1 - rain_cloudy),
        m_cloudy * rain_cloudy,
        (1 - m_cloudy) * (1 - rain_sunny),
        (1 - m_cloudy) * rain_sunny,
    ]


@pytest.fixture(scope="session")
def lifted_P1():
    return joint_rain(0.4, 0.95, 0.05)


@pytest.fixture(scope="session")
def lifted_P2():
    return joint_rain(0.9, 0.85, 0.15)


@pytest.fixture(scope="session")
def lifted_data(lifted_space, lifted_P1, lifted_P2):
    return cc.CredalSet(lifted_space, (lifted_P1, lifted_P2))


@pytest.fixture(scope="session")
def lifted_loss(lifted_space):
    return cc.cost_sensitive_matrix(0.1, lifted_space)


@pytest.fixture(scope="session")
def maxent_forecast_P1(lifted_space, lifted_P1):
    """Forecast x -> P1(.|X=x), the maxent-optimal forecast of the example."""
    p1 = np.asarray(lifted_P1)
    mapping = {}
    for x, block in enumerate(lifted_space.feature_blocks()):
        cond = np.zeros(lifted_space.k)
        cond[block] = p1[block] / p1[block].sum()
        mapping[x] = cc.singleton(lifted_space, cond)
    return cc.Forecast(lifted_space, mapping)


# -- three-action counterexample (unique mixed-type optimum) --------------


@pytest.fixture(scope="session")
def prop25_space():
    return cc.OutcomeSpace(("w1", "w2"), (0, 0))


@pytest.fixture(scope="session")
def prop25_data(prop25_space):
    return cc.CredalSet(prop25_space, ([1.0, 0.0], [0.0, 1.0]))


@pytest.fixture(scope="session")
def prop25_loss():
    return cc.LossMatrix([[2.0, 7.0], [6.0, 3.0], [4.0, 5.0]], ("a1", "a2", "a3"))


# -- random instance generators -------------------------------------------


def random_space(rng: np.random.Generator, k: int | None = None,
                 n_features: int | None = None) -> cc.OutcomeSpace:
    k = int(rng.integers(2, 6)) if k is None else k
    n_features = (int(rng.integers(1, min(3, k) + 1))
                  if n_features is None else n_features)
    feature_of = list(range(n_features)) + [
        int(rng.integers(0, n_features)) for _ in range(k - n_features)]
    rng.shuffle(feature_of)
    labels = tuple(f"w{i}" for i in range(k))
    return cc.OutcomeSpace(labels, tuple(feature_of))


def random_probvec(rng: np.random.Generator, k: int) -> cc.ProbVec:
    raw = rng.dirichlet(np.ones(k))
    return cc.ProbVec(raw)


def random_credal(rng: np.random.Generator, space: cc.OutcomeSpace,
                  n_vertices: int | None = None) -> cc.CredalSet:
    m = int(rng.integers(1, 4)) if n_vertices is None else n_vertices
    return cc.CredalSet(space, tuple(random_probvec(rng, space.k) for _ in range(m)))


def random_gamble(rng: np.random.Generator, k: int) -> cc.Gamble:
    return cc.Gamble(rng.normal(size=k))


def random_loss_matrix(rng: np.random.Generator, k: int,
                       n_actions: int | None = None) -> cc.LossMatrix:
    a = int(rng.integers(2, 4)) if n_actions is None else n_actions
    entries = rng.random((a, k))
    return cc.LossMatrix(entries, tuple(f"a{i}" for i in range(a)))


def positive_lower_prob_credal(rng: np.random.Generator, space: cc.OutcomeSpace,
                               n_vertices: int = 3,
                               floor: float = 0.05) -> cc.CredalSet:
    """Random credal set whose outcomes all have probability >= floor/k."""
    k = space.k
    vertices = []
    for _ in range(n_vertices):
        raw = rng.dirichlet(np.ones(k))
        raw = (1 - floor) * raw + floor / k
        vertices.append(cc.ProbVec(raw))
    return cc.CredalSet(space, tuple(vertices))
