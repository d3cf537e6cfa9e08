"""Shared fixtures: presets, seeded generators and admissible-gain sampling."""

from __future__ import annotations

from typing import Callable, List

import numpy as np
import pytest

from domain.models import OptimizerConfig
from domain.optimizer import initial_gain, optimize
from domain.surrogate import admissible, build_surrogate
from presets import get_preset


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def illustrative():
    return get_preset("illustrative")


@pytest.fixture(scope="session")
def mass_spring():
    return get_preset("mass-spring")


@pytest.fixture(scope="session")
def scalar():
    return get_preset("scalar")


@pytest.fixture(scope="session")
def scalar_uncertain():
    return get_preset("scalar-uncertain")


@pytest.fixture(scope="session")
def illustrative_model(illustrative):
    return build_surrogate(illustrative.system, 5)


@pytest.fixture(scope="session")
def illustrative_k0(illustrative, illustrative_model):
    return initial_gain(illustrative.system, illustrative.Q, illustrative.R, order=5)


@pytest.fixture(scope="session")
def illustrative_run(illustrative, illustrative_model, illustrative_k0):
    """Fixed-step descent at N=5 with the reference settings; shared by several suites."""
    cfg = OptimizerConfig(step_size=0.01, grad_tol=1e-3)
    return optimize(illustrative_model, illustrative_k0, illustrative.Q, illustrative.R, cfg)


@pytest.fixture
def gain_sampler() -> Callable[..., List[np.ndarray]]:
    """Draw gains around a centre that stabilize the given surrogate."""

    def sample(model, centre, rng, count: int, scale: float = 0.1) -> List[np.ndarray]:
        centre = np.atleast_2d(centre)
        spread = scale * max(np.linalg.norm(centre, "fro"), 1.0) / np.sqrt(centre.size)
        gains = []
        for _ in range(50 * count):
            K = centre + spread * rng.standard_normal(centre.shape)
            if admissible(model, K):
                gains.append(K)
                if len(gains) == count:
                    return gains
        raise RuntimeError("could not draw enough admissible gains")

    return sample
