import numpy as np
import pytest

from invctrl.config import default_config
from invctrl import pipeline


@pytest.fixture(scope="session")
def numerical_cfg(tmp_path_factory):
    cfg = default_config("numerical")
    cfg.outdir = str(tmp_path_factory.mktemp("numerical"))
    pipeline.cmd_collect(cfg, log=lambda *a: None)
    pipeline.cmd_build(cfg, log=lambda *a: None)
    return cfg


@pytest.fixture(scope="session")
def numerical_artifacts(numerical_cfg):
    dataset, model, controller = pipeline.load_artifacts(numerical_cfg)
    bounds = pipeline.make_bounds(numerical_cfg, model.kernel)
    plant = pipeline.make_plant(numerical_cfg)
    return dict(cfg=numerical_cfg, dataset=dataset, model=model,
                controller=controller, bounds=bounds, plant=plant)


@pytest.fixture(scope="session")
def pendulum_cfg(tmp_path_factory):
    cfg = default_config("pendulum")
    cfg.outdir = str(tmp_path_factory.mktemp("pendulum"))
    pipeline.cmd_collect(cfg, log=lambda *a: None)
    pipeline.cmd_build(cfg, log=lambda *a: None)
    return cfg


@pytest.fixture(scope="session")
def pendulum_artifacts(pendulum_cfg):
    dataset, model, controller = pipeline.load_artifacts(pendulum_cfg)
    bounds = pipeline.make_bounds(pendulum_cfg, model.kernel)
    plant = pipeline.make_plant(pendulum_cfg)
    return dict(cfg=pendulum_cfg, dataset=dataset, model=model,
                controller=controller, bounds=bounds, plant=plant)


def sample_ball(rng, center, radius, count):
    """Uniform samples from a closed ball (for soundness spot checks)."""
    center = np.asarray(center, dtype=float)
    d = len(center)
    dirs = rng.normal(size=(count, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = radius * rng.uniform(0.0, 1.0, size=count) ** (1.0 / d)
    return center + dirs * radii[:, None]


def sampled_inradius(point, balls, directions=2000, seed=0):
    """Direction-sampled estimate of the true inradius of ``point`` in a
    ball union (an overestimate: the min over sampled rays of the union's
    reach along the ray)."""
    rng = np.random.default_rng(seed)
    point = np.asarray(point, dtype=float)
    d = len(point)
    dirs = rng.normal(size=(directions, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    best = np.full(directions, -np.inf)
    for b in balls:
        w = point - np.asarray(b.center, dtype=float)
        proj = dirs @ w
        disc = proj**2 - (w @ w - b.radius * b.radius)
        mask = disc >= 0
        cur = np.full(directions, -np.inf)
        cur[mask] = -proj[mask] + np.sqrt(disc[mask])
        best = np.maximum(best, cur)
    return max(float(best.min()), 0.0)
