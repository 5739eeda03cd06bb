import os

import hypothesis
import numpy as np
import pytest

from krig.config import settings
from krig.domain.entities.design import DesignSet
from krig.domain.entities.kriging_model import KrigingModel
from krig.domain.entities.matern import Family, MaternSpec
from krig.infrastructure.kernel_system_loader import bundled, load_kernel_system

np.seterr(divide="warn", over="warn", invalid="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=100, deadline=None)
hypothesis.settings.register_profile(
    "debugger", report_multiple_bugs=False, deadline=None
)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture
def binary_pair():
    return load_kernel_system(bundled("example_3_2_1.json"))


@pytest.fixture
def binary_triple():
    return load_kernel_system(bundled("example_3_2_2.json"))


@pytest.fixture
def small_model():
    """Seeded 2-D model with 12 coordinate-distinct points, geometric ν = 2.5."""
    rng = np.random.default_rng(11)
    design = DesignSet(points=rng.random((12, 2)))
    y = np.sin(3.0 * design.points[:, 0]) + np.cos(2.0 * design.points[:, 1])
    spec = MaternSpec(family=Family.GEOMETRIC, nu=2.5, r=2)
    return KrigingModel(design=design, spec=spec, y=y)


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "OUTPUT_DIR", str(tmp_path / "results"))
    monkeypatch.setattr(settings, "WORKERS", 1)
    return tmp_path / "results"
