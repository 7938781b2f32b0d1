"""Shared fixtures: small deterministic datasets and models."""

from __future__ import annotations

import sys

import numpy as np
import pytest

from mixaug import ModelConfig, SmallConvNet, SyntheticSpec, generate, substream


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance-criteria verdict lines after the test summary.

    The acceptance tests print one [PASS]/[FAIL] line each, but passing
    tests have their stdout captured; replaying the lines here keeps the
    verdicts visible in a plain ``pytest -v`` run.
    """
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tiny_spec() -> SyntheticSpec:
    """A 3-class, 16x16 noise-free dataset that generates in milliseconds."""
    return SyntheticSpec(
        num_classes=3,
        image_size=16,
        cue_size=4,
        background_alphabet=3,
        noise_std=0.0,
        samples_per_class=10,
        seed=99,
    )


@pytest.fixture(scope="session")
def tiny_dataset(tiny_spec):
    return generate(tiny_spec)


@pytest.fixture()
def rng():
    return np.random.default_rng(2024)


@pytest.fixture()
def tiny_model(tiny_dataset):
    cfg = ModelConfig(
        in_channels=3,
        image_size=16,
        num_classes=tiny_dataset.num_classes,
        widths=(8, 8),
    )
    return SmallConvNet(cfg, substream(5, "init"))
