"""Shared fixtures and the acceptance-summary terminal hook."""

from __future__ import annotations

import numpy as np
import pytest

from specprune import (
    HsiCube,
    SceneSpec,
    SpectralLibrary,
    generate_scene,
    generate_smooth_library,
)

# acceptance tests append (criterion, passed, detail) here; the terminal
# summary prints one line per criterion at the end of the run
ACCEPTANCE_RESULTS: list[tuple[int, bool, str]] = []


def record_acceptance(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.append((criterion, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE_RESULTS):
        flag = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {criterion}: {flag} — {detail}")


@pytest.fixture(scope="session")
def lib8() -> SpectralLibrary:
    """Small smooth library for fast unit tests."""
    return generate_smooth_library(8, 40, seed=2024)


@pytest.fixture(scope="session")
def lib40() -> SpectralLibrary:
    """The 40-atom, 100-band library used by protocol-level tests."""
    return generate_smooth_library(40, 100, seed=123)


@pytest.fixture(scope="session")
def easy_scene(lib8):
    """Noiseless 5-endmember scene on the small library."""
    return generate_scene(
        lib8,
        SceneSpec(n_pixels=60, n_endmembers=3, max_purity=0.9, snr_db=None, seed=42),
    )


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture()
def ortho_library() -> SpectralLibrary:
    """Orthonormal rows: closed-form territory for the solver."""
    gen = np.random.default_rng(55)
    q, _ = np.linalg.qr(gen.normal(size=(12, 12)))
    return SpectralLibrary(q[:6])


@pytest.fixture()
def small_cube(rng) -> HsiCube:
    return HsiCube(rng.normal(size=(15, 12)))
