"""Shared fixtures: the reference model, its propagator, and reusable ensembles.

The reference parameter point (all defaults: g = kappa = omega_l = 1,
omega_m = 0.1, gamma0 = gamma1 = 0.05, delta = 50) is the one every frozen
oracle in the suite was hand-evaluated at; session-scoped fixtures keep the
expensive artifacts (spectral propagator, trajectory ensembles) shared
between the statistical tests and the acceptance suite.
"""

from __future__ import annotations

import numpy as np
import pytest

from macrojumps import effective, trajectory
from macrojumps.model import Model, ModelParams, build_model

# One line per acceptance criterion, printed by pytest_terminal_summary.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def ref_params() -> ModelParams:
    return ModelParams()


@pytest.fixture(scope="session")
def ref_model(ref_params) -> Model:
    return build_model(ref_params)


@pytest.fixture(scope="session")
def ref_propagator(ref_model):
    return trajectory.build_propagator(ref_model.h_cond)


@pytest.fixture(scope="session")
def ref_timescales(ref_params):
    return effective.timescales(ref_params)


@pytest.fixture(scope="session")
def short_ensemble(ref_model):
    """2000 trajectories to t = 50 with a terminal snapshot (criterion 3)."""
    return trajectory.run_ensemble(
        ref_model, 2000, 42, 50.0, snapshot_times=(50.0,), workers=4
    )


@pytest.fixture(scope="session")
def telegraph_ensemble(ref_model, ref_timescales):
    """8 long trajectories (100 dark times each) for period statistics.

    Long horizons keep interior-period censoring negligible: a period only
    counts as interior when it fits strictly inside the record, which
    under-samples long periods once the horizon is only a few period
    lengths.
    """
    horizon = 100.0 * ref_timescales.t_dark
    return trajectory.run_ensemble(ref_model, 8, 2024, horizon, workers=4)


@pytest.fixture()
def record_acceptance():
    def _record(name: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
