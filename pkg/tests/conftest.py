"""Test fixtures for tvlinearity tests."""

from collections.abc import Iterator

import numpy as np
import pytest

from tvlinearity import server
from tvlinearity.database import Database
from tvlinearity.dgp import DgpKind, DgpSpec, MeanParams, TimeSeries, VarianceParams, simulate
from tvlinearity.linearity import BootstrapConfig
from tvlinearity.montecarlo import ExperimentConfig


@pytest.fixture
def db() -> Database:
    """Create in-memory database with schema."""
    database = Database(":memory:")
    database.init_schema()
    return database


@pytest.fixture
def server_db(db: Database) -> Iterator[Database]:
    """Point the MCP server at the in-memory database."""
    server.init_for_testing(db)
    yield db
    server.init_for_testing(None)


@pytest.fixture
def ar_spec() -> DgpSpec:
    """AR(1) null design, alpha0 = 1, beta0 = 0.3, T = 200."""
    return DgpSpec(DgpKind.AR_HOMOSKEDASTIC, MeanParams(1.0, 0.3), sample_size=200)


@pytest.fixture
def arch_spec() -> DgpSpec:
    """AR(1) mean with ARCH(1) errors, b0 = 0.3, T = 200."""
    return DgpSpec(DgpKind.AR_ARCH, MeanParams(1.0, 0.3), VarianceParams(1.0, 0.3), sample_size=200)


@pytest.fixture
def ar_series(ar_spec: DgpSpec) -> TimeSeries:
    """Null series simulated with seed 1."""
    return simulate(ar_spec, 1)


@pytest.fixture
def arch_series(arch_spec: DgpSpec) -> TimeSeries:
    """ARCH series simulated with seed 2."""
    return simulate(arch_spec, 2)


@pytest.fixture
def trend_series() -> np.ndarray:
    """Deterministic trend plus unit noise: y_t = 0.05 t + e_t, T = 200."""
    rng = np.random.default_rng(7)
    t = np.arange(1, 201)
    return 0.05 * t + rng.standard_normal(200)


@pytest.fixture
def small_bootstrap() -> BootstrapConfig:
    """Seeded bootstrap with M = 199."""
    return BootstrapConfig(iterations=199, seed=11)


@pytest.fixture
def small_config(ar_spec: DgpSpec) -> ExperimentConfig:
    """Cheap experiment: one null design, T = 50, asymptotic tests, R = 100."""
    return ExperimentConfig(
        dgp_grid=(ar_spec,),
        sample_sizes=(50,),
        tests=("ma", "va"),
        replications=100,
        bootstrap=BootstrapConfig(iterations=99),
        master_seed=2024,
    )
