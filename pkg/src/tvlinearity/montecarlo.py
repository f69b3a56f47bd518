"""Monte Carlo engine: replicate DGP -> tests, count rejections, lay out size/power tables."""

import io
import json
import logging
import math
import time
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .dgp import DgpKind, DgpSpec, MeanParams, PositivityViolationError, TimeSeries, VarianceParams, simulate
from .linearity import (
    BootstrapConfig,
    BootstrapExhaustedError,
    TestMethod,
    TestOutcome,
    run_test,
)
from .olscore import InsufficientDataError, SingularDesignError
from .transition import TransitionParams


logger = logging.getLogger(__name__)

MIN_REPLICATIONS = 100
DEFAULT_REPLICATIONS = 10_000
RETRY_BUDGET = 3
CHUNK_SIZE = 50

PRESET_SAMPLE_SIZES = (100, 200, 400, 1000)
PRESET_METHODS = (TestMethod.MA, TestMethod.MWB, TestMethod.VA, TestMethod.VB, TestMethod.VWB)
PRESET_GAMMAS = (0.01, 0.1)
PRESET_SHIFT_PAIRS = ((0.0, 0.3), (0.0, 0.6), (0.5, 0.3), (1.0, 0.3))

# stable per-method stream tags; independent of which methods a run requests
METHOD_STREAM = {method: 1 + i for i, method in enumerate(TestMethod)}

RETRYABLE_ERRORS = (
    SingularDesignError,
    PositivityViolationError,
    BootstrapExhaustedError,
    InsufficientDataError,
)

Procedure = Callable[[TimeSeries, BootstrapConfig], TestOutcome]
CellKey = tuple[str, int, str]


class InvalidConfigError(ValueError):
    """Experiment configuration violates its invariants."""

    pass


class ExperimentAbortedError(RuntimeError):
    """A replication kept failing after every fresh child seed."""

    pass


class IncompleteTableError(LookupError):
    """A layout needs cells the table does not have."""

    def __init__(self, missing: list[CellKey]):
        self.missing = missing
        shown = ", ".join(f"({d}, T={t}, {m})" for d, t, m in missing[:10])
        more = f" and {len(missing) - 10} more" if len(missing) > 10 else ""
        super().__init__(f"table is missing {len(missing)} cells: {shown}{more}")


# ============================================================================
# Configuration
# ============================================================================

@dataclass(frozen=True)
class ExperimentConfig:
    """Grid of designs x sample sizes x tests, with replication and bootstrap settings.

    threads only sets the worker count; results do not depend on it.
    """

    dgp_grid: tuple[DgpSpec, ...]
    sample_sizes: tuple[int, ...] = PRESET_SAMPLE_SIZES
    tests: tuple[TestMethod, ...] = PRESET_METHODS
    replications: int = DEFAULT_REPLICATIONS
    nominal_level: float = 0.05
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    master_seed: int = 0
    threads: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "dgp_grid", tuple(self.dgp_grid))
        object.__setattr__(self, "sample_sizes", tuple(int(T) for T in self.sample_sizes))
        object.__setattr__(self, "tests", tuple(TestMethod(m) for m in self.tests))
        if self.replications < MIN_REPLICATIONS:
            raise InvalidConfigError(
                f"replications must be >= {MIN_REPLICATIONS}, got {self.replications}"
            )
        # 1.0 is admitted so that "reject everything" runs are expressible
        if not 0 < self.nominal_level <= 1:
            raise InvalidConfigError(f"nominal_level must be in (0, 1], got {self.nominal_level}")
        if not 0 <= self.master_seed < 2**64:
            raise InvalidConfigError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if any(T < 10 for T in self.sample_sizes):
            raise InvalidConfigError(f"sample sizes must be >= 10, got {self.sample_sizes}")
        labels = [spec.label for spec in self.dgp_grid]
        if len(set(labels)) != len(labels):
            raise InvalidConfigError(f"DGP labels must be unique, got {labels}")
        if self.threads < 1:
            raise InvalidConfigError(f"threads must be >= 1, got {self.threads}")

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready configuration; from_dict reads it back."""
        return {
            "dgp_grid": [spec.to_dict() for spec in self.dgp_grid],
            "sample_sizes": list(self.sample_sizes),
            "tests": [m.value for m in self.tests],
            "replications": self.replications,
            "nominal_level": self.nominal_level,
            "bootstrap": self.bootstrap.to_dict(),
            "master_seed": self.master_seed,
            "threads": self.threads,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        """Build a configuration from JSON data.

        Raises:
            InvalidConfigError: On missing keys, unknown fields or violated experiment constraints.
        """
        try:
            return cls(
                dgp_grid=tuple(DgpSpec.from_dict(d) for d in data["dgp_grid"]),
                sample_sizes=tuple(data.get("sample_sizes", PRESET_SAMPLE_SIZES)),
                tests=tuple(data.get("tests", [m.value for m in PRESET_METHODS])),
                replications=int(data.get("replications", DEFAULT_REPLICATIONS)),
                nominal_level=float(data.get("nominal_level", 0.05)),
                bootstrap=BootstrapConfig(**data.get("bootstrap", {})),
                master_seed=int(data.get("master_seed", 0)),
                threads=int(data.get("threads", 1)),
            )
        except (KeyError, TypeError) as e:
            raise InvalidConfigError(f"invalid experiment configuration: {e}") from e

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ExperimentConfig":
        """Read a configuration from a JSON file."""
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


# ============================================================================
# Results
# ============================================================================

@dataclass(frozen=True)
class RejectionCell:
    rejections: int
    replications_used: int

    @property
    def rejection_rate(self) -> float:
        """Share of replications that rejected."""
        return self.rejections / self.replications_used

    @property
    def monte_carlo_se(self) -> float:
        """Binomial standard error of the rejection rate."""
        r = self.rejection_rate
        return math.sqrt(r * (1 - r) / self.replications_used)


CSV_COLUMNS = ["dgp", "T", "method", "rejections", "replications", "rejection_rate", "monte_carlo_se"]


@dataclass
class RejectionTable:
    """Rejection counts keyed by (dgp label, T, method value), in insertion order."""

    cells: dict[CellKey, RejectionCell] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.cells)

    def __getitem__(self, key: tuple[str, int, TestMethod | str]) -> RejectionCell:
        dgp, T, method = key
        return self.cells[(dgp, int(T), TestMethod(method).value)]

    def rate(self, dgp: str, T: int, method: TestMethod | str) -> float:
        """Rejection rate of one cell."""
        return self[dgp, T, method].rejection_rate

    def to_frame(self) -> pd.DataFrame:
        """Cells as a long frame with the CSV_COLUMNS columns."""
        rows = [
            {
                "dgp": dgp,
                "T": T,
                "method": method,
                "rejections": cell.rejections,
                "replications": cell.replications_used,
                "rejection_rate": cell.rejection_rate,
                "monte_carlo_se": cell.monte_carlo_se,
            }
            for (dgp, T, method), cell in self.cells.items()
        ]
        return pd.DataFrame(rows, columns=CSV_COLUMNS)

    def to_csv(self) -> str:
        """Long-format CSV of every cell."""
        return self.to_frame().to_csv(index=False)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "RejectionTable":
        """Inverse of to_frame."""
        table = cls()
        for row in frame.itertuples(index=False):
            key = (str(row.dgp), int(row.T), TestMethod(row.method).value)
            table.cells[key] = RejectionCell(int(row.rejections), int(row.replications))
        return table

    @classmethod
    def from_csv(cls, text: str) -> "RejectionTable":
        """Inverse of to_csv."""
        frame = pd.read_csv(io.StringIO(text), dtype={"dgp": str, "method": str})
        return cls.from_frame(frame)

    def to_dict(self) -> list[dict[str, Any]]:
        """Cells as a list of records."""
        return self.to_frame().to_dict(orient="records")


# ============================================================================
# Preset grids and layouts
# ============================================================================

@dataclass(frozen=True)
class TableLayout:
    """Rows are (row label, T); columns are (panel, method). Panels split a table by gamma."""

    name: str
    title: str
    row_labels: tuple[str, ...]
    sample_sizes: tuple[int, ...]
    panels: tuple[str, ...] = ("",)
    methods: tuple[TestMethod, ...] = PRESET_METHODS

    def cell_key(self, row_label: str, panel: str, T: int, method: TestMethod) -> CellKey:
        """RejectionTable key of one layout cell; panelled rows append the panel to the label."""
        dgp = f"{row_label},{panel}" if panel else row_label
        return (dgp, T, method.value)

    def required_keys(self) -> list[CellKey]:
        """Every cell key the layout renders."""
        return [
            self.cell_key(row, panel, T, method)
            for row in self.row_labels
            for T in self.sample_sizes
            for panel in self.panels
            for method in self.methods
        ]


def _gamma_panel(gamma: float) -> str:
    return f"gamma={gamma:g}"


def preset_grid(table: int) -> tuple[list[DgpSpec], TableLayout]:
    """DGP grid and layout for one of the four preset tables.

    All designs use alpha0 = 1, beta0 = 0.3 unless varied, c = T/2 and 100 burn-in draws.
    """
    null = TransitionParams(gamma=0.0)
    specs: list[DgpSpec] = []
    match table:
        case 1:
            for beta0 in (0.3, 0.9):
                specs.append(DgpSpec(
                    DgpKind.AR_HOMOSKEDASTIC, MeanParams(1.0, beta0), threshold_fraction=0.5,
                ))
            layout = TableLayout(
                "table1", "Rejection frequencies under AR with homoskedastic error",
                tuple(s.label for s in specs), PRESET_SAMPLE_SIZES,
            )
        case 2:
            rows = []
            for alpha1, beta1 in PRESET_SHIFT_PAIRS:
                rows.append(f"alpha1={alpha1:g},beta1={beta1:g}")
                for gamma in PRESET_GAMMAS:
                    mean = MeanParams(1.0, 0.3, alpha1, beta1, TransitionParams(gamma))
                    specs.append(DgpSpec(DgpKind.TV_MEAN, mean, threshold_fraction=0.5))
            layout = TableLayout(
                "table2", "Rejection frequencies under time-varying AR with homoskedastic error",
                tuple(rows), PRESET_SAMPLE_SIZES, tuple(_gamma_panel(g) for g in PRESET_GAMMAS),
            )
        case 3:
            for b0 in (0.3, 0.6, 0.9):
                variance = VarianceParams(1.0, b0, 0.0, 0.0, null)
                specs.append(DgpSpec(
                    DgpKind.AR_ARCH, MeanParams(1.0, 0.3), variance, threshold_fraction=0.5,
                ))
            layout = TableLayout(
                "table3", "Rejection frequencies under AR with ARCH error",
                tuple(s.label for s in specs), PRESET_SAMPLE_SIZES,
            )
        case 4:
            rows = []
            for a1, b1 in PRESET_SHIFT_PAIRS:
                rows.append(f"a1={a1:g},b1={b1:g}")
                for gamma in PRESET_GAMMAS:
                    variance = VarianceParams(1.0, 0.3, a1, b1, TransitionParams(gamma))
                    specs.append(DgpSpec(
                        DgpKind.TV_ARCH, MeanParams(1.0, 0.3), variance, threshold_fraction=0.5,
                    ))
            layout = TableLayout(
                "table4", "Rejection frequencies under AR with time-varying ARCH error",
                tuple(rows), PRESET_SAMPLE_SIZES, tuple(_gamma_panel(g) for g in PRESET_GAMMAS),
            )
        case _:
            raise ValueError(f"unknown table preset {table}; expected 1-4")
    return specs, layout


def preset_config(
    table: int,
    replications: int = DEFAULT_REPLICATIONS,
    bootstrap_iterations: int = 1000,
    master_seed: int = 0,
    threads: int = 1,
    sample_sizes: Iterable[int] = PRESET_SAMPLE_SIZES,
) -> tuple[ExperimentConfig, TableLayout]:
    """ExperimentConfig and layout of a preset table, resized to sample_sizes."""
    specs, layout = preset_grid(table)
    sizes = tuple(sample_sizes)
    layout = TableLayout(layout.name, layout.title, layout.row_labels, sizes, layout.panels, layout.methods)
    cfg = ExperimentConfig(
        dgp_grid=tuple(specs),
        sample_sizes=sizes,
        tests=PRESET_METHODS,
        replications=replications,
        bootstrap=BootstrapConfig(iterations=bootstrap_iterations),
        master_seed=master_seed,
        threads=threads,
    )
    return cfg, layout


# ============================================================================
# Engine
# ============================================================================

def replication_seed(
    master_seed: int, dgp_index: int, T: int, replication: int, attempt: int, stream: int
) -> np.random.SeedSequence:
    """Child stream for one replication; stream 0 simulates, stream METHOD_STREAM[m] bootstraps m."""
    return np.random.SeedSequence(master_seed, spawn_key=(dgp_index, T, replication, attempt, stream))


def _replicate(
    spec: DgpSpec,
    dgp_index: int,
    replication: int,
    methods: tuple[TestMethod, ...],
    bootstrap: BootstrapConfig,
    master_seed: int,
    procedures: Mapping[TestMethod, Procedure],
) -> dict[TestMethod, float]:
    """p-values of every method on one simulated series, retrying with fresh seeds."""
    T = spec.sample_size
    last_error: Exception | None = None
    for attempt in range(RETRY_BUDGET + 1):
        try:
            series = simulate(spec, replication_seed(master_seed, dgp_index, T, replication, attempt, 0))
            p_values = {}
            for method in methods:
                cfg = bootstrap.with_seed(
                    replication_seed(master_seed, dgp_index, T, replication, attempt, METHOD_STREAM[method])
                )
                procedure = procedures.get(method)
                outcome = procedure(series, cfg) if procedure else run_test(method, series, cfg)
                p_values[method] = outcome.p_value
            return p_values
        except RETRYABLE_ERRORS as e:
            last_error = e
            logger.warning(
                "%s T=%d replication %d attempt %d failed: %s", spec.label, T, replication, attempt, e
            )
    raise ExperimentAbortedError(
        f"cell ({spec.label}, T={T}): replication {replication} failed after "
        f"{RETRY_BUDGET} fresh seeds: {last_error}"
    ) from last_error


def _run_chunk(
    spec: DgpSpec,
    dgp_index: int,
    replications: range,
    methods: tuple[TestMethod, ...],
    bootstrap: BootstrapConfig,
    master_seed: int,
    nominal_level: float,
    procedures: Mapping[TestMethod, Procedure],
) -> dict[TestMethod, int]:
    rejections = dict.fromkeys(methods, 0)
    for r in replications:
        p_values = _replicate(spec, dgp_index, r, methods, bootstrap, master_seed, procedures)
        for method, p in p_values.items():
            # strict: a bootstrap p-value equal to the level does not reject
            if p < nominal_level:
                rejections[method] += 1
    return rejections


def run_experiment(
    cfg: ExperimentConfig,
    procedures: Mapping[TestMethod, Procedure] | None = None,
) -> RejectionTable:
    """Simulate every (design, T) cell R times and count rejections per test.

    All requested tests see the same simulated series in each replication.
    Replications are chunked independently of cfg.threads and reduced by
    summing counts, so the table does not depend on the worker count.

    Args:
        cfg: Experiment configuration.
        procedures: Optional replacements for individual test methods.

    Raises:
        ExperimentAbortedError: If a replication fails on every retry seed.
    """
    procedures = dict(procedures or {})
    cells = [
        (dgp_index, spec.at_sample_size(T))
        for dgp_index, spec in enumerate(cfg.dgp_grid)
        for T in cfg.sample_sizes
    ]
    tasks = [
        (cell_index, range(start, min(start + CHUNK_SIZE, cfg.replications)))
        for cell_index in range(len(cells))
        for start in range(0, cfg.replications, CHUNK_SIZE)
    ]
    logger.info(
        "experiment: %d cells x %d replications, tests=%s, threads=%d",
        len(cells), cfg.replications, [m.value for m in cfg.tests], cfg.threads,
    )
    started = time.time()
    results = Parallel(n_jobs=cfg.threads)(
        delayed(_run_chunk)(
            cells[cell_index][1],
            cells[cell_index][0],
            chunk,
            cfg.tests,
            cfg.bootstrap,
            cfg.master_seed,
            cfg.nominal_level,
            procedures,
        )
        for cell_index, chunk in tasks
    )

    counts = [dict.fromkeys(cfg.tests, 0) for _ in cells]
    for (cell_index, _), chunk_counts in zip(tasks, results):
        for method, n in chunk_counts.items():
            counts[cell_index][method] += n

    table = RejectionTable()
    for (_, spec), cell_counts in zip(cells, counts):
        for method in cfg.tests:
            cell = RejectionCell(cell_counts[method], cfg.replications)
            table.cells[(spec.label, spec.sample_size, method.value)] = cell
            logger.info(
                "cell %s T=%d %s: rate=%.3f se=%.3f",
                spec.label, spec.sample_size, method.value, cell.rejection_rate, cell.monte_carlo_se,
            )
    logger.info("experiment finished in %.1fs", time.time() - started)
    return table


# ============================================================================
# Formatting
# ============================================================================

@dataclass(frozen=True)
class FormattedTable:
    title: str
    csv: str
    text: str


def custom_layout(table: RejectionTable) -> TableLayout:
    """Layout with every (dgp, T) of the table as a row and its methods as columns."""
    rows: dict[str, None] = {}
    sizes: dict[int, None] = {}
    methods: dict[str, None] = {}
    for dgp, T, method in table.cells:
        rows[dgp] = None
        sizes[T] = None
        methods[method] = None
    return TableLayout(
        "custom", "Rejection frequencies",
        tuple(rows), tuple(sizes), ("",), tuple(TestMethod(m) for m in methods),
    )


def summarize(table: RejectionTable, layout: str | TableLayout = "custom") -> FormattedTable:
    """Render a table as CSV and aligned text: (row, T) rows, (panel, method) columns.

    Args:
        table: Results of run_experiment.
        layout: "table1".."table4", "custom", or an explicit TableLayout.

    Raises:
        IncompleteTableError: If the layout needs cells the table lacks.
    """
    if isinstance(layout, str):
        if layout == "custom":
            layout = custom_layout(table)
        elif layout.startswith("table") and layout[5:].isdigit():
            _, layout = preset_grid(int(layout[5:]))
        else:
            raise ValueError(f"unknown layout {layout!r}")

    if layout.name == "custom":
        # custom rows only list the cells that exist
        present = set(table.cells)
        keys = [k for k in layout.required_keys() if k in present]
        row_pairs = list(dict.fromkeys((d, T) for d, T, _ in table.cells))
    else:
        keys = layout.required_keys()
        missing = [k for k in keys if k not in table.cells]
        if missing:
            raise IncompleteTableError(missing)
        row_pairs = [(row, T) for row in layout.row_labels for T in layout.sample_sizes]

    columns = [
        f"{panel} {method.display_name}".strip()
        for panel in layout.panels
        for method in layout.methods
    ]
    records = []
    for row, T in row_pairs:
        record: dict[str, Any] = {"dgp": row, "T": T}
        for panel in layout.panels:
            for method in layout.methods:
                cell = table.cells.get(layout.cell_key(row, panel, T, method))
                name = f"{panel} {method.display_name}".strip()
                record[name] = cell.rejection_rate if cell else float("nan")
        records.append(record)

    frame = pd.DataFrame(records, columns=["dgp", "T", *columns])
    csv_text = frame.to_csv(index=False, float_format="%.3f")
    body = frame.to_string(index=False, float_format=lambda x: f"{x:.3f}") if records else " ".join(frame.columns)
    logger.debug("summarized %s: %d rows, %d keys", layout.name, len(records), len(keys))
    return FormattedTable(layout.title, csv_text, f"{layout.title}\n{body}\n")
