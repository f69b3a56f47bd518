"""SQLite cache of finished Monte Carlo experiments."""

import json
import logging
import sqlite3
import time
from pathlib import Path
from typing import Any

from .montecarlo import ExperimentConfig, RejectionCell, RejectionTable


logger = logging.getLogger(__name__)

SCHEMA = """
CREATE TABLE IF NOT EXISTS experiments (
    id          INTEGER PRIMARY KEY AUTOINCREMENT,
    created     INTEGER,  -- unix seconds
    layout      TEXT,     -- 'table1'..'table4' or 'custom'
    master_seed TEXT,     -- 64-bit, stored as text
    config_json TEXT
);

CREATE TABLE IF NOT EXISTS cells (
    experiment_id INTEGER REFERENCES experiments(id) ON DELETE CASCADE,
    position      INTEGER,  -- insertion order in the RejectionTable
    dgp           TEXT,
    sample_size   INTEGER,
    method        TEXT,     -- 'ma','mwb','va','vb','vwb','tr2'
    rejections    INTEGER,
    replications  INTEGER,
    PRIMARY KEY (experiment_id, dgp, sample_size, method)
);

CREATE TABLE IF NOT EXISTS run_meta (
    key   TEXT PRIMARY KEY,
    value TEXT
);
"""

INDEXES = """
CREATE INDEX IF NOT EXISTS idx_cells_experiment ON cells(experiment_id);
CREATE INDEX IF NOT EXISTS idx_experiments_layout ON experiments(layout);
"""


class Database:
    """SQLite wrapper for the experiment results cache."""

    def __init__(self, db_path: str | Path | None = None):
        """Initialize database handle.

        Args:
            db_path: Path to SQLite file, or None/":memory:" for in-memory DB.
        """
        if db_path is None:
            db_path = ":memory:"
        self.db_path = str(db_path)
        self._conn: sqlite3.Connection | None = None

    def connect(self) -> sqlite3.Connection:
        """Get or create database connection."""
        if self._conn is None:
            self._conn = sqlite3.connect(self.db_path, check_same_thread=False)
            self._conn.row_factory = sqlite3.Row
            self._conn.execute("PRAGMA foreign_keys=ON")
            if self.db_path != ":memory:":
                self._conn.execute("PRAGMA journal_mode=WAL")
        return self._conn

    def close(self) -> None:
        """Close database connection."""
        if self._conn is not None:
            self._conn.close()
            self._conn = None

    def init_schema(self) -> None:
        """Create all tables and indexes."""
        conn = self.connect()
        conn.executescript(SCHEMA)
        conn.executescript(INDEXES)
        conn.commit()

    # -------------------------------------------------------------------------
    # Run metadata
    # -------------------------------------------------------------------------

    def get_meta(self, key: str) -> str | None:
        """Get metadata value by key."""
        row = self.connect().execute(
            "SELECT value FROM run_meta WHERE key = ?", (key,)
        ).fetchone()
        return row["value"] if row else None

    def set_meta(self, key: str, value: str) -> None:
        """Set metadata value."""
        conn = self.connect()
        conn.execute(
            "INSERT OR REPLACE INTO run_meta (key, value) VALUES (?, ?)",
            (key, value),
        )
        conn.commit()

    # -------------------------------------------------------------------------
    # Experiments
    # -------------------------------------------------------------------------

    def save_experiment(self, cfg: ExperimentConfig, table: RejectionTable, layout: str = "custom") -> int:
        """Store a configuration and its rejection table; returns the experiment id."""
        conn = self.connect()
        cursor = conn.execute(
            "INSERT INTO experiments (created, layout, master_seed, config_json) VALUES (?, ?, ?, ?)",
            (int(time.time()), layout, str(cfg.master_seed), json.dumps(cfg.to_dict())),
        )
        experiment_id = cursor.lastrowid
        conn.executemany(
            """
            INSERT INTO cells
            (experiment_id, position, dgp, sample_size, method, rejections, replications)
            VALUES (?, ?, ?, ?, ?, ?, ?)
            """,
            [
                (experiment_id, i, dgp, T, method, cell.rejections, cell.replications_used)
                for i, ((dgp, T, method), cell) in enumerate(table.cells.items())
            ],
        )
        conn.commit()
        self.set_meta("last_experiment_id", str(experiment_id))
        logger.debug("stored experiment %d with %d cells", experiment_id, len(table))
        return experiment_id

    def load_table(self, experiment_id: int) -> RejectionTable:
        """Rebuild the RejectionTable of a stored experiment.

        Raises:
            KeyError: If no experiment has this id.
        """
        conn = self.connect()
        if conn.execute("SELECT 1 FROM experiments WHERE id = ?", (experiment_id,)).fetchone() is None:
            raise KeyError(f"experiment {experiment_id} not found")
        rows = conn.execute(
            "SELECT * FROM cells WHERE experiment_id = ? ORDER BY position", (experiment_id,)
        ).fetchall()
        table = RejectionTable()
        for row in rows:
            key = (row["dgp"], row["sample_size"], row["method"])
            table.cells[key] = RejectionCell(row["rejections"], row["replications"])
        return table

    def load_config(self, experiment_id: int) -> ExperimentConfig:
        """Rebuild the ExperimentConfig of a stored experiment.

        Raises:
            KeyError: If no experiment has this id.
        """
        row = self.connect().execute(
            "SELECT config_json FROM experiments WHERE id = ?", (experiment_id,)
        ).fetchone()
        if row is None:
            raise KeyError(f"experiment {experiment_id} not found")
        return ExperimentConfig.from_dict(json.loads(row["config_json"]))

    def list_experiments(self) -> list[dict[str, Any]]:
        """Stored experiments, newest first, with cell counts."""
        rows = self.connect().execute(
            """
            SELECT e.id, e.created, e.layout, e.master_seed, COUNT(c.method) AS cells
            FROM experiments e LEFT JOIN cells c ON c.experiment_id = e.id
            GROUP BY e.id ORDER BY e.id DESC
            """
        ).fetchall()
        return [dict(row) for row in rows]

    def last_experiment_id(self) -> int | None:
        """Id of the most recently stored experiment, or None for an empty cache."""
        value = self.get_meta("last_experiment_id")
        return int(value) if value else None

    def count_table(self, table: str) -> int:
        """Count rows in a table."""
        row = self.connect().execute(f"SELECT COUNT(*) AS cnt FROM {table}").fetchone()  # noqa: S608
        return row["cnt"]
