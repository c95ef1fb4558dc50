"""DuckDB storage for benchmark episodes and training-log summaries."""

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import duckdb

from dqndovs.core.models import EpisodeRecord, MetricsRow

logger = logging.getLogger("dqndovs.database")


SCHEMA_SQL = """
-- One row per evaluated episode
CREATE TABLE IF NOT EXISTS episodes (
    planner TEXT NOT NULL,
    obstacles INTEGER NOT NULL,
    episode INTEGER NOT NULL,
    world_hash TEXT NOT NULL,
    outcome TEXT NOT NULL,
    steps INTEGER NOT NULL,
    time_s DOUBLE NOT NULL,
    total_return DOUBLE NOT NULL,
    PRIMARY KEY (planner, obstacles, episode)
);

CREATE INDEX IF NOT EXISTS idx_episodes_outcome ON episodes(outcome);
"""

# time_rate compares each planner with the reference planner over the
# episodes both of them solved.
METRICS_SQL = """
WITH ref AS (
    SELECT obstacles, episode, time_s
    FROM episodes
    WHERE planner = ? AND outcome = 'success'
)
SELECT
    e.planner,
    e.obstacles,
    AVG(CASE WHEN e.outcome = 'success' THEN 1.0 ELSE 0.0 END) AS success_rate,
    AVG(CASE WHEN e.outcome = 'collision' THEN 1.0 ELSE 0.0 END) AS collision_rate,
    AVG(CASE WHEN e.outcome = 'timeout' THEN 1.0 ELSE 0.0 END) AS timeout_rate,
    AVG(e.time_s) FILTER (WHERE e.outcome = 'success') AS mean_time_s,
    SUM(e.time_s) FILTER (WHERE e.outcome = 'success' AND r.time_s IS NOT NULL)
        / SUM(r.time_s) FILTER (WHERE e.outcome = 'success' AND r.time_s IS NOT NULL)
        AS time_rate
FROM episodes e
LEFT JOIN ref r ON e.obstacles = r.obstacles AND e.episode = r.episode
GROUP BY e.planner, e.obstacles
ORDER BY e.planner, e.obstacles
"""

TRAINING_SUMMARY_SQL = """
SELECT
    stage,
    ANY_VALUE(stage_name) AS stage_name,
    COUNT(*) AS episodes,
    AVG(CASE WHEN outcome = 'success' THEN 1.0 ELSE 0.0 END) AS success_rate,
    AVG(CASE WHEN outcome = 'collision' THEN 1.0 ELSE 0.0 END) AS collision_rate,
    AVG(CASE WHEN outcome = 'timeout' THEN 1.0 ELSE 0.0 END) AS timeout_rate,
    AVG("return") AS mean_return,
    AVG(steps) AS mean_steps
FROM read_json_auto('{path}', format = 'newline_delimited')
GROUP BY stage
ORDER BY stage
"""


class ResultsDatabase:
    """DuckDB connection holding evaluated episodes."""

    def __init__(self, db_path: Path | str = ":memory:"):
        """Initialize database connection.

        Args:
            db_path: Path to the DuckDB database file, or ":memory:"
        """
        self.db_path = str(db_path)
        if self.db_path != ":memory:":
            Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
        self._conn: duckdb.DuckDBPyConnection | None = None

    @property
    def conn(self) -> duckdb.DuckDBPyConnection:
        """Get or create database connection."""
        if self._conn is None:
            self._conn = duckdb.connect(self.db_path)
            # single-threaded aggregation keeps floating-point sums reproducible
            self._conn.execute("SET threads = 1")
            self._conn.execute(SCHEMA_SQL)
        return self._conn

    def execute(self, sql: str, params: tuple | list | None = None) -> duckdb.DuckDBPyConnection:
        """Execute a SQL query.

        Args:
            sql: SQL query string
            params: Optional query parameters

        Returns:
            Query result relation
        """
        if params:
            return self.conn.execute(sql, params)
        return self.conn.execute(sql)

    @contextmanager
    def transaction(self):
        """Context manager for database transactions."""
        self.conn.execute("BEGIN TRANSACTION")
        try:
            yield
            self.conn.execute("COMMIT")
        except BaseException:
            self.conn.execute("ROLLBACK")
            raise

    def clear(self, planner: str | None = None):
        """Delete stored episodes, optionally only those of one planner."""
        if planner is None:
            self.execute("DELETE FROM episodes")
        else:
            self.execute("DELETE FROM episodes WHERE planner = ?", (planner,))

    def insert_episodes_batch(self, records: list[EpisodeRecord]):
        """Insert multiple episode records in a batch."""
        if not records:
            return

        data = [
            (
                r.planner,
                r.obstacles,
                r.episode,
                r.world_hash,
                r.outcome.value,
                r.steps,
                r.time_s,
                r.total_return,
            )
            for r in records
        ]
        self.conn.executemany(
            """
            INSERT INTO episodes
            (planner, obstacles, episode, world_hash, outcome, steps, time_s, total_return)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?)
            """,
            data,
        )

    def world_hashes(self, planner: str, obstacles: int) -> list[str]:
        """Scenario hashes of one planner at one obstacle count, by episode."""
        rows = self.execute(
            "SELECT world_hash FROM episodes WHERE planner = ? AND obstacles = ? ORDER BY episode",
            (planner, obstacles),
        ).fetchall()
        return [r[0] for r in rows]

    def metrics(self, reference_planner: str, planners: list[str] | None = None) -> list[MetricsRow]:
        """Aggregate rates and timings per planner and obstacle count.

        Rows follow the order of ``planners`` when given, then obstacle count.
        """
        rows = [
            MetricsRow(
                planner=r[0],
                obstacles=r[1],
                success_rate=float(r[2]),
                collision_rate=float(r[3]),
                timeout_rate=float(r[4]),
                mean_time_s=None if r[5] is None else float(r[5]),
                time_rate=None if r[6] is None else float(r[6]),
            )
            for r in self.execute(METRICS_SQL, (reference_planner,)).fetchall()
        ]
        if planners:
            order = {name: i for i, name in enumerate(planners)}
            rows = [r for r in rows if r.planner in order]
            rows.sort(key=lambda r: (order[r.planner], r.obstacles))
        return rows

    def training_summary(self, log_path: Path | str) -> list[dict[str, Any]]:
        """Per-stage summary of a JSON-lines training log."""
        path = str(log_path).replace("'", "''")
        result = self.execute(TRAINING_SUMMARY_SQL.format(path=path))
        columns = [d[0] for d in result.description]
        return [dict(zip(columns, row)) for row in result.fetchall()]

    def get_stats(self) -> dict[str, Any]:
        """Get database statistics."""
        stats = {}
        stats["total_episodes"] = self.execute("SELECT COUNT(*) FROM episodes").fetchone()[0]
        results = self.execute(
            "SELECT planner, COUNT(*) FROM episodes GROUP BY planner ORDER BY planner"
        ).fetchall()
        stats["episodes_by_planner"] = {r[0]: r[1] for r in results}
        return stats

    def close(self):
        """Close the database connection."""
        if self._conn:
            self._conn.close()
            self._conn = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
