"""
DuckDB aggregation of ground-truth and prediction files.

A truth file is a dataset subcloud CSV (`category` column) or a scene
cloud CSV (`label` column, mapped through the default category map). A
prediction file holds one category per line, as a slug or an integer
code, in the same row order. Rows are paired with a POSITIONAL JOIN and
counted per (truth, prediction) cell.
"""

import logging
from pathlib import Path

import duckdb
import numpy as np

from sylva_forge.core.exceptions import ArtifactIOError, ForgeValidationError, MalformedRecordError
from sylva_forge.models.enums import Category, Label
from sylva_forge.schema.categories import DEFAULT_CATEGORY_MAP
from sylva_forge.services.metrics import ConfusionMatrix

logger = logging.getLogger(__name__)


def _category_codes() -> dict[str, int]:
    codes = {c.slug: int(c) for c in Category}
    codes.update({str(int(c)): int(c) for c in Category})
    return codes


def _label_codes() -> dict[str, int]:
    return {label.slug: int(DEFAULT_CATEGORY_MAP[label]) for label in Label}


def _escape(path: Path) -> str:
    return str(path).replace("'", "''")


class QueryService:
    """Service for pairing truth and prediction files with DuckDB."""

    def __init__(self):
        self._conn = duckdb.connect(":memory:")

    def _truth_relation(self, path: Path) -> tuple[str, dict[str, int]]:
        """SQL source of the truth categories plus the code table its values use."""
        escaped = _escape(path)
        try:
            columns = [
                row[0]
                for row in self._conn.execute(
                    f"DESCRIBE SELECT * FROM read_csv('{escaped}', header=true, all_varchar=true)"
                ).fetchall()
            ]
        except duckdb.Error as e:
            raise ArtifactIOError(f"Cannot read truth file {path}: {e}") from e
        if "category" in columns:
            source, codes = "category", _category_codes()
        elif "label" in columns:
            source, codes = "label", _label_codes()
        else:
            raise MalformedRecordError(path, 1, "truth file needs a 'category' or 'label' column")
        sql = (
            f"SELECT lower(trim({source})) AS value "
            f"FROM read_csv('{escaped}', header=true, all_varchar=true)"
        )
        return sql, codes

    def _pred_relation(self, path: Path) -> str:
        return (
            "SELECT lower(trim(category)) AS value "
            f"FROM read_csv('{_escape(path)}', header=false, auto_detect=false, "
            "delim='\\t', columns={'category': 'VARCHAR'})"
        )

    def _count(self, sql: str, path: Path) -> int:
        try:
            return int(self._conn.execute(f"SELECT count(*) FROM ({sql})").fetchone()[0])
        except duckdb.Error as e:
            raise ArtifactIOError(f"Cannot read {path}: {e}") from e

    def confusion_from_files(self, truth_path: Path, pred_path: Path, c: int) -> ConfusionMatrix:
        """
        Confusion matrix of one truth/prediction file pair.

        Args:
            truth_path: Subcloud or scene CSV with a category or label column
            pred_path: One category per line, slug or integer code
            c: Number of classes

        Returns:
            ConfusionMatrix over the paired rows
        """
        truth_path, pred_path = Path(truth_path), Path(pred_path)
        for path in (truth_path, pred_path):
            if not path.exists():
                raise ArtifactIOError(f"File not found: {path}")
        truth_sql, truth_codes = self._truth_relation(truth_path)
        pred_sql = self._pred_relation(pred_path)

        n_truth = self._count(truth_sql, truth_path)
        n_pred = self._count(pred_sql, pred_path)
        if n_truth != n_pred:
            raise ForgeValidationError(
                f"Truth and prediction lengths differ: {truth_path.name} has {n_truth} rows, "
                f"{pred_path.name} has {n_pred}"
            )

        query = (
            "SELECT t.value AS truth, p.value AS pred, count(*) AS n "
            f"FROM ({truth_sql}) t POSITIONAL JOIN ({pred_sql}) p "
            "GROUP BY ALL ORDER BY ALL"
        )
        try:
            cells = self._conn.execute(query).fetchall()
        except duckdb.Error as e:
            logger.error(f"DuckDB query execution failed: {e} - Query: {query[:200]}")
            raise ArtifactIOError(f"Cannot pair {truth_path} with {pred_path}: {e}") from e

        pred_codes = _category_codes()
        counts = np.zeros((c, c), dtype=np.int64)
        for truth, pred, n in cells:
            t = truth_codes.get(truth)
            p = pred_codes.get(pred)
            if t is None or p is None:
                bad = truth if t is None else pred
                raise ForgeValidationError(f"Unknown category '{bad}' in {truth_path.name}/{pred_path.name}")
            if t >= c or p >= c:
                raise ForgeValidationError(f"Category code outside [0, {c}) in {pred_path.name}")
            counts[t, p] += n
        logger.debug(f"Paired files: truth={truth_path.name} pred={pred_path.name} rows={n_truth}")
        return ConfusionMatrix.of(counts)

    def confusion_from_pairs(self, pairs: list[tuple[Path, Path]], c: int) -> list[ConfusionMatrix]:
        """One matrix per file pair, in the order given."""
        return [self.confusion_from_files(truth, pred, c) for truth, pred in pairs]


_query_service: QueryService | None = None


def get_query_service() -> QueryService:
    """Get singleton query service instance."""
    global _query_service
    if _query_service is None:
        _query_service = QueryService()
    return _query_service
