"""
Local artifact storage.

Every command writes its outputs through an ArtifactStore rooted at the
`--out` directory. The store remembers what it created so a failed run can
remove its partial outputs, and it writes JSON documents in one stable
format so repeated runs produce byte-identical files.
"""

import json
import logging
import shutil
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from sylva_forge.core.config import get_settings
from sylva_forge.core.exceptions import ArtifactIOError

logger = logging.getLogger(__name__)


def dump_json(document: BaseModel | dict[str, Any]) -> str:
    """Stable JSON text: two-space indent, insertion order, trailing newline."""
    data = document.model_dump(mode="json") if isinstance(document, BaseModel) else document
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


class ArtifactStore:
    """Writes artifacts below one root directory."""

    def __init__(self, root: Path):
        self.settings = get_settings()
        self.root = Path(root)
        self._created_root = False
        self._written: list[Path] = []
        self._dirs: list[Path] = []

    def prepare(self) -> "ArtifactStore":
        """Create the root and check it is writable."""
        try:
            if not self.root.exists():
                self.root.mkdir(parents=True)
                self._created_root = True
            test_file = self.root / ".write_test"
            test_file.touch()
            test_file.unlink()
            logger.debug(f"Output directory ready: {self.root}")
        except OSError as e:
            logger.error(f"Failed to create or access output directory {self.root}: {e}")
            raise ArtifactIOError(f"Output directory not writable: {self.root}") from e
        return self

    def path(self, relative: str | Path) -> Path:
        """Absolute path for `relative`, parents created and the file tracked."""
        target = self.root / relative
        missing = [p for p in reversed(target.parents) if p != self.root and not p.exists()]
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ArtifactIOError(f"Cannot create directory {target.parent}: {e}") from e
        self._dirs.extend(p for p in missing if self.root in p.parents)
        self._written.append(target)
        return target

    def write_text(self, relative: str | Path, text: str) -> Path:
        target = self.path(relative)
        try:
            with target.open("w", encoding="utf-8", newline="\n") as f:
                f.write(text)
        except OSError as e:
            raise ArtifactIOError(f"Cannot write {target}: {e}") from e
        return target

    def write_json(self, relative: str | Path, document: BaseModel | dict[str, Any]) -> Path:
        return self.write_text(relative, dump_json(document))

    def write_manifest(self, manifest: BaseModel, name: str | None = None) -> Path:
        target = self.write_json(name or self.settings.manifest_name, manifest)
        logger.info(f"Manifest written: {target.relative_to(self.root)}")
        return target

    @property
    def written(self) -> list[str]:
        """Written files relative to the root, sorted."""
        return sorted(p.relative_to(self.root).as_posix() for p in set(self._written))

    def cleanup(self) -> None:
        """Remove everything this store wrote."""
        for target in reversed(self._written):
            target.unlink(missing_ok=True)
        for directory in sorted(set(self._dirs), key=lambda p: len(p.parts), reverse=True):
            if directory.exists() and not any(directory.iterdir()):
                directory.rmdir()
        if self._created_root and self.root.exists():
            shutil.rmtree(self.root, ignore_errors=True)
        logger.warning(f"Partial outputs removed: files={len(set(self._written))} root={self.root}")
        self._written.clear()
        self._dirs.clear()

    def __enter__(self) -> "ArtifactStore":
        return self.prepare()

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is not None:
            self.cleanup()
        return False
