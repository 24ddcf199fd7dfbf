"""Durable annotation store: one JSON file per stay, atomic write-rename.

Annotations carry a version counter for optimistic concurrency; updates
must present the version they are based on and conflict with 409 semantics
otherwise (enforced by the API layer via VersionConflict).
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from respews.errors import RespewsError


class AnnotationNotFound(RespewsError):
    pass


class VersionConflict(RespewsError):
    pass


@dataclass
class Annotation:
    annotation_id: str
    stay_id: str
    type: str
    start_s: int
    end_s: int
    label: str = ""
    metadata: dict = field(default_factory=dict)
    color: str | None = None
    version: int = 1
    created_at: str = ""
    updated_at: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class AnnotationStore:
    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._index: dict[str, str] = {}  # annotation_id -> stay_id
        for path in sorted(self.directory.glob("*.json")):
            for doc in json.loads(path.read_text()):
                self._index[doc["annotation_id"]] = doc["stay_id"]

    def _lock(self, stay_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(stay_id, threading.Lock())

    def _path(self, stay_id: str) -> Path:
        return self.directory / f"{stay_id}.json"

    def _read(self, stay_id: str) -> list[dict]:
        path = self._path(stay_id)
        if not path.exists():
            return []
        return json.loads(path.read_text())

    def _write(self, stay_id: str, docs: list[dict]) -> None:
        path = self._path(stay_id)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(docs, indent=2) + "\n")
        tmp.replace(path)  # atomic on POSIX; ack only after this returns

    def create(self, stay_id: str, type: str, start_s: int, end_s: int,
               label: str = "", metadata: dict | None = None, color: str | None = None) -> Annotation:
        ann = Annotation(
            annotation_id=f"a-{uuid.uuid4().hex[:12]}",
            stay_id=stay_id,
            type=type,
            start_s=int(start_s),
            end_s=int(end_s),
            label=label,
            metadata=metadata or {},
            color=color,
            created_at=_now(),
            updated_at=_now(),
        )
        with self._lock(stay_id):
            docs = self._read(stay_id)
            docs.append(ann.to_dict())
            self._write(stay_id, docs)
            self._index[ann.annotation_id] = stay_id
        return ann

    def get(self, annotation_id: str) -> Annotation:
        stay_id = self._index.get(annotation_id)
        if stay_id is None:
            raise AnnotationNotFound(annotation_id)
        for doc in self._read(stay_id):
            if doc["annotation_id"] == annotation_id:
                return Annotation(**doc)
        raise AnnotationNotFound(annotation_id)

    def update(self, annotation_id: str, expected_version: int, **changes) -> Annotation:
        stay_id = self._index.get(annotation_id)
        if stay_id is None:
            raise AnnotationNotFound(annotation_id)
        with self._lock(stay_id):
            docs = self._read(stay_id)
            for i, doc in enumerate(docs):
                if doc["annotation_id"] == annotation_id:
                    if doc["version"] != expected_version:
                        raise VersionConflict(
                            f"{annotation_id}: expected version {expected_version}, "
                            f"stored version {doc['version']}"
                        )
                    doc.update({k: v for k, v in changes.items() if v is not None})
                    doc["version"] = expected_version + 1
                    doc["updated_at"] = _now()
                    docs[i] = doc
                    self._write(stay_id, docs)
                    return Annotation(**doc)
        raise AnnotationNotFound(annotation_id)

    def delete(self, annotation_id: str) -> None:
        stay_id = self._index.get(annotation_id)
        if stay_id is None:
            raise AnnotationNotFound(annotation_id)
        with self._lock(stay_id):
            docs = self._read(stay_id)
            remaining = [d for d in docs if d["annotation_id"] != annotation_id]
            if len(remaining) == len(docs):
                raise AnnotationNotFound(annotation_id)
            self._write(stay_id, remaining)
            self._index.pop(annotation_id, None)

    def list(
        self,
        stay_id: str | None = None,
        type: str | None = None,
        overlaps: tuple[int, int] | None = None,
        sort_by: str = "start_s",
    ) -> list[Annotation]:
        stay_ids = [stay_id] if stay_id else sorted({s for s in self._index.values()})
        out: list[Annotation] = []
        for sid in stay_ids:
            for doc in self._read(sid):
                ann = Annotation(**doc)
                if type and ann.type != type:
                    continue
                if overlaps and (ann.end_s < overlaps[0] or ann.start_s > overlaps[1]):
                    continue
                out.append(ann)
        keys = {
            "start_s": lambda a: (a.stay_id, a.start_s, a.annotation_id),
            "type": lambda a: (a.type, a.stay_id, a.start_s),
            "updated_at": lambda a: a.updated_at,
        }
        out.sort(key=keys.get(sort_by, keys["start_s"]))
        return out

    def export_all(self) -> list[dict]:
        return [a.to_dict() for a in self.list()]
