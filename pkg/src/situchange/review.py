"""Review decisions for distinctive features: append-only JSONL log, replayed
into per-task state with optimistic version checks."""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


class ReviewError(Exception):
    pass


class VersionConflict(ReviewError):
    def __init__(self, task_id: str, current_version: int):
        self.task_id = task_id
        self.current_version = current_version
        super().__init__(f"{task_id}: decision based on a stale version (current {current_version})")


class StoreLocked(ReviewError):
    pass


@dataclass
class ReviewState:
    task_id: str
    accepted_key: Optional[str] = None
    rejected: dict[str, str] = field(default_factory=dict)
    manual_text: Optional[str] = None
    manual_author: Optional[str] = None
    manual_time: Optional[float] = None
    version: int = 0

    @property
    def rejected_keys(self) -> tuple[str, ...]:
        return tuple(self.rejected)

    @property
    def human_resolved(self) -> bool:
        return bool(self.accepted_key or self.manual_text)


@dataclass(frozen=True)
class Decision:
    task_id: str
    action: str  # accept | reject | manual
    base_version: int
    feature_key: Optional[str] = None
    manual_text: Optional[str] = None
    reason: str = ""
    author: str = ""
    timestamp: float = 0.0

    def to_json(self) -> str:
        out = {
            "task_id": self.task_id,
            "action": self.action,
            "base_version": self.base_version,
            "feature_key": self.feature_key,
            "manual_text": self.manual_text,
            "reason": self.reason,
            "author": self.author,
            "timestamp": self.timestamp,
        }
        return json.dumps(out, sort_keys=True, ensure_ascii=False)

    @staticmethod
    def from_dict(d: dict) -> "Decision":
        return Decision(
            task_id=d["task_id"],
            action=d["action"],
            base_version=int(d.get("base_version", 0)),
            feature_key=d.get("feature_key"),
            manual_text=d.get("manual_text"),
            reason=d.get("reason", ""),
            author=d.get("author", ""),
            timestamp=float(d.get("timestamp", 0.0)),
        )


def _apply(state: ReviewState, decision: Decision) -> None:
    if decision.action == "accept":
        if not decision.feature_key:
            raise ReviewError("accept decision needs a feature_key")
        state.accepted_key = decision.feature_key
        state.manual_text = None
    elif decision.action == "reject":
        if not decision.feature_key:
            raise ReviewError("reject decision needs a feature_key")
        state.rejected[decision.feature_key] = decision.reason
        if state.accepted_key == decision.feature_key:
            state.accepted_key = None
    elif decision.action == "manual":
        if not decision.manual_text or not decision.manual_text.strip():
            raise ReviewError("manual decision needs non-empty text")
        state.manual_text = decision.manual_text
        state.manual_author = decision.author
        state.manual_time = decision.timestamp
        state.accepted_key = None
    else:
        raise ReviewError(f"unknown decision action '{decision.action}'")
    state.version += 1


class ReviewStore:
    """One writer per log file; readers replay the log to identical state."""

    def __init__(self, log_path: str | Path):
        self.log_path = Path(log_path)
        self._states: dict[str, ReviewState] = {}
        if self.log_path.exists():
            self._replay()

    def _replay(self) -> None:
        with self.log_path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                decision = Decision.from_dict(json.loads(line))
                state = self._states.setdefault(decision.task_id, ReviewState(decision.task_id))
                _apply(state, decision)

    def get(self, task_id: str) -> Optional[ReviewState]:
        return self._states.get(task_id)

    def version_of(self, task_id: str) -> int:
        state = self._states.get(task_id)
        return state.version if state else 0

    def submit(self, decision: Decision) -> ReviewState:
        """Validate against the current version, append to the log, apply."""
        state = self._states.setdefault(decision.task_id, ReviewState(decision.task_id))
        if decision.base_version != state.version:
            raise VersionConflict(decision.task_id, state.version)
        if decision.timestamp == 0.0:
            decision = Decision(
                task_id=decision.task_id,
                action=decision.action,
                base_version=decision.base_version,
                feature_key=decision.feature_key,
                manual_text=decision.manual_text,
                reason=decision.reason,
                author=decision.author,
                timestamp=time.time(),
            )
        # validate before persisting so a bad decision never lands in the log
        probe = ReviewState(
            decision.task_id,
            accepted_key=state.accepted_key,
            rejected=dict(state.rejected),
            manual_text=state.manual_text,
            version=state.version,
        )
        _apply(probe, decision)
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        with self.log_path.open("a", encoding="utf-8") as fh:
            fh.write(decision.to_json() + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        _apply(state, decision)
        return state


class StoreLock:
    """Exclusive advisory lock so a second review-service writer is refused."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fd: Optional[int] = None

    def acquire(self) -> None:
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            os.write(self._fd, str(os.getpid()).encode())
        except FileExistsError:
            owner = ""
            try:
                owner = self.path.read_text().strip()
            except OSError:
                pass
            raise StoreLocked(
                f"review store already locked by pid {owner or 'unknown'} ({self.path})"
            ) from None

    def release(self) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass

    def __enter__(self) -> "StoreLock":
        self.acquire()
        return self

    def __exit__(self, *exc) -> None:
        self.release()
