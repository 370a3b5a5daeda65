"""Session scheduling, gated vote intake, and majority-vote aggregation.

All mutations are serialized through one lock, so duplicate detection is
at-most-once per (task, annotator) even with concurrent annotators. The
server-side watch-time check (submit time minus task issue time) is
authoritative; the client-reported watch seconds must also clear the minimum.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from .model import AXES, CHOICES, AggregateResult, PairTask, VoteRecord
from .store import VoteLog


@dataclass(frozen=True)
class SessionConfig:
    session_id: str
    model_x: str
    model_y: str
    required_votes: int = 5
    min_watch_seconds: float = 60.0
    seed: int = 0


@dataclass
class _Session:
    config: SessionConfig
    tasks: dict[str, PairTask] = field(default_factory=dict)
    votes: dict[str, list[VoteRecord]] = field(default_factory=dict)
    issued: dict[tuple[str, str], float] = field(default_factory=dict)
    excluded: list[str] = field(default_factory=list)


class AnnotationService:
    def __init__(self, log: VoteLog | None = None, clock=time.time):
        self._log = log or VoteLog(None)
        self._clock = clock
        self._lock = threading.RLock()
        self._sessions: dict[str, _Session] = {}

    # -- session setup -----------------------------------------------------

    def create_session(self, config: SessionConfig, pairs: list[dict],
                       missing: list[str] | None = None) -> list[PairTask]:
        """Create one task per (image, prompt) pair with a seeded, balanced
        left/right assignment.

        Each pair dict needs: pair_id, prompt_text, image_ref, video_x,
        video_y. `missing` lists pair ids excluded upstream (e.g. a model
        failed to generate); they are recorded, not scheduled.
        """
        with self._lock:
            if config.session_id in self._sessions:
                raise ContractError(f"session {config.session_id!r} already exists")
            if not pairs:
                raise ContractError("a session needs at least one pair")
            n = len(pairs)
            sides = np.array(["x"] * (n // 2) + ["y"] * (n - n // 2))
            rng = np.random.Generator(np.random.PCG64(config.seed))
            rng.shuffle(sides)
            session = _Session(config, excluded=list(missing or []))
            for pair, side in zip(pairs, sides):
                task = PairTask(
                    task_id=str(pair["pair_id"]), session_id=config.session_id,
                    prompt_text=pair["prompt_text"], image_ref=pair["image_ref"],
                    video_x=pair["video_x"], video_y=pair["video_y"],
                    left_model=str(side), required_votes=config.required_votes,
                    min_watch_seconds=config.min_watch_seconds)
                session.tasks[task.task_id] = task
                session.votes[task.task_id] = []
            self._sessions[config.session_id] = session
            self._log.append({"type": "session", "created_at": self._clock(),
                              "excluded": session.excluded,
                              **config.__dict__})
            for task in session.tasks.values():
                self._log.append({"type": "task", **task.to_dict()})
            return list(session.tasks.values())

    def session_ids(self) -> list[str]:
        with self._lock:
            return list(self._sessions)

    def session_info(self, session_id: str, annotator_id: str | None = None) -> dict:
        with self._lock:
            s = self._session(session_id)
            info = {
                "session_id": session_id,
                "model_x": s.config.model_x, "model_y": s.config.model_y,
                "n_tasks": len(s.tasks),
                "n_votes": sum(len(v) for v in s.votes.values()),
                "required_votes": s.config.required_votes,
                "min_watch_seconds": s.config.min_watch_seconds,
                "excluded": list(s.excluded),
            }
            if annotator_id is not None:
                done = sum(1 for tid, votes in s.votes.items()
                           if any(v.annotator_id == annotator_id for v in votes))
                info["annotator_done"] = done
            return info

    def _session(self, session_id: str) -> _Session:
        if session_id not in self._sessions:
            raise ContractError(f"unknown session {session_id!r}")
        return self._sessions[session_id]

    # -- scheduling ---------------------------------------------------------

    def next_task(self, session_id: str, annotator_id: str) -> PairTask | None:
        """Fewest-votes-first task this annotator has not voted on; None when
        done. Issuing (re)stamps the server-side watch timer."""
        if not annotator_id:
            raise ContractError("annotator_id required")
        with self._lock:
            s = self._session(session_id)
            candidates = [
                t for t in s.tasks.values()
                if not any(v.annotator_id == annotator_id for v in s.votes[t.task_id])
            ]
            if not candidates:
                return None
            task = min(candidates, key=lambda t: len(s.votes[t.task_id]))
            s.issued[(task.task_id, annotator_id)] = self._clock()
            return task

    def resolve_video(self, session_id: str, task_id: str, side: str) -> str:
        """Blinded asset resolution: (task, displayed side) -> internal ref."""
        if side not in ("left", "right"):
            raise ContractError("side must be 'left' or 'right'")
        with self._lock:
            s = self._session(session_id)
            task = s.tasks.get(task_id)
            if task is None:
                raise ContractError(f"unknown task {task_id!r}")
            return task.left_video if side == "left" else task.right_video

    # -- vote intake ----------------------------------------------------------

    def submit_vote(self, session_id: str, vote: VoteRecord) -> tuple[bool, str]:
        """Gate and persist a vote; returns (accepted, reason)."""
        with self._lock:
            s = self._session(session_id)
            task = s.tasks.get(vote.task_id)
            if task is None:
                return False, "unknown_task"
            if any(v.annotator_id == vote.annotator_id
                   for v in s.votes[vote.task_id]):
                return False, "duplicate"
            if vote.choice not in CHOICES:
                return False, "invalid_choice"
            if not vote.justifications:
                return False, "empty_justification"
            if any(a not in AXES for a in vote.justifications):
                return False, "invalid_axis"
            issued = s.issued.get((vote.task_id, vote.annotator_id))
            if issued is None:
                return False, "not_assigned"
            now = self._clock()
            if (now - issued) < task.min_watch_seconds:
                return False, "under_time"
            if vote.watch_seconds < task.min_watch_seconds:
                return False, "under_time"
            stamped = VoteRecord(vote.task_id, vote.annotator_id, vote.choice,
                                 tuple(vote.justifications), vote.watch_seconds,
                                 timestamp=now)
            s.votes[vote.task_id].append(stamped)
            self._log.append({"type": "vote", "session_id": session_id,
                              **stamped.to_dict()})
            return True, "accepted"

    # -- aggregation ----------------------------------------------------------

    def aggregate(self, session_id: str) -> AggregateResult:
        with self._lock:
            s = self._session(session_id)
            return aggregate_session(s.config, s.tasks, s.votes)

    # -- durability -----------------------------------------------------------

    @classmethod
    def from_log(cls, path, clock=time.time) -> "AnnotationService":
        """Rebuild a service (no live log attached) by replaying a vote log."""
        svc = cls(log=VoteLog(None), clock=clock)
        for rec in VoteLog.replay(path):
            kind = rec.pop("type")
            if kind == "session":
                cfg = SessionConfig(
                    session_id=rec["session_id"], model_x=rec["model_x"],
                    model_y=rec["model_y"],
                    required_votes=int(rec["required_votes"]),
                    min_watch_seconds=float(rec["min_watch_seconds"]),
                    seed=int(rec.get("seed", 0)))
                svc._sessions[cfg.session_id] = _Session(
                    cfg, excluded=list(rec.get("excluded", [])))
            elif kind == "task":
                s = svc._session(rec["session_id"])
                task = PairTask(
                    task_id=rec["task_id"], session_id=rec["session_id"],
                    prompt_text=rec["prompt_text"], image_ref=rec["image_ref"],
                    video_x=rec["video_x"], video_y=rec["video_y"],
                    left_model=rec["left_model"],
                    required_votes=int(rec["required_votes"]),
                    min_watch_seconds=float(rec["min_watch_seconds"]))
                s.tasks[task.task_id] = task
                s.votes[task.task_id] = []
            elif kind == "vote":
                s = svc._session(rec.pop("session_id"))
                vote = VoteRecord.from_dict(rec)
                if any(v.annotator_id == vote.annotator_id
                       for v in s.votes[vote.task_id]):
                    continue  # replay is idempotent
                s.votes[vote.task_id].append(vote)
            else:
                raise ContractError(f"unknown log record type {kind!r}")
        return svc


def aggregate_session(config: SessionConfig, tasks: dict[str, PairTask],
                      votes: dict[str, list[VoteRecord]]) -> AggregateResult:
    """Pure aggregation: majority vote per fully-voted task after de-shuffling,
    plus per-axis justification percentages over all individual votes."""
    res = AggregateResult(session_id=config.session_id, model_x=config.model_x,
                          model_y=config.model_y, tasks_total=len(tasks))
    axis_counts = {axis: {"x": 0, "y": 0} for axis in AXES}
    total_votes = 0
    for tid, task in tasks.items():
        recs = votes.get(tid, [])
        total_votes += len(recs)
        for v in recs:
            model = task.canonical_choice(v.choice)
            for axis in v.justifications:
                axis_counts[axis][model] += 1
        if len(recs) < task.required_votes:
            res.tasks_pending += 1
            continue
        x_cnt = sum(1 for v in recs if task.canonical_choice(v.choice) == "x")
        y_cnt = len(recs) - x_cnt
        if x_cnt == y_cnt:
            res.tasks_tied += 1
        elif x_cnt > y_cnt:
            res.wins_x += 1
            res.tasks_decided += 1
        else:
            res.wins_y += 1
            res.tasks_decided += 1
    if res.tasks_decided:
        res.ti2v_score_x = 100.0 * res.wins_x / res.tasks_decided
        res.ti2v_score_y = 100.0 * res.wins_y / res.tasks_decided
    res.vote_count = total_votes
    if total_votes:
        res.axis_scores = {
            axis: {m: 100.0 * c[m] / total_votes for m in ("x", "y")}
            for axis, c in axis_counts.items()}
    else:
        res.axis_scores = {axis: {"x": 0.0, "y": 0.0} for axis in AXES}
    return res
