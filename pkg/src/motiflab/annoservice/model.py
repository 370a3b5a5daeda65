"""Data model for the A/B annotation protocol."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from ..errors import ContractError

AXES = ("object_motion", "text_alignment", "image_alignment", "overall_quality")
CHOICES = ("left", "right")


@dataclass(frozen=True)
class PairTask:
    """One A/B comparison; the displayed order hides model identity."""

    task_id: str
    session_id: str
    prompt_text: str
    image_ref: str
    video_x: str                 # canonical model X asset
    video_y: str                 # canonical model Y asset
    left_model: str              # "x" or "y": which model shows on the left
    required_votes: int = 5
    min_watch_seconds: float = 60.0

    def __post_init__(self):
        if self.left_model not in ("x", "y"):
            raise ContractError("left_model must be 'x' or 'y'")
        if self.required_votes < 1:
            raise ContractError("required_votes must be >= 1")

    @property
    def left_video(self) -> str:
        return self.video_x if self.left_model == "x" else self.video_y

    @property
    def right_video(self) -> str:
        return self.video_y if self.left_model == "x" else self.video_x

    def canonical_choice(self, displayed_choice: str) -> str:
        """De-shuffle a left/right choice to canonical model identity."""
        if displayed_choice not in CHOICES:
            raise ContractError(f"choice must be one of {CHOICES}")
        if displayed_choice == "left":
            return self.left_model
        return "y" if self.left_model == "x" else "x"

    def public_view(self) -> dict:
        """What an annotator's client may see: no model identity anywhere.

        Videos are addressed through task-scoped blinded routes so even the
        asset URLs cannot link sides to models across tasks.
        """
        base = f"/api/session/{self.session_id}/task/{self.task_id}/video"
        return {
            "task_id": self.task_id,
            "session_id": self.session_id,
            "prompt_text": self.prompt_text,
            "image_ref": f"/api/assets/{self.image_ref}",
            "video_left": f"{base}/left",
            "video_right": f"{base}/right",
            "min_watch_seconds": self.min_watch_seconds,
        }

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class VoteRecord:
    task_id: str
    annotator_id: str
    choice: str                      # "left" | "right" (as displayed)
    justifications: tuple[str, ...]  # non-empty subset of AXES
    watch_seconds: float
    timestamp: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["justifications"] = list(self.justifications)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VoteRecord":
        return cls(task_id=d["task_id"], annotator_id=d["annotator_id"],
                   choice=d["choice"],
                   justifications=tuple(d["justifications"]),
                   watch_seconds=float(d["watch_seconds"]),
                   timestamp=float(d.get("timestamp", 0.0)))


@dataclass
class AggregateResult:
    session_id: str
    model_x: str
    model_y: str
    tasks_total: int = 0
    tasks_decided: int = 0
    tasks_pending: int = 0           # fewer votes than required; excluded from the score
    tasks_tied: int = 0              # possible only with an even vote count
    wins_x: int = 0
    wins_y: int = 0
    ti2v_score_x: float = 0.0        # percent of decided tasks won
    ti2v_score_y: float = 0.0
    axis_scores: dict = field(default_factory=dict)  # axis -> {"x": pct, "y": pct}
    vote_count: int = 0

    def to_dict(self) -> dict:
        return asdict(self)
