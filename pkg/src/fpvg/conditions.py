"""Visual-input test conditions.

Every prediction run and manifest is tagged with the condition under
which the model saw the image: all detected objects, only the
question-relevant ones, only the irrelevant ones, or a leave-one-out
variant that omits a single object index.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError

CONDITION_KINDS = ("all", "rel", "irrel", "loo")


@dataclass(frozen=True, order=True)
class Condition:
    kind: str
    loo_index: int | None = None

    def __post_init__(self):
        if self.kind not in CONDITION_KINDS:
            raise ValidationError(f"unknown condition kind: {self.kind!r}")
        if self.kind == "loo":
            if self.loo_index is None or self.loo_index < 0:
                raise ValidationError("loo condition requires a nonnegative loo_index")
        elif self.loo_index is not None:
            raise ValidationError(f"condition {self.kind!r} must not carry a loo_index")

    @classmethod
    def all(cls) -> "Condition":
        return cls("all")

    @classmethod
    def rel(cls) -> "Condition":
        return cls("rel")

    @classmethod
    def irrel(cls) -> "Condition":
        return cls("irrel")

    @classmethod
    def loo(cls, index: int) -> "Condition":
        return cls("loo", index)

    @classmethod
    def parse(cls, text: str) -> "Condition":
        """Parse "all" / "rel" / "irrel" / "loo:<k>"."""
        if text.startswith("loo:"):
            try:
                return cls.loo(int(text.split(":", 1)[1]))
            except ValueError:
                raise ValidationError(f"malformed loo condition: {text!r}") from None
        return cls(text)

    def __str__(self) -> str:
        if self.kind == "loo":
            return f"loo:{self.loo_index}"
        return self.kind
