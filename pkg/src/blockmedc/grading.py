"""Grading scale arithmetic and the deliberation rule.

Grades are handled as integer hundredths (``12.50`` -> ``1250``) so that
averages and deltas are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum

SEMESTERS = ("S1", "S2", "S3", "S4", "S5", "S6")
MAX_GRADE = 2000

DEGREE_LABELS = {
    "AssociateDegree": "Diploma of General University Studies",
    "Bachelor": "Bachelor's Degree",
}


class Session(str, Enum):
    NORMAL = "Normal"
    CATCH_UP = "CatchUp"


class GradeError(ValueError):
    pass


def parse_grade(value) -> int:
    """'12.5', Decimal('12.50') or 12 -> 1250.  At most two decimals."""
    if isinstance(value, bool):
        raise GradeError(f"not a grade: {value!r}")
    if isinstance(value, int):
        return value * 100
    try:
        d = Decimal(str(value))
    except InvalidOperation:
        raise GradeError(f"not a grade: {value!r}") from None
    if not d.is_finite():
        raise GradeError(f"not a grade: {value!r}")
    cents = d * 100
    if cents != cents.to_integral_value():
        raise GradeError(f"more than two decimals: {value!r}")
    return int(cents)


def format_grade(cents: int) -> str:
    sign = "-" if cents < 0 else ""
    cents = abs(cents)
    return f"{sign}{cents // 100}.{cents % 100:02d}"


def semester_average(grades: list[int]) -> int:
    """Unweighted mean, rounded half up to the hundredth."""
    if not grades:
        raise ValueError("no grades")
    n = len(grades)
    return (2 * sum(grades) + n) // (2 * n)


@dataclass(frozen=True)
class GradingPolicy:
    pass_threshold: int = 1000
    honors_thresholds: tuple = ((1200, "Assez Bien"), (1400, "Bien"), (1600, "Très Bien"))
    deliberation_margin: int = 50
    semesters_per_degree: dict = field(
        default_factory=lambda: {"AssociateDegree": 4, "Bachelor": 6}
    )

    def __post_init__(self):
        levels = [t for t, _ in self.honors_thresholds]
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("honors thresholds must be strictly increasing")
        if self.deliberation_margin <= 0:
            raise ValueError("deliberation margin must be positive")

    def mention(self, avg: int) -> int:
        """0 = no mention, 1.. = index into honors_thresholds (1-based)."""
        level = 0
        for i, (threshold, _) in enumerate(self.honors_thresholds, start=1):
            if avg >= threshold:
                level = i
        return level

    def mention_name(self, level: int) -> str:
        return "" if level == 0 else self.honors_thresholds[level - 1][1]

    def validated(self, avg: int) -> bool:
        return avg >= self.pass_threshold

    @classmethod
    def from_json(cls, data: dict) -> GradingPolicy:
        kw = {}
        if "passThreshold" in data:
            kw["pass_threshold"] = parse_grade(data["passThreshold"])
        if "honorsThresholds" in data:
            kw["honors_thresholds"] = tuple(
                (parse_grade(t), str(name)) for t, name in data["honorsThresholds"]
            )
        if "deliberationMargin" in data:
            kw["deliberation_margin"] = parse_grade(data["deliberationMargin"])
        if "semestersPerDegree" in data:
            kw["semesters_per_degree"] = {str(k): int(v) for k, v in data["semestersPerDegree"].items()}
        return cls(**kw)

    def to_json(self) -> dict:
        return {
            "passThreshold": format_grade(self.pass_threshold),
            "honorsThresholds": [[format_grade(t), n] for t, n in self.honors_thresholds],
            "deliberationMargin": format_grade(self.deliberation_margin),
            "semestersPerDegree": dict(self.semesters_per_degree),
        }


def deliberation_rule(avg: int, session: Session, policy: GradingPolicy) -> tuple[str, int] | None:
    """Return ``(target, required_delta)`` when ``avg`` is within the margin of a threshold.

    Normal sessions only look for the next mention; catch-up sessions also
    pick up students just below the pass mark.
    """
    margin = policy.deliberation_margin
    session = Session(session)
    if session is Session.CATCH_UP and avg < policy.pass_threshold <= avg + margin:
        return "Validate", policy.pass_threshold - avg
    if avg >= policy.pass_threshold:
        level = policy.mention(avg)
        if policy.mention(avg + margin) > level:
            threshold, name = policy.honors_thresholds[level]
            return f"Honors({name})", threshold - avg
    return None
