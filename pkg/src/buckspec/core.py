"""Domain types, spectrum validation and the gap-moment kernel."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ValidationError


class DomainKind(str, enum.Enum):
    INTERVAL = "interval"
    RECTANGLE = "rectangle"
    CYLINDER = "cylinder"


class ProblemKind(str, enum.Enum):
    BUCKLING = "buckling"
    CLAMPED = "clamped"


class RuleId(str, enum.Enum):
    CY_EUCLID = "cy-euclid"
    SPHERE = "sphere"
    CY_IMPROVED = "cy-improved"
    CY_CONJECTURE = "cy-conjecture"
    THM11 = "thm11"
    COR12 = "cor12"
    THM31 = "thm31"


class BoundMethod(str, enum.Enum):
    CLOSED_FORM_QUADRATIC = "closed_form_quadratic"
    BISECTION = "bisection"


_LENGTH_COUNT = {DomainKind.INTERVAL: 1, DomainKind.RECTANGLE: 2, DomainKind.CYLINDER: 2}


@dataclass(frozen=True)
class DomainSpec:
    """Product domain.

    ``lengths`` is ``(h,)`` for an interval, ``(a, b)`` for a rectangle and
    ``(circumference, height)`` for a cylinder.
    """

    kind: DomainKind
    lengths: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        lengths = tuple(float(x) for x in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if len(lengths) != _LENGTH_COUNT[self.kind]:
            raise ValidationError(
                "BAD_DOMAIN",
                f"{self.kind.value} needs {_LENGTH_COUNT[self.kind]} lengths, got {len(lengths)}",
            )
        for x in lengths:
            if not (math.isfinite(x) and x > 0):
                raise ValidationError("BAD_DOMAIN", f"lengths must be positive and finite, got {x}")

    def scaled(self, c: float) -> "DomainSpec":
        return DomainSpec(self.kind, tuple(c * x for x in self.lengths))

    @property
    def aspect_ratio(self) -> float:
        return max(self.lengths) / min(self.lengths)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "lengths": list(self.lengths)}


@dataclass(frozen=True)
class ProblemSpec:
    order: int
    kind: ProblemKind
    domain: DomainSpec

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind(self.kind))
        if isinstance(self.order, bool) or int(self.order) != self.order or self.order < 2:
            raise ValidationError("INVALID_ORDER", f"order must be an integer >= 2, got {self.order}")
        object.__setattr__(self, "order", int(self.order))

    def to_dict(self) -> dict:
        return {"l": self.order, "kind": self.kind.value, "domain": self.domain.to_dict()}


@dataclass(frozen=True)
class Spectrum:
    """First K eigenvalues of a problem with per-value convergence estimates.

    ``convergence[i]`` is the relative change of value ``i`` against the
    previous (coarser) discretization; ``inf`` when no comparison exists.
    """

    problem: ProblemSpec
    values: tuple[float, ...]
    convergence: tuple[float, ...]
    resolution: dict = field(default_factory=dict, compare=False)
    converged: bool = True

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(validate_spectrum(self.values)))
        object.__setattr__(self, "convergence", tuple(float(c) for c in self.convergence))
        if len(self.convergence) != len(self.values):
            raise ValidationError("BAD_SPECTRUM", "convergence and values differ in length")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class RuleParams:
    """Free parameters of the inequalities.

    ``order`` is the polyharmonic order l; ``n`` the ambient dimension used by
    the Euclidean and spherical rules; ``delta`` the sphere-rule constant;
    ``delta_seq`` the positive non-increasing sequence of the general theorem.
    """

    order: int = 2
    n: int | None = None
    delta: float | None = None
    delta_seq: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.order < 2:
            raise ValidationError("INVALID_ORDER", f"order must be >= 2, got {self.order}")
        if self.n is not None and self.n < 2:
            raise ValidationError("BAD_DIMENSION", f"n must be >= 2, got {self.n}")
        if self.delta is not None and not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValidationError("BAD_DELTA", f"delta must be positive, got {self.delta}")
        if self.delta_seq is not None:
            seq = tuple(float(d) for d in self.delta_seq)
            object.__setattr__(self, "delta_seq", seq)
            check_delta_seq(seq)


def check_delta_seq(seq: Sequence[float]) -> None:
    for d in seq:
        if not (d > 0 and math.isfinite(d)):
            raise ValidationError("BAD_DELTA_SEQ", f"delta sequence must be positive, got {d}")
    for a, b in zip(seq, seq[1:]):
        if b > a:
            raise ValidationError("BAD_DELTA_SEQ", "delta sequence must be non-increasing")


@dataclass(frozen=True)
class InequalityReport:
    rule: RuleId
    k: int
    lhs: float
    rhs: float
    slack: float
    holds: bool
    tolerance: float
    conjecture: bool = False


@dataclass(frozen=True)
class BoundResult:
    """Upper estimate for eigenvalue k+1. ``bound`` is ``inf`` when the rule never binds."""

    rule: RuleId
    k: int
    bound: float
    method: BoundMethod
    residual: float
    delta: float | None = None


def validate_spectrum(values: Sequence[float]) -> list[float]:
    """Check that ``values`` is non-empty, strictly positive and non-decreasing.

    Out-of-order input is rejected rather than sorted.
    """
    out = [float(v) for v in values]
    if not out:
        raise ValidationError("EMPTY", "spectrum is empty")
    for i, v in enumerate(out):
        if not (v > 0 and math.isfinite(v)):
            raise ValidationError("NON_POSITIVE_VALUE", f"value {i} = {v} is not positive and finite")
    for i in range(1, len(out)):
        if out[i] < out[i - 1]:
            raise ValidationError("OUT_OF_ORDER", f"value {i} = {out[i]} < value {i - 1} = {out[i - 1]}")
    return out


def as_exponent(e) -> Fraction:
    """Exponents are carried exactly; ``(p, q)`` pairs and Fractions both work."""
    if isinstance(e, tuple):
        return Fraction(*e)
    return Fraction(e)


def gap_moment(values: Sequence[float], target: float, gap_power: int, value_exponent) -> float:
    """Sum of ``(target - v)**gap_power * v**value_exponent`` in ascending index order."""
    if gap_power not in (1, 2):
        raise ValidationError("BAD_GAP_POWER", f"gap_power must be 1 or 2, got {gap_power}")
    arr = np.asarray(values, dtype=np.float64)
    if arr.size and target < arr.max():
        raise ValidationError("TARGET_BELOW_MAX", f"target {target} below max value {arr.max()}")
    e = as_exponent(value_exponent)
    return kernels.gap_moment(arr, float(target), gap_power, e.numerator / e.denominator)
