from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

LOGGER = logging.getLogger(__name__)

# relative slack under which balls meeting at a collision time count as touching
COLLISION_SLACK = 1e-12


class BallError(ValueError):
    pass


class EmptyFamily(BallError):
    pass


class NonpositiveGeometry(BallError):
    pass


@dataclass(frozen=True, slots=True)
class Ball:
    center: Tuple[float, float]
    radius: float

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise BallError(f"Ball radius must be >= 0, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def distance_to(self, other: "Ball") -> float:
        return math.hypot(self.center[0] - other.center[0], self.center[1] - other.center[1])

    def gap(self, other: "Ball") -> float:
        """Distance between the closed balls, negative when they overlap."""
        return self.distance_to(other) - self.radius - other.radius

    def intersects(self, other: "Ball", slack: float = 0.0) -> bool:
        return self.gap(other) <= slack * max(1.0, self.radius + other.radius)

    def contains(self, other: "Ball", tol: float = 1e-9) -> bool:
        return self.distance_to(other) + other.radius <= self.radius + tol * max(1.0, self.radius)

    def grown(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)


@dataclass(frozen=True)
class BallFamily:
    balls: Tuple[Ball, ...]

    @classmethod
    def of(cls, items: Iterable[Sequence[float]]) -> "BallFamily":
        return cls(tuple(Ball((float(x), float(y)), float(r)) for x, y, r in items))

    def __len__(self) -> int:
        return len(self.balls)

    def __iter__(self):
        return iter(self.balls)

    @property
    def total_diameter(self) -> float:
        return math.fsum(ball.diameter for ball in self.balls)

    def is_disjoint(self, slack: float = 0.0) -> bool:
        balls = self.balls
        return not any(
            balls[i].intersects(balls[j], -slack)
            for i in range(len(balls))
            for j in range(i + 1, len(balls))
        )

    def grown(self, factor: float) -> "BallFamily":
        return BallFamily(tuple(ball.grown(factor) for ball in self.balls))


def _merge_pair(first: Ball, second: Ball) -> Ball:
    total = first.radius + second.radius
    if total == 0.0:
        return Ball(first.center, 0.0)
    x = (first.radius * first.center[0] + second.radius * second.center[0]) / total
    y = (first.radius * first.center[1] + second.radius * second.center[1]) / total
    return Ball((x, y), total)


def _merge(balls: List[Ball], slack: float) -> Tuple[List[Ball], int]:
    merges = 0
    while True:
        best: Optional[Tuple[float, int, int]] = None
        for i in range(len(balls)):
            for j in range(i + 1, len(balls)):
                if not balls[i].intersects(balls[j], slack):
                    continue
                candidate = (balls[i].distance_to(balls[j]), i, j)
                if best is None or candidate < best:
                    best = candidate
        if best is None:
            return balls, merges
        _, i, j = best
        merged = _merge_pair(balls[i], balls[j])
        balls = [ball for idx, ball in enumerate(balls) if idx not in (i, j)]
        balls.insert(i, merged)
        merges += 1


def merge_balls(family: BallFamily) -> BallFamily:
    """Merge overlapping closed balls until the family is pairwise disjoint.

    The overlapping pair with the closest centres goes first, ties broken by
    index. Each merge replaces two balls by one containing both with the
    summed radius, so the total diameter is unchanged.
    """
    if not family.balls:
        raise EmptyFamily("Cannot merge an empty family of balls")
    merged, _ = _merge(list(family.balls), 0.0)
    return BallFamily(tuple(merged))


@dataclass(frozen=True, slots=True)
class GrowthInterval:
    t_start: float
    t_end: float
    family: BallFamily

    def at(self, t: float) -> BallFamily:
        if not self.t_start - 1e-15 <= t <= self.t_end + 1e-15:
            raise BallError(f"t={t} outside [{self.t_start}, {self.t_end}]")
        return self.family.grown(math.exp(t - self.t_start))


@dataclass(frozen=True)
class GrowthTrace:
    intervals: Tuple[GrowthInterval, ...]
    merge_times: Tuple[float, ...] = field(default_factory=tuple)
    initial_diameter: float = 0.0

    @property
    def t_max(self) -> float:
        return self.intervals[-1].t_end

    def interval_at(self, t: float) -> GrowthInterval:
        for interval in reversed(self.intervals):
            if interval.t_start <= t:
                return interval
        return self.intervals[0]

    def at(self, t: float) -> BallFamily:
        return self.interval_at(t).at(t)


def _first_collision(family: BallFamily) -> Optional[float]:
    best: Optional[float] = None
    balls = family.balls
    for i in range(len(balls)):
        for j in range(i + 1, len(balls)):
            total = balls[i].radius + balls[j].radius
            if total <= 0.0:
                continue
            # |a − a′| = (r + r′)·e^s
            s = math.log(balls[i].distance_to(balls[j]) / total)
            if best is None or s < best:
                best = s
    return best


def growth_process(family: BallFamily, t_max: float) -> GrowthTrace:
    if not family.balls:
        raise EmptyFamily("Cannot grow an empty family of balls")
    if t_max < 0:
        raise BallError("t_max must be >= 0")
    initial = family.total_diameter
    current, merges = _merge(list(family.balls), 0.0)
    merge_times: List[float] = [0.0] * merges
    intervals: List[GrowthInterval] = []
    t = 0.0
    while True:
        start_family = BallFamily(tuple(current))
        delay = _first_collision(start_family)
        if delay is None or t + delay >= t_max:
            intervals.append(GrowthInterval(t, t_max, start_family))
            break
        t_next = t + max(delay, 0.0)
        intervals.append(GrowthInterval(t, t_next, start_family))
        grown = start_family.grown(math.exp(t_next - t)).balls
        current, merges = _merge(list(grown), COLLISION_SLACK)
        if merges == 0:  # pragma: no cover - analytic collision always merges
            raise BallError("Collision time computed but no merge happened")
        merge_times.extend([t_next] * merges)
        LOGGER.debug("Merged %s ball(s) at t=%.6g, %s remain", merges, t_next, len(current))
        t = t_next
    return GrowthTrace(tuple(intervals), tuple(merge_times), initial)


def sample_trace(trace: GrowthTrace, samples_per_interval: int = 32) -> List[Tuple[float, int, float, float, float]]:
    """Rows (t, ball index, cx, cy, r) sampled uniformly within each interval."""
    rows: List[Tuple[float, int, float, float, float]] = []
    for interval in trace.intervals:
        times = np.linspace(interval.t_start, interval.t_end, samples_per_interval)
        for t in times:
            for idx, ball in enumerate(interval.at(float(t)).balls):
                rows.append((float(t), idx, ball.center[0], ball.center[1], ball.radius))
    return rows


def content_upper_bound(family: BallFamily) -> float:
    """Upper bound for the one-dimensional Hausdorff content of the union."""
    return merge_balls(family).total_diameter


def dirichlet_lower_bound(esg: float, dist_to_boundary: float, content: float) -> float:
    if esg < 0:
        raise NonpositiveGeometry("Singular energy must be >= 0")
    if dist_to_boundary <= 0 or content <= 0:
        raise NonpositiveGeometry("Distance to the boundary and content must be positive")
    if esg == 0:
        return 0.0
    return esg * math.log(dist_to_boundary / (2.0 * content))
