"""Exact curvature-feasible steering primitives.

Dubins (forward-only) shortest paths are solved by circle-tangent
construction over the six word families; Reeds-Shepp shortest paths come
from the 48-word family built out of the base-word formulas under the
timeflip / reflect / backwards symmetries.  Every candidate is validated
by forward integration before it can win, so a wrong branch can only
lose, never corrupt the result.

Primitives are immutable segment lists ``(curvature, signed length)``;
negative length means reverse gear.  The stored end pose *is* the exact
forward integration of the segments, so endpoint closure is structural.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi

# curvature magnitudes below this are treated as straight lines
_STRAIGHT_EPS = 1e-12
# degenerate-query threshold: closer than this (and heading-aligned) is identity
_IDENTITY_EPS = 1e-12


def norm_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]; ties at -pi resolve to +pi."""
    a = math.remainder(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    return a


def mod2pi(a: float) -> float:
    """Wrap an angle to [0, 2*pi)."""
    r = math.fmod(a, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r >= TWO_PI:
        r = 0.0
    return r


class Segment(NamedTuple):
    curvature: float  # 1/m, 0 for straight
    length: float  # m, signed; negative = reverse gear


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.x, self.y, self.theta))):
            raise ValueError("pose components must be finite")
        object.__setattr__(self, "theta", norm_angle(self.theta))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)


def advance(x: float, y: float, theta: float, kappa: float, s: float):
    """Propagate a pose along a constant-curvature segment of signed length s."""
    if abs(kappa) < _STRAIGHT_EPS:
        return x + s * math.cos(theta), y + s * math.sin(theta), theta
    t1 = theta + kappa * s
    return (
        x + (math.sin(t1) - math.sin(theta)) / kappa,
        y - (math.cos(t1) - math.cos(theta)) / kappa,
        t1,
    )


def advance_many(x: float, y: float, theta: float, kappa: float, s):
    """Vectorized :func:`advance` over an array of signed arc lengths."""
    s = np.asarray(s, dtype=np.float64)
    if abs(kappa) < _STRAIGHT_EPS:
        return (
            x + s * math.cos(theta),
            y + s * math.sin(theta),
            np.full_like(s, theta),
        )
    t1 = theta + kappa * s
    return (
        x + (np.sin(t1) - math.sin(theta)) / kappa,
        y - (np.cos(t1) - math.cos(theta)) / kappa,
        t1,
    )


@dataclass(frozen=True)
class MotionPrimitive:
    """An exact constant-curvature-segment path with its integrated end pose."""

    kind: str  # dubins | reeds_shepp | bicycle_arc
    start: Pose
    segments: tuple[Segment, ...]
    end: Pose
    length: float  # total |arc length|

    @classmethod
    def build(cls, kind: str, start: Pose, segments) -> "MotionPrimitive":
        segs = tuple(Segment(float(k), float(l)) for k, l in segments if abs(l) > 1e-12)
        x, y, th = start.x, start.y, start.theta
        for k, l in segs:
            x, y, th = advance(x, y, th, k, l)
        length = math.fsum(abs(l) for _, l in segs)
        return cls(kind, start, segs, Pose(x, y, th), length)

    # -- geometry queries -------------------------------------------------

    def _segment_starts(self):
        poses = [(self.start.x, self.start.y, self.start.theta)]
        x, y, th = poses[0]
        for k, l in self.segments:
            x, y, th = advance(x, y, th, k, l)
            poses.append((x, y, th))
        return poses

    def pose_at(self, s: float) -> Pose:
        """Pose at traveled arc length s in [0, length]."""
        if s < -1e-9 or s > self.length + 1e-9:
            raise ValueError(f"arc length {s} outside [0, {self.length}]")
        s = min(max(s, 0.0), self.length)
        x, y, th = self.start.x, self.start.y, self.start.theta
        for k, l in self.segments:
            al = abs(l)
            if s <= al or al == 0.0:
                x, y, th = advance(x, y, th, k, math.copysign(s, l))
                return Pose(x, y, th)
            x, y, th = advance(x, y, th, k, l)
            s -= al
        return Pose(x, y, th)

    def poses_at(self, s):
        """Vectorized pose lookup; returns (xs, ys, thetas) arrays."""
        s = np.asarray(s, dtype=np.float64)
        xs = np.empty_like(s)
        ys = np.empty_like(s)
        ths = np.empty_like(s)
        if not self.segments:
            xs[:], ys[:], ths[:] = self.start.x, self.start.y, self.start.theta
            return xs, ys, ths
        starts = self._segment_starts()
        bounds = np.concatenate([[0.0], np.cumsum([abs(l) for _, l in self.segments])])
        idx = np.clip(np.searchsorted(bounds, s, side="right") - 1, 0, len(self.segments) - 1)
        for k_i, (k, l) in enumerate(self.segments):
            m = idx == k_i
            if not m.any():
                continue
            local = np.copysign(np.minimum(s[m] - bounds[k_i], abs(l)), l)
            x0, y0, th0 = starts[k_i]
            xs[m], ys[m], ths[m] = advance_many(x0, y0, th0, k, local)
        return xs, ys, ths

    def split(self, s: float):
        """Split at traveled arc length s; returns (prefix, suffix)."""
        if s < -1e-9 or s > self.length + 1e-9:
            raise ValueError(f"split point {s} outside [0, {self.length}]")
        s = min(max(s, 0.0), self.length)
        head, tail = [], []
        remaining = s
        for k, l in self.segments:
            al = abs(l)
            if remaining >= al:
                head.append((k, l))
                remaining -= al
            elif remaining > 0.0:
                head.append((k, math.copysign(remaining, l)))
                tail.append((k, math.copysign(al - remaining, l)))
                remaining = 0.0
            else:
                tail.append((k, l))
        prefix = MotionPrimitive.build(self.kind, self.start, head)
        suffix = MotionPrimitive.build(self.kind, prefix.end, tail)
        return prefix, suffix

    def truncated(self, s: float) -> "MotionPrimitive":
        if s >= self.length:
            return self
        return self.split(s)[0]

    def max_curvature(self) -> float:
        return max((abs(k) for k, _ in self.segments), default=0.0)

    def bounds(self) -> tuple[float, float, float, float]:
        """Exact axis-aligned bounding box (xmin, ymin, xmax, ymax) of the centerline."""
        xs = [self.start.x]
        ys = [self.start.y]
        x, y, th = self.start.x, self.start.y, self.start.theta
        for k, l in self.segments:
            x1, y1, th1 = advance(x, y, th, k, l)
            xs.append(x1)
            ys.append(y1)
            if abs(k) >= _STRAIGHT_EPS:
                r = 1.0 / abs(k)
                cx = x - math.sin(th) / k
                cy = y + math.cos(th) / k
                a0 = math.atan2(y - cy, x - cx)
                a1 = a0 + k * l  # position angle advances with heading
                lo, hi = min(a0, a1), max(a0, a1)
                for quarter, (ex, ey) in enumerate(((r, 0.0), (0.0, r), (-r, 0.0), (0.0, -r))):
                    ang = 0.5 * math.pi * quarter
                    n0 = math.ceil((lo - ang) / TWO_PI)
                    if ang + n0 * TWO_PI <= hi:
                        xs.append(cx + ex)
                        ys.append(cy + ey)
            x, y, th = x1, y1, th1
        return min(xs), min(ys), max(xs), max(ys)


# ---------------------------------------------------------------------------
# Dubins shortest path (circle-tangent construction)
# ---------------------------------------------------------------------------


def _turn_center(p: Pose, sense: int, r: float):
    return p.x - sense * r * math.sin(p.theta), p.y + sense * r * math.cos(p.theta)


def _csc_word(q0: Pose, q1: Pose, r: float, s1: int, s2: int):
    """Arc-straight-arc candidate; returns segment angles/lengths or None."""
    c1 = _turn_center(q0, s1, r)
    c2 = _turn_center(q1, s2, r)
    dx, dy = c2[0] - c1[0], c2[1] - c1[1]
    dist = math.hypot(dx, dy)
    if s1 == s2:
        if dist < 1e-14:
            # coincident circles: the word collapses to a single arc
            t = mod2pi(s1 * (q1.theta - q0.theta))
            return [(s1, t * r), (0, 0.0), (s1, 0.0)]
        psi = math.atan2(dy, dx)
        straight = dist
    else:
        if dist < 2.0 * r:
            return None
        straight = math.sqrt(dist * dist - 4.0 * r * r)
        psi = math.atan2(dy, dx) + s1 * math.atan2(2.0 * r, straight)
    t = mod2pi(s1 * (psi - q0.theta))
    q = mod2pi(s2 * (q1.theta - psi))
    return [(s1, t * r), (0, straight), (s2, q * r)]


def _ccc_words(q0: Pose, q1: Pose, r: float, s1: int):
    """Arc-arc-arc candidates (both middle-circle placements)."""
    c1 = _turn_center(q0, s1, r)
    c2 = _turn_center(q1, s1, r)
    dx, dy = c2[0] - c1[0], c2[1] - c1[1]
    dist = math.hypot(dx, dy)
    if dist > 4.0 * r:
        return []
    gamma = math.atan2(dy, dx)
    delta = math.acos(min(dist / (4.0 * r), 1.0))
    out = []
    for sgn in (1.0, -1.0):
        ang = gamma + sgn * delta
        cm = (c1[0] + 2.0 * r * math.cos(ang), c1[1] + 2.0 * r * math.sin(ang))
        pa = ((c1[0] + cm[0]) / 2.0, (c1[1] + cm[1]) / 2.0)
        pb = ((cm[0] + c2[0]) / 2.0, (cm[1] + c2[1]) / 2.0)
        a0 = math.atan2(q0.y - c1[1], q0.x - c1[0])
        aa = math.atan2(pa[1] - c1[1], pa[0] - c1[0])
        t = mod2pi(s1 * (aa - a0))
        ma = math.atan2(pa[1] - cm[1], pa[0] - cm[0])
        mb = math.atan2(pb[1] - cm[1], pb[0] - cm[0])
        u = mod2pi(-s1 * (mb - ma))
        b1 = math.atan2(q1.y - c2[1], q1.x - c2[0])
        ab = math.atan2(pb[1] - c2[1], pb[0] - c2[0])
        q = mod2pi(s1 * (b1 - ab))
        out.append([(s1, t * r), (-s1, u * r), (s1, q * r)])
    return out


def _endpoint_error(q0: Pose, segments, q1: Pose):
    x, y, th = q0.x, q0.y, q0.theta
    for k, l in segments:
        x, y, th = advance(x, y, th, k, l)
    return math.hypot(x - q1.x, y - q1.y), abs(norm_angle(th - q1.theta))


def _segments_with_curvature(raw, r: float):
    return [(sense / r if sense else 0.0, l) for sense, l in raw]


def dubins_shortest(q0: Pose, q1: Pose, r_min: float) -> MotionPrimitive:
    """Minimum-length forward-only bounded-curvature path from q0 to q1."""
    if not r_min > 0:
        raise ValueError("r_min must be positive")
    if (
        math.hypot(q1.x - q0.x, q1.y - q0.y) < _IDENTITY_EPS
        and abs(norm_angle(q1.theta - q0.theta)) < _IDENTITY_EPS
    ):
        return MotionPrimitive.build("dubins", q0, [])
    tol = 1e-8 * (1.0 + r_min + math.hypot(q1.x - q0.x, q1.y - q0.y))
    candidates = []
    for s1, s2 in ((1, 1), (-1, -1), (1, -1), (-1, 1)):
        raw = _csc_word(q0, q1, r_min, s1, s2)
        if raw is not None:
            candidates.append(raw)
    for s1 in (1, -1):
        candidates.extend(_ccc_words(q0, q1, r_min, s1))
    best = None
    best_len = math.inf
    for raw in candidates:
        segs = _segments_with_curvature(raw, r_min)
        pos_err, ang_err = _endpoint_error(q0, segs, q1)
        if pos_err > tol or ang_err > 1e-8:
            continue
        total = sum(abs(l) for _, l in segs)
        if total < best_len:
            best_len = total
            best = segs
    if best is None:  # pragma: no cover - Dubins paths exist for all pose pairs
        raise RuntimeError("no valid Dubins word survived endpoint validation")
    return MotionPrimitive.build("dubins", q0, best)


# ---------------------------------------------------------------------------
# Reeds-Shepp shortest path (48-word family)
# ---------------------------------------------------------------------------
# Base-word solvers work in the start frame with unit turning radius; the
# target is (x, y, phi).  Each returns (ok, t, u, v).  Words are tuples of
# (turn, gear, param_index) with params (t, u, v) and the fixed quarter
# turns of the CCSC/CCSCC families inserted where needed.


def _polar(x: float, y: float):
    return math.hypot(x, y), mod2pi(math.atan2(y, x))


def _rs_LpSpLp(x, y, phi):
    u, t = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if t <= math.pi:
        v = mod2pi(phi - t)
        if v <= math.pi:
            return True, t, u, v
    return False, 0.0, 0.0, 0.0


def _rs_LpSpRp(x, y, phi):
    u1, t1 = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    if u1 * u1 >= 4.0:
        u = math.sqrt(u1 * u1 - 4.0)
        t = mod2pi(t1 + math.atan2(2.0, u))
        v = mod2pi(t - phi)
        if t <= math.pi and v <= math.pi:
            return True, t, u, v
    return False, 0.0, 0.0, 0.0


def _rs_LpRmLp(x, y, phi):
    u1, t1 = _polar(-(x - math.sin(phi)), -(y - 1.0 + math.cos(phi)))
    if u1 <= 4.0:
        u = 2.0 * math.asin(0.25 * u1)
        t = mod2pi(t1 - 0.5 * u)
        v = mod2pi(phi - t - u)
        if t <= math.pi and u <= math.pi and v <= math.pi:
            return True, t, u, v
    return False, 0.0, 0.0, 0.0


def _rs_LpRmLm(x, y, phi):
    u1, t1 = _polar(-(x - math.sin(phi)), -(y - 1.0 + math.cos(phi)))
    if u1 <= 4.0:
        u = 2.0 * math.asin(0.25 * u1)
        t = mod2pi(t1 - 0.5 * u)
        v = mod2pi(t + u - phi)
        if t <= math.pi and u <= math.pi and v <= math.pi:
            return True, t, u, v
    return False, 0.0, 0.0, 0.0


def _rs_LpRupLumRm(x, y, phi):
    u1, t1 = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    if u1 <= 2.0:
        u = math.acos((u1 + 2.0) / 4.0)
        t = mod2pi(t1 + u + 0.5 * math.pi)
        v = mod2pi(phi + 2.0 * u - t)
        if t <= math.pi and v <= math.pi:
            return True, t, u, v
    return False, 0.0, 0.0, 0.0


def _rs_LpRumLumRp(x, y, phi):
    u1, t1 = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    u2 = 20.0 - u1 * u1
    if 0.0 <= u2 <= 16.0 and u1 > 1e-12:
        u = math.acos(u2 / 16.0)
        arg = 2.0 * math.sin(u) / u1
        if abs(arg) <= 1.0:
            t = mod2pi(t1 + math.asin(arg) + 0.5 * math.pi)
            v = mod2pi(t - phi)
            if t <= math.pi and v <= math.pi:
                return True, t, u, v
    return False, 0.0, 0.0, 0.0


def _rs_LpRmSmRm(x, y, phi):
    u1, t1 = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    if u1 >= 2.0:
        u = u1 - 2.0
        t = mod2pi(t1 + 0.5 * math.pi)
        v = mod2pi(phi - t - 0.5 * math.pi)
        if t <= math.pi and v <= math.pi:
            return True, t, u, v
    return False, 0.0, 0.0, 0.0


def _rs_LpRmSmLm(x, y, phi):
    u1, t1 = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if u1 >= 2.0 * math.sqrt(2.0):
        u = math.sqrt(u1 * u1 - 4.0) - 2.0
        t = mod2pi(t1 + math.atan2(2.0, u + 2.0) + 0.5 * math.pi)
        v = mod2pi(t - phi + 0.5 * math.pi)
        if t <= math.pi and v <= math.pi:
            return True, t, u, v
    return False, 0.0, 0.0, 0.0


def _rs_LpRmSmLmRp(x, y, phi):
    u1, t1 = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    if u1 >= 2.0 * math.sqrt(5.0):
        u = math.sqrt(u1 * u1 - 4.0) - 4.0
        t = mod2pi(t1 + math.atan2(2.0, u + 4.0) + 0.5 * math.pi)
        v = mod2pi(t - phi)
        if t <= math.pi and v <= math.pi:
            return True, t, u, v
    return False, 0.0, 0.0, 0.0


# word templates: (turn, gear, param) with param in {0,1,2} indexing (t,u,v)
# and param = "q" marking the fixed pi/2 arcs
_L, _S, _R = "L", "S", "R"

_RS_BASES = [
    # (solver, word, param layout)
    (_rs_LpSpLp, ((_L, 1, 0), (_S, 1, 1), (_L, 1, 2))),
    (_rs_LpSpRp, ((_L, 1, 0), (_S, 1, 1), (_R, 1, 2))),
    (_rs_LpRmLp, ((_L, 1, 0), (_R, -1, 1), (_L, 1, 2))),
    (_rs_LpRmLm, ((_L, 1, 0), (_R, -1, 1), (_L, -1, 2))),
    (_rs_LpRupLumRm, ((_L, 1, 0), (_R, 1, 1), (_L, -1, 1), (_R, -1, 2))),
    (_rs_LpRumLumRp, ((_L, 1, 0), (_R, -1, 1), (_L, -1, 1), (_R, 1, 2))),
    (_rs_LpRmSmRm, ((_L, 1, 0), (_R, -1, "q"), (_S, -1, 1), (_R, -1, 2))),
    (_rs_LpRmSmLm, ((_L, 1, 0), (_R, -1, "q"), (_S, -1, 1), (_L, -1, 2))),
    (_rs_LpRmSmLmRp, ((_L, 1, 0), (_R, -1, "q"), (_S, -1, 1), (_L, -1, "q"), (_R, 1, 2))),
]
# base words also enumerated in reversed segment order (the "backwards"
# symmetry); CSCC arises from CCSC this way, and the CCC family needs it too
_RS_BACKWARDS_BASES = {"_rs_LpRmLm", "_rs_LpRmSmRm", "_rs_LpRmSmLm"}


def _rs_word_segments(word, params, gear_flip: bool, mirror: bool, backwards: bool):
    """Expand a word template into (sense, signed normalized length) pairs."""
    segs = []
    for turn, gear, pidx in word:
        mag = 0.5 * math.pi if pidx == "q" else params[pidx]
        g = -gear if gear_flip else gear
        if turn == _S:
            segs.append((0, g * mag))
        else:
            sense = 1 if turn == _L else -1
            if mirror:
                sense = -sense
            segs.append((sense, g * mag))
    if backwards:
        segs.reverse()
    return segs


def _rs_candidates(x: float, y: float, phi: float):
    """All validated normalized Reeds-Shepp candidates for target (x, y, phi)."""
    out = []
    variants = (
        # (solver input transform, gear_flip, mirror)
        (lambda: (x, y, phi), False, False),
        (lambda: (-x, y, -phi), True, False),
        (lambda: (x, -y, -phi), False, True),
        (lambda: (-x, -y, phi), True, True),
    )
    xb = x * math.cos(phi) + y * math.sin(phi)
    yb = x * math.sin(phi) - y * math.cos(phi)
    variants_back = (
        (lambda: (xb, yb, phi), False, False),
        (lambda: (-xb, yb, -phi), True, False),
        (lambda: (xb, -yb, -phi), False, True),
        (lambda: (-xb, -yb, phi), True, True),
    )
    for solver, word in _RS_BASES:
        for args, flip, mirror in variants:
            ok, t, u, v = solver(*args())
            if ok:
                out.append(_rs_word_segments(word, (t, u, v), flip, mirror, False))
        if solver.__name__ in _RS_BACKWARDS_BASES:
            for args, flip, mirror in variants_back:
                ok, t, u, v = solver(*args())
                if ok:
                    out.append(_rs_word_segments(word, (t, u, v), flip, mirror, True))
    return out


def reeds_shepp_shortest(q0: Pose, q1: Pose, r_min: float) -> MotionPrimitive:
    """Minimum-length bounded-curvature path allowing reverse gear."""
    if not r_min > 0:
        raise ValueError("r_min must be positive")
    dx = q1.x - q0.x
    dy = q1.y - q0.y
    if math.hypot(dx, dy) < _IDENTITY_EPS and abs(norm_angle(q1.theta - q0.theta)) < _IDENTITY_EPS:
        return MotionPrimitive.build("reeds_shepp", q0, [])
    c, s = math.cos(q0.theta), math.sin(q0.theta)
    x = (c * dx + s * dy) / r_min
    y = (-s * dx + c * dy) / r_min
    phi = norm_angle(q1.theta - q0.theta)
    best = None
    best_len = math.inf
    origin = Pose(0.0, 0.0, 0.0)
    target = Pose(x, y, phi)
    for raw in _rs_candidates(x, y, phi):
        segs = _segments_with_curvature(raw, 1.0)
        pos_err, ang_err = _endpoint_error(origin, segs, target)
        if pos_err > 1e-8 * (1.0 + math.hypot(x, y)) or ang_err > 1e-8:
            continue
        total = sum(abs(l) for _, l in segs)
        if total < best_len:
            best_len = total
            best = raw
    if best is None:
        raise RuntimeError(
            f"no valid Reeds-Shepp word survived endpoint validation for {(x, y, phi)}"
        )
    world = [(sense / r_min if sense else 0.0, l * r_min) for sense, l in best]
    return MotionPrimitive.build("reeds_shepp", q0, world)


# ---------------------------------------------------------------------------
# Bicycle-model arcs
# ---------------------------------------------------------------------------


def bicycle_arc(
    q0: Pose,
    v: float,
    phi: float,
    duration: float,
    wheelbase: float,
    phi_max: float,
) -> MotionPrimitive:
    """Constant-control bicycle-model arc (exact, no ODE integration needed)."""
    if not duration > 0:
        raise ValueError("duration must be positive")
    if not wheelbase > 0:
        raise ValueError("wheelbase must be positive")
    if abs(phi) > phi_max + 1e-12:
        raise ValueError(f"steering angle {phi} exceeds limit {phi_max}")
    kappa = math.tan(phi) / wheelbase
    return MotionPrimitive.build("bicycle_arc", q0, [(kappa, v * duration)])


# ---------------------------------------------------------------------------
# Sampling and footprints
# ---------------------------------------------------------------------------


def sample_path(p: MotionPrimitive, ds: float) -> list[Pose]:
    """Poses at arc-length steps ds, always including both endpoints."""
    if not ds > 0:
        raise ValueError("ds must be positive")
    if p.length <= 0.0:
        return [p.start]
    s = np.arange(0.0, p.length, ds)
    if p.length - s[-1] > 1e-12:
        s = np.append(s, p.length)
    else:
        s[-1] = p.length
    xs, ys, ths = p.poses_at(s)
    return [Pose(float(x), float(y), float(t)) for x, y, t in zip(xs, ys, ths)]


def _supercover_cells(x0, y0, x1, y1, cell_size, origin, out: set):
    """Grid cells crossed by the segment (x0,y0)-(x1,y1), corner-robust."""
    inv = 1.0 / cell_size
    fx0 = (x0 - origin[0]) * inv + 0.5
    fy0 = (y0 - origin[1]) * inv + 0.5
    fx1 = (x1 - origin[0]) * inv + 0.5
    fy1 = (y1 - origin[1]) * inv + 0.5
    j, i = math.floor(fx0), math.floor(fy0)
    j1, i1 = math.floor(fx1), math.floor(fy1)
    out.add((i, j))
    dx = fx1 - fx0
    dy = fy1 - fy0
    step_j = 1 if dx > 0 else -1
    step_i = 1 if dy > 0 else -1
    t_max_x = math.inf if dx == 0 else ((j + (step_j > 0)) - fx0) / dx
    t_max_y = math.inf if dy == 0 else ((i + (step_i > 0)) - fy0) / dy
    t_dx = math.inf if dx == 0 else abs(1.0 / dx)
    t_dy = math.inf if dy == 0 else abs(1.0 / dy)
    guard = 4 * (abs(j1 - j) + abs(i1 - i) + 2)
    while (j != j1 or i != i1) and guard > 0:
        guard -= 1
        if abs(t_max_x - t_max_y) < 1e-12:
            # exact corner crossing: take both adjacent cells
            out.add((i, j + step_j))
            out.add((i + step_i, j))
            j += step_j
            i += step_i
            t_max_x += t_dx
            t_max_y += t_dy
        elif t_max_x < t_max_y:
            j += step_j
            t_max_x += t_dx
        else:
            i += step_i
            t_max_y += t_dy
        out.add((i, j))


def footprint_cells(
    p: MotionPrimitive,
    width: float,
    cell_size: float,
    origin=(0.0, 0.0),
) -> set[tuple[int, int]]:
    """Cells swept by a width-``width`` band along the primitive centerline.

    A cell is occupied iff its center lies within width/2 of the sampled
    centerline (capsules between samples at ds <= cell_size/2), with the
    supercover of the centerline added so that every cell the centerline
    passes through is included.
    """
    if not width > 0 or not cell_size > 0:
        raise ValueError("width and cell_size must be positive")
    ds = 0.5 * cell_size
    if p.length <= 0.0:
        pts = np.array([[p.start.x, p.start.y]])
    else:
        poses = sample_path(p, ds)
        pts = np.array([[q.x, q.y] for q in poses])
    half = 0.5 * width
    cells: set[tuple[int, int]] = set()
    # supercover of the chord polyline
    for a, b in zip(pts[:-1], pts[1:]):
        _supercover_cells(a[0], a[1], b[0], b[1], cell_size, origin, cells)
    if len(pts) == 1:
        i, j = int(round((pts[0, 1] - origin[1]) / cell_size)), int(
            round((pts[0, 0] - origin[0]) / cell_size)
        )
        cells.add((i, j))
    # capsule stamping: candidate cells from the inflated bbox
    pad = half + cell_size
    j_lo = math.floor((pts[:, 0].min() - pad - origin[0]) / cell_size + 0.5)
    j_hi = math.floor((pts[:, 0].max() + pad - origin[0]) / cell_size + 0.5)
    i_lo = math.floor((pts[:, 1].min() - pad - origin[1]) / cell_size + 0.5)
    i_hi = math.floor((pts[:, 1].max() + pad - origin[1]) / cell_size + 0.5)
    jj, ii = np.meshgrid(np.arange(j_lo, j_hi + 1), np.arange(i_lo, i_hi + 1))
    cx = origin[0] + jj.ravel() * cell_size
    cy = origin[1] + ii.ravel() * cell_size
    centers = np.stack([cx, cy], axis=1)
    dmin = np.full(len(centers), np.inf)
    if len(pts) == 1:
        dmin = np.hypot(centers[:, 0] - pts[0, 0], centers[:, 1] - pts[0, 1])
    else:
        a = pts[:-1]
        ab = pts[1:] - a
        ab_sq = np.maximum((ab * ab).sum(axis=1), 1e-300)
        # chunk over chords to bound memory
        step = max(1, int(5e6 / max(len(centers), 1)))
        for k0 in range(0, len(a), step):
            a_k = a[k0 : k0 + step]
            ab_k = ab[k0 : k0 + step]
            sq_k = ab_sq[k0 : k0 + step]
            diff = centers[:, None, :] - a_k[None, :, :]
            t = np.clip((diff * ab_k[None, :, :]).sum(-1) / sq_k[None, :], 0.0, 1.0)
            proj = a_k[None, :, :] + t[..., None] * ab_k[None, :, :]
            d = np.hypot(centers[:, None, 0] - proj[..., 0], centers[:, None, 1] - proj[..., 1])
            dmin = np.minimum(dmin, d.min(axis=1))
    hit = dmin <= half + 1e-12
    for i, j in zip(ii.ravel()[hit], jj.ravel()[hit]):
        cells.add((int(i), int(j)))
    return cells


def export_path_csv(path, p: MotionPrimitive, ds: float = 0.05) -> None:
    """Write a sampled path as CSV with header ``s,x,y,theta``."""
    poses = sample_path(p, ds)
    if p.length <= 0.0:
        s_vals = [0.0]
    else:
        s = np.arange(0.0, p.length, ds)
        if p.length - s[-1] > 1e-12:
            s = np.append(s, p.length)
        else:
            s[-1] = p.length
        s_vals = [float(v) for v in s]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "x", "y", "theta"])
        for s_i, q in zip(s_vals, poses):
            writer.writerow([f"{s_i:.9g}", f"{q.x:.12g}", f"{q.y:.12g}", f"{q.theta:.12g}"])


def read_path_csv(path) -> list[tuple[float, Pose]]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rows.append(
                (float(row["s"]), Pose(float(row["x"]), float(row["y"]), float(row["theta"])))
            )
    return rows
