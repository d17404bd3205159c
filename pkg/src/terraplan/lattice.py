"""The shared curvature-feasible state lattice.

Vertices are (cell, heading-bin) states; edges are exact motion primitives
solved once per (start-bin, cell-offset, end-bin) template and translated
at query time.  Terrain-integrated weights and footprint admissibility are
evaluated in one vectorized pass per vertex from precomputed per-template
sampling plans, and cached so the same edge always yields the identical
weight for a given stack version.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import EdgeEvaluationError
from .raster import in_bounds
from .steering import (
    TWO_PI,
    MotionPrimitive,
    Pose,
    bicycle_arc,
    dubins_shortest,
    footprint_cells,
    norm_angle,
    reeds_shepp_shortest,
)
from .terrain import CostConfig, TerrainStack, VehicleParams, _quadrature_nodes, attitude_costs


def quantize_heading(theta: float, bins: int) -> int:
    """Heading-bin index: round(theta * H / 2pi) mod H."""
    if bins < 4:
        raise ValueError("heading quantization needs at least 4 bins")
    return int(round(theta * bins / TWO_PI)) % bins


def bin_center(b: int, bins: int) -> float:
    return norm_angle(TWO_PI * b / bins)


@dataclass(frozen=True)
class LatticeState:
    """(x, y, heading-bin, speed, drive mode) planning state.

    x, y are cell-center coordinates for lattice vertices; VD-RRT* keeps
    continuous poses and only uses the lattice for cost and admissibility.
    """

    x: float
    y: float
    theta_bin: int
    v: float = 1.0
    sigma: str = "diff"

    def pose(self, bins: int) -> Pose:
        return Pose(self.x, self.y, bin_center(self.theta_bin, bins))


@dataclass(frozen=True)
class LatticeEdge:
    from_state: LatticeState
    to_state: LatticeState
    primitive: MotionPrimitive
    weight: float


# 16-offset neighborhood: king moves plus knight-like moves, radius <= 3 cells
_NEIGHBOR_OFFSETS = (
    (1, 0), (2, 1), (1, 1), (1, 2), (0, 1), (-1, 2), (-1, 1), (-2, 1),
    (-1, 0), (-2, -1), (-1, -1), (-1, -2), (0, -1), (1, -2), (1, -1), (2, -1),
)


@dataclass
class MotionTemplate:
    """One solved primitive template plus its translated sampling plans."""

    start_bin: int
    dci: int  # cell offset, rows (y)
    dcj: int  # cell offset, cols (x)
    end_bin: int
    primitive: MotionPrimitive  # anchored at cell (0, 0) with origin (0, 0)
    # quadrature plan, relative to the start cell center (filled by _compile_plans)
    node_w: np.ndarray = None  # (K,) Gauss-Legendre weights * jacobians
    node_cells: np.ndarray = None  # (4, 2, K) bilinear stencil cell offsets
    node_wts: np.ndarray = None  # (4, K) bilinear stencil weights
    corner_cells: np.ndarray = None  # (16, 2, K) contact-corner stencil offsets
    corner_wts: np.ndarray = None  # (16, K)
    foot: np.ndarray = None  # (F, 2) admissibility footprint cell offsets (di, dj)
    support: frozenset = None  # all (di, dj) whose raster value can touch this edge
    bbox: tuple = None  # (di_lo, di_hi, dj_lo, dj_hi) over support cells


def _bilinear_stencil(dx, dy, cell_size):
    """Fixed bilinear stencil (cell offsets + weights) for points relative to a
    cell center; valid for any integer-cell translation."""
    u = np.asarray(dx, dtype=np.float64) / cell_size
    v = np.asarray(dy, dtype=np.float64) / cell_size
    j0 = np.floor(u).astype(np.int64)
    i0 = np.floor(v).astype(np.int64)
    fu = u - j0
    fv = v - i0
    cells = np.stack(
        [
            np.stack([i0, j0]),
            np.stack([i0, j0 + 1]),
            np.stack([i0 + 1, j0]),
            np.stack([i0 + 1, j0 + 1]),
        ]
    )  # (4, 2, K)
    wts = np.stack([(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv])
    return cells, wts


# motion sets and per-shape plans are pure functions of their parameters;
# memoized so the 50-lattice test batteries pay the solve cost once
_MOTION_SET_CACHE: dict = {}
_PLAN_CACHE: dict = {}


class Lattice:
    """Stateless cost/admissibility view over an immutable TerrainStack.

    The lattice owns the motion-set templates and an edge-weight cache; the
    stack reference is swapped (never mutated) when the map changes, and
    caches touching the delta are dropped so re-evaluation sees the new
    version.
    """

    def __init__(
        self,
        stack: TerrainStack,
        veh: VehicleParams,
        *,
        heading_bins: int = 16,
        sigma: str = "diff",
        primitive_family: str = "reeds_shepp",
        fail_safe: bool = True,
        cruise_speed: float = 1.0,
        cone_half_angle: float = math.radians(67.5),
        ack_fan: int = 7,
        ack_arc_cells: float = 1.5,
    ):
        if sigma not in ("diff", "ack"):
            raise ValueError("sigma must be 'diff' or 'ack'")
        if primitive_family not in ("reeds_shepp", "dubins"):
            raise ValueError("primitive_family must be 'reeds_shepp' or 'dubins'")
        if ack_fan < 3 or ack_fan % 2 == 0:
            raise ValueError("ack_fan must be odd and >= 3")
        self.stack = stack
        self.veh = veh
        self.cfg = stack.cfg
        self.bins = heading_bins
        self.sigma = sigma
        self.family = primitive_family
        self.fail_safe = fail_safe
        self.cruise_speed = cruise_speed
        self.cone = cone_half_angle
        self.ack_fan = ack_fan
        self.ack_arc_cells = ack_arc_cells
        self.ny, self.nx = stack.shape
        key = (
            round(stack.cell_size, 12), heading_bins, sigma, primitive_family,
            cruise_speed, round(cone_half_angle, 12), ack_fan, ack_arc_cells,
            veh.min_turn_radius, veh.max_steer, veh.wheelbase, veh.body_width,
            bool(self.cfg.lambda_att),
        )
        cached = _MOTION_SET_CACHE.get(key)
        if cached is None:
            self._templates_by_bin = [[] for _ in range(heading_bins)]
            self._build_templates()
            self._compile_templates()
            _MOTION_SET_CACHE[key] = self._templates_by_bin
        else:
            self._templates_by_bin = cached
        self._pred_by_bin = [[] for _ in range(heading_bins)]
        for b in range(heading_bins):
            for t in self._templates_by_bin[b]:
                self._pred_by_bin[t.end_bin].append(t)
        plan_key = (key, self.nx)
        plans = _PLAN_CACHE.get(plan_key)
        if plans is None:
            plans = self._compile_plans()
            _PLAN_CACHE[plan_key] = plans
        self._plans = plans
        self._support_union = sorted(
            {off for b in range(self.bins) for t in self._templates_by_bin[b] for off in t.support}
        )
        # weight caches (vertex id -> tuple of (to_vid, weight, template index))
        self._succ_cache: dict[int, tuple] = {}
        self._cells_with_cache: dict[int, set] = {}  # cell_flat -> set of bins
        self._clearance_cells: np.ndarray | None = None
        self._flat3_cache: np.ndarray | None = None

    def _flat3(self) -> np.ndarray:
        """Stacked [edge-combo | heights | admissibility] flat raster."""
        if self._flat3_cache is None:
            stack = self.stack
            self._flat3_cache = np.concatenate(
                [
                    stack._edge_combo.ravel(),
                    stack.dem.heights.ravel(),
                    stack.admissibility(self.fail_safe).ravel(),
                ]
            )
        return self._flat3_cache

    # -- vertex ids ---------------------------------------------------------

    def vid(self, i: int, j: int, b: int) -> int:
        return (i * self.nx + j) * self.bins + b

    def vid_of_pose(self, pose: Pose) -> int:
        j = int(round((pose.x - self.stack.origin[0]) / self.stack.cell_size))
        i = int(round((pose.y - self.stack.origin[1]) / self.stack.cell_size))
        if not (0 <= i < self.ny and 0 <= j < self.nx):
            raise EdgeEvaluationError(f"pose {pose} outside the raster")
        return self.vid(i, j, quantize_heading(pose.theta, self.bins))

    def unpack(self, vid: int):
        b = vid % self.bins
        cell = vid // self.bins
        return cell // self.nx, cell % self.nx, b

    def state_of(self, vid: int) -> LatticeState:
        i, j, b = self.unpack(vid)
        ox, oy = self.stack.origin
        return LatticeState(
            ox + j * self.stack.cell_size,
            oy + i * self.stack.cell_size,
            b,
            self.cruise_speed,
            self.sigma,
        )

    def pose_of(self, vid: int) -> Pose:
        s = self.state_of(vid)
        return Pose(s.x, s.y, bin_center(s.theta_bin, self.bins))

    # -- template construction ---------------------------------------------

    def _solve_template(self, b: int, target: Pose):
        start = Pose(0.0, 0.0, bin_center(b, self.bins))
        if self.family == "dubins":
            return dubins_shortest(start, target, self.veh.min_turn_radius)
        return reeds_shepp_shortest(start, target, self.veh.min_turn_radius)

    def _build_templates(self):
        delta = self.stack.cell_size
        seen: set[tuple] = set()

        def add(b, dci, dcj, eb, prim):
            key = (b, dci, dcj, eb)
            if key in seen or prim.length <= 1e-9:
                return
            seen.add(key)
            self._templates_by_bin[b].append(MotionTemplate(b, dci, dcj, eb, prim))

        if self.sigma == "diff":
            for b in range(self.bins):
                th = bin_center(b, self.bins)
                for dcj, dci in _NEIGHBOR_OFFSETS:
                    ang = math.atan2(dci, dcj)
                    fwd = abs(norm_angle(ang - th)) <= self.cone + 1e-12
                    rev = (
                        self.family == "reeds_shepp"
                        and abs(norm_angle(ang - th - math.pi)) <= self.cone + 1e-12
                    )
                    if fwd:
                        eb = quantize_heading(ang, self.bins)
                        prim = self._solve_template(
                            b, Pose(dcj * delta, dci * delta, bin_center(eb, self.bins))
                        )
                        add(b, dci, dcj, eb, prim)
                    if rev:
                        eb = quantize_heading(ang + math.pi, self.bins)
                        prim = self._solve_template(
                            b, Pose(dcj * delta, dci * delta, bin_center(eb, self.bins))
                        )
                        add(b, dci, dcj, eb, prim)
                # heading wiggles along the best forward cell
                dcj = int(round(math.cos(th)))
                dci = int(round(math.sin(th)))
                for eb in ((b - 1) % self.bins, (b + 1) % self.bins):
                    prim = self._solve_template(
                        b, Pose(dcj * delta, dci * delta, bin_center(eb, self.bins))
                    )
                    add(b, dci, dcj, eb, prim)
        else:
            duration = self.ack_arc_cells * delta / self.cruise_speed
            for b in range(self.bins):
                start = Pose(0.0, 0.0, bin_center(b, self.bins))
                for phi in np.linspace(-self.veh.max_steer, self.veh.max_steer, self.ack_fan):
                    prim = bicycle_arc(
                        start, self.cruise_speed, float(phi), duration,
                        self.veh.wheelbase, self.veh.max_steer,
                    )
                    dcj = int(round(prim.end.x / delta))
                    dci = int(round(prim.end.y / delta))
                    eb = quantize_heading(prim.end.theta, self.bins)
                    if (dci, dcj) == (0, 0) and eb == b:
                        continue
                    add(b, dci, dcj, eb, prim)

    def _compile_templates(self):
        """Per-template sampling plans in shape-independent (di, dj) form."""
        delta = self.stack.cell_size
        veh = self.veh
        hl, hw = 0.5 * veh.wheelbase, 0.5 * veh.body_width
        corners_local = ((hl, hw), (hl, -hw), (-hl, hw), (-hl, -hw))
        for b in range(self.bins):
            for t in self._templates_by_bin[b]:
                # chunks split at bilinear knots keep the integrand smooth, so
                # the chunk-size cap can stay loose
                s_vals, w = _quadrature_nodes(t.primitive, delta, (0.0, 0.0), 2.0 * delta)
                xs, ys, ths = t.primitive.poses_at(s_vals)
                cells, wts = _bilinear_stencil(xs, ys, delta)
                cos_t, sin_t = np.cos(ths), np.sin(ths)
                c_cells = []
                c_wts = []
                if self.cfg.lambda_att:
                    for du, dv in corners_local:
                        qx = xs + du * cos_t - dv * sin_t
                        qy = ys + du * sin_t + dv * cos_t
                        cc, cw = _bilinear_stencil(qx, qy, delta)
                        c_cells.append(cc)
                        c_wts.append(cw)
                    corner_cells = np.concatenate(c_cells)  # (16, 2, K)
                    corner_wts = np.concatenate(c_wts)
                else:
                    corner_cells = np.zeros((0, 2, len(s_vals)), dtype=np.int64)
                    corner_wts = np.zeros((0, len(s_vals)))
                foot = np.array(
                    sorted(footprint_cells(t.primitive, veh.body_width, delta)),
                    dtype=np.int64,
                )
                support = set(map(tuple, foot))
                for arr in (cells, corner_cells):
                    flat = arr.transpose(0, 2, 1).reshape(-1, 2)
                    support.update((int(a), int(c)) for a, c in flat)
                sup = np.array(sorted(support), dtype=np.int64)
                t.node_w = w
                t.node_cells = cells
                t.node_wts = wts
                t.corner_cells = corner_cells
                t.corner_wts = corner_wts
                t.foot = foot
                t.support = frozenset(support)
                t.bbox = (
                    int(sup[:, 0].min()),
                    int(sup[:, 0].max()),
                    int(sup[:, 1].min()),
                    int(sup[:, 1].max()),
                )

    def _compile_plans(self):
        """Per-bin concatenated gather plans for this raster shape.

        Raster indices address the stacked [combo | heights | admissibility]
        flat array, so one fancy-index per vertex expansion fetches every
        value the whole successor batch needs.
        """
        nx = self.nx
        n_flat = self.ny * self.nx
        plans = []
        for b in range(self.bins):
            ts = self._templates_by_bin[b]
            if not ts:
                plans.append(None)
                continue
            node_off = np.concatenate(
                [t.node_cells[:, 0, :] * nx + t.node_cells[:, 1, :] for t in ts], axis=1
            )
            node_wts = np.concatenate([t.node_wts for t in ts], axis=1)
            k_tot = node_off.shape[1]
            if self.cfg.lambda_att:
                corner_off = np.concatenate(
                    [t.corner_cells[:, 0, :] * nx + t.corner_cells[:, 1, :] for t in ts], axis=1
                )
                corner_wts = np.concatenate([t.corner_wts for t in ts], axis=1)
            else:
                corner_off = np.zeros((0, k_tot), dtype=np.int64)
                corner_wts = np.zeros((0, k_tot))
            gl_w = np.concatenate([t.node_w for t in ts])
            node_starts = np.cumsum([0] + [len(t.node_w) for t in ts])[:-1]
            foot_off = np.concatenate([t.foot[:, 0] * nx + t.foot[:, 1] for t in ts])
            foot_starts = np.cumsum([0] + [len(t.foot) for t in ts])[:-1]
            dvid = np.array(
                [(t.dci * nx + t.dcj) * self.bins + (t.end_bin - t.start_bin) for t in ts],
                dtype=np.int64,
            )
            bbox = np.array([t.bbox for t in ts], dtype=np.int64)
            # one combined index vector into the stacked flat rasters
            gather = np.concatenate(
                [
                    node_off.ravel(),
                    corner_off.ravel() + n_flat,
                    foot_off + 2 * n_flat,
                ]
            )
            plans.append(
                {
                    "templates": ts,
                    "node_off": np.ascontiguousarray(node_off),
                    "node_wts": np.ascontiguousarray(node_wts),
                    "corner_off": np.ascontiguousarray(corner_off),
                    "corner_wts": np.ascontiguousarray(corner_wts),
                    "gl_w": gl_w,
                    "node_starts": node_starts,
                    "foot_off": foot_off,
                    "foot_starts": foot_starts,
                    "dvid": dvid,
                    "bbox": bbox,
                    "gather": gather,
                    "k_tot": k_tot,
                    "n_corner": corner_off.shape[0],
                    "margin": (
                        int(bbox[:, 0].min()),
                        int(bbox[:, 1].max()),
                        int(bbox[:, 2].min()),
                        int(bbox[:, 3].max()),
                    ),
                }
            )
        return plans

    # -- stack versioning ----------------------------------------------------

    def apply_stack(self, new_stack: TerrainStack, delta_cells) -> list[tuple[int, int]]:
        """Swap in a new stack version; returns the (u, v) vid pairs of every
        cached edge whose evaluation support touches the delta, after dropping
        their cached weights."""
        self.stack = new_stack
        self._clearance_cells = None
        self._flat3_cache = None
        affected: list[tuple[int, int, MotionTemplate]] = []
        dirty_vertices = set()
        for ci, cj in np.asarray(delta_cells, dtype=np.int64).reshape(-1, 2):
            for di, dj in self._support_union:
                si, sj = int(ci - di), int(cj - dj)
                cell_flat = si * self.nx + sj
                bins_here = self._cells_with_cache.get(cell_flat)
                if not bins_here:
                    continue
                for b in bins_here:
                    for t in self._templates_by_bin[b]:
                        if (int(di), int(dj)) in t.support:
                            u = self.vid(si, sj, b)
                            v = u + (t.dci * self.nx + t.dcj) * self.bins + (
                                t.end_bin - t.start_bin
                            )
                            affected.append((u, v, t))
                            dirty_vertices.add(u)
        for u in dirty_vertices:
            self._succ_cache.pop(u, None)
            i, j, b = self.unpack(u)
            bins_here = self._cells_with_cache.get(i * self.nx + j)
            if bins_here:
                bins_here.discard(b)
        # dedupe endpoint pairs, preserving deterministic order
        seen = set()
        pairs = []
        for u, v, _ in affected:
            if (u, v) not in seen:
                seen.add((u, v))
                pairs.append((u, v))
        return pairs

    # -- successor / predecessor evaluation ----------------------------------

    def successor_weights(self, vid: int) -> tuple:
        """Cached (to_vid, weight, template_idx) triples for a vertex."""
        hit = self._succ_cache.get(vid)
        if hit is not None:
            return hit
        i, j, b = self.unpack(vid)
        plan = self._plans[b]
        out = []
        if plan is not None:
            lo_i, hi_i, lo_j, hi_j = plan["margin"]
            interior = (
                0 <= i + lo_i
                and i + hi_i < self.ny
                and 0 <= j + lo_j
                and j + hi_j < self.nx
            )
            if interior:
                out = self._eval_full(i, j, plan)
            else:
                out = self._eval_border(i, j, plan)
        result = tuple(out)
        self._succ_cache[vid] = result
        self._cells_with_cache.setdefault(i * self.nx + j, set()).add(b)
        return result

    def _attitude_from_corners(self, zc):
        veh = self.veh
        lon = ((zc[0] + zc[1]) - (zc[2] + zc[3])) / (2.0 * veh.wheelbase)
        lat = ((zc[0] + zc[2]) - (zc[1] + zc[3])) / (2.0 * veh.body_width)
        alpha = np.arctan(lon)
        beta = np.arctan(lat)
        return np.maximum(0.0, (np.abs(alpha) - veh.pitch_limit) / veh.pitch_limit) + np.maximum(
            0.0, (np.abs(beta) - veh.roll_limit) / veh.roll_limit
        )

    def _eval_full(self, i: int, j: int, plan):
        base = i * self.nx + j
        vals = self._flat3()[plan["gather"] + base]
        k_tot = plan["k_tot"]
        n_c = plan["n_corner"]
        node_vals = vals[: 4 * k_tot].reshape(4, k_tot)
        f = 1.0 + np.einsum("sk,sk->k", node_vals, plan["node_wts"])
        if n_c:
            zst = vals[4 * k_tot : (4 + n_c) * k_tot].reshape(n_c, k_tot) * plan["corner_wts"]
            zc = zst.reshape(4, 4, k_tot).sum(axis=1)
            f = f + self.cfg.lambda_att * self._attitude_from_corners(zc)
        foot_vals = vals[(4 + n_c) * k_tot :]
        j_vals = np.add.reduceat(plan["gl_w"] * f, plan["node_starts"])
        foot_max = np.maximum.reduceat(foot_vals, plan["foot_starts"])
        weights = np.where(foot_max < self.cfg.c_high, j_vals, np.inf)
        base_vid = base * self.bins + plan["templates"][0].start_bin
        to_vids = base_vid + plan["dvid"]
        return list(zip(to_vids.tolist(), weights.tolist(), range(len(weights))))

    def _eval_border(self, i: int, j: int, plan):
        out = []
        stack = self.stack
        combo_flat = stack._edge_combo.ravel()
        h_flat = stack.dem.heights.ravel()
        adm_flat = stack.admissibility(self.fail_safe).ravel()
        base = i * self.nx + j
        ts = plan["templates"]
        node_starts = list(plan["node_starts"]) + [len(plan["gl_w"])]
        foot_starts = list(plan["foot_starts"]) + [len(plan["foot_off"])]
        for k, t in enumerate(ts):
            lo_i, hi_i, lo_j, hi_j = t.bbox
            if not (0 <= i + lo_i and i + hi_i < self.ny and 0 <= j + lo_j and j + hi_j < self.nx):
                continue
            sl = slice(node_starts[k], node_starts[k + 1])
            f = 1.0 + (combo_flat[plan["node_off"][:, sl] + base] * plan["node_wts"][:, sl]).sum(
                axis=0
            )
            if self.cfg.lambda_att:
                zst = h_flat[plan["corner_off"][:, sl] + base] * plan["corner_wts"][:, sl]
                zc = zst.reshape(4, 4, -1).sum(axis=1)
                f = f + self.cfg.lambda_att * self._attitude_from_corners(zc)
            j_val = float(np.add.reduceat(plan["gl_w"][sl] * f, [0])[0])
            fsl = slice(foot_starts[k], foot_starts[k + 1])
            foot_max = float(np.max(adm_flat[plan["foot_off"][fsl] + base]))
            w = j_val if foot_max < self.cfg.c_high else math.inf
            out.append((base * self.bins + t.start_bin + int(plan["dvid"][k]), w, k))
        return out

    def predecessor_ids(self, vid: int) -> list[int]:
        """Vertices u with vid in Succ(u); weights come from u's own batch."""
        i, j, b = self.unpack(vid)
        out = []
        for t in self._pred_by_bin[b]:
            si, sj = i - t.dci, j - t.dcj
            if 0 <= si < self.ny and 0 <= sj < self.nx:
                out.append(self.vid(si, sj, t.start_bin))
        return out

    # -- public spec-level API ----------------------------------------------

    def motion_set_size(self, theta_bin: int) -> int:
        return len(self._templates_by_bin[theta_bin])

    def successors(self, state: LatticeState) -> list[LatticeEdge]:
        """Successor edges with translated primitives and terrain weights."""
        vid = self.vid_of_pose(Pose(state.x, state.y, bin_center(state.theta_bin, self.bins)))
        i, j, b = self.unpack(vid)
        if b != state.theta_bin:
            vid = self.vid(i, j, state.theta_bin)
            b = state.theta_bin
        edges = []
        for to_vid, w, t_idx in self.successor_weights(vid):
            t = self._templates_by_bin[b][t_idx]
            prim = self.translated_primitive(vid, t)
            edges.append(LatticeEdge(self.state_of(vid), self.state_of(to_vid), prim, w))
        return edges

    def translated_primitive(self, vid: int, template: MotionTemplate) -> MotionPrimitive:
        start = self.pose_of(vid)
        return MotionPrimitive.build(
            template.primitive.kind,
            start,
            [(k, l) for k, l in template.primitive.segments],
        )

    def edge_between(self, u: int, v: int):
        """(weight, template) of the cached/evaluated edge u -> v, if present."""
        for to_vid, w, t_idx in self.successor_weights(u):
            if to_vid == v:
                _, _, b = self.unpack(u)
                return w, self._templates_by_bin[b][t_idx]
        return None

    # -- admissibility for continuous primitives (VD-RRT*) -------------------

    def _clearance(self) -> np.ndarray:
        if self._clearance_cells is None:
            danger = self.stack.admissibility(self.fail_safe) >= self.cfg.c_high
            self._clearance_cells = ndimage.distance_transform_edt(~danger)
        return self._clearance_cells

    def primitive_admissible(self, prim: MotionPrimitive) -> bool:
        """True iff every footprint cell of the swept band is strictly below
        c_high on the admissibility raster."""
        stack = self.stack
        x0, y0, x1, y1 = prim.bounds()
        half = 0.5 * self.veh.body_width
        lo_ok = in_bounds(stack.shape, np.array([x0 - half, x1 + half]),
                          np.array([y0 - half, y1 + half]), stack.cell_size, stack.origin)
        if not lo_ok.all():
            return False
        if stack.max_admissibility(self.fail_safe) < self.cfg.c_high:
            return True
        delta = stack.cell_size
        # conservative clearance screen on sampled centerline points
        n = max(2, int(prim.length / (0.5 * delta)) + 1)
        s = np.linspace(0.0, prim.length, n)
        xs, ys, _ = prim.poses_at(s)
        ii = np.clip(np.rint((ys - stack.origin[1]) / delta).astype(np.int64), 0, self.ny - 1)
        jj = np.clip(np.rint((xs - stack.origin[0]) / delta).astype(np.int64), 0, self.nx - 1)
        clear = self._clearance()[ii, jj]
        need = half / delta
        if clear.min() >= need + 1.0:
            return True
        adm = stack.admissibility(self.fail_safe)
        if (adm[ii, jj] >= self.cfg.c_high).any():
            return False
        # exact fallback
        cells = footprint_cells(prim, self.veh.body_width, delta, stack.origin)
        for i, j in cells:
            if not (0 <= i < self.ny and 0 <= j < self.nx):
                return False
            if adm[i, j] >= self.cfg.c_high:
                return False
        return True

    # -- debug export ---------------------------------------------------------

    def dump_motion_set_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["start_bin", "dci", "dcj", "end_bin", "kind", "length"])
            for b in range(self.bins):
                for t in self._templates_by_bin[b]:
                    writer.writerow(
                        [t.start_bin, t.dci, t.dcj, t.end_bin, t.primitive.kind,
                         f"{t.primitive.length:.9g}"]
                    )


def admissible(edge_or_primitive, stack: TerrainStack, c_high: float, *,
               width: float, fail_safe: bool = True) -> bool:
    """Spec-level admissibility: every footprint cell strictly below c_high."""
    prim = getattr(edge_or_primitive, "primitive", edge_or_primitive)
    adm = stack.admissibility(fail_safe)
    ny, nx = stack.shape
    for i, j in footprint_cells(prim, width, stack.cell_size, stack.origin):
        if not (0 <= i < ny and 0 <= j < nx):
            return False
        if adm[i, j] >= c_high:
            return False
    return True
