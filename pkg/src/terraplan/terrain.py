"""Analytic terrain cost model.

Builds the bounded, monotone traversal-cost field from Bekker
pressure-sinkage soil mechanics, DEM slope, and vehicle attitude, fuses
the rasters, and integrates the terrain-weighted edge functional along
motion primitives with Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import EdgeEvaluationError, OutOfBoundsError, SoilLookupError
from .raster import Dem, bilinear, freeze
from .steering import TWO_PI, MotionPrimitive, advance

# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SoilParams:
    """Bekker pressure-sinkage triple (k_c, k_phi, n)."""

    k_c: float  # cohesive modulus [N m^-(n+1)]
    k_phi: float  # frictional modulus [N m^-(n+2)]
    n: float  # sinkage exponent

    def __post_init__(self):
        if not (math.isfinite(self.k_c) and self.k_c >= 0.0):
            raise ValueError("k_c must be finite and non-negative")
        if not (math.isfinite(self.k_phi) and self.k_phi >= 0.0):
            raise ValueError("k_phi must be finite and non-negative")
        if self.k_c <= 0.0 and self.k_phi <= 0.0:
            raise ValueError("at least one of k_c, k_phi must be strictly positive")
        if not 0.0 < self.n <= 2.0:
            raise ValueError("sinkage exponent must satisfy 0 < n <= 2")

    def derated(self, factor: float) -> "SoilParams":
        """Scale both moduli (uncertainty margin); n carries no stated margin."""
        return SoilParams(self.k_c * factor, self.k_phi * factor, self.n)


@dataclass(frozen=True)
class VehicleParams:
    """Vehicle geometry, load, and kinematic/attitude limits."""

    wheel_radius: float  # R [m]
    tire_width: float  # b [m]
    wheel_count: int  # N
    total_weight: float  # W_total [N]
    body_width: float  # w [m]
    wheelbase: float  # L [m]
    min_turn_radius: float  # R_min [m]
    max_steer: float  # phi_max [rad]
    pitch_limit: float = 0.35  # alpha_max [rad]
    roll_limit: float = 0.30  # beta_max [rad]

    def __post_init__(self):
        for name in (
            "wheel_radius",
            "tire_width",
            "wheel_count",
            "total_weight",
            "body_width",
            "wheelbase",
            "min_turn_radius",
            "max_steer",
            "pitch_limit",
            "roll_limit",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.max_steer < 0.5 * math.pi:
            raise ValueError("max_steer must be below pi/2")

    @property
    def contact_weight(self) -> float:
        return self.total_weight / self.wheel_count


@dataclass(frozen=True)
class CostConfig:
    """Weights and thresholds of the fused terrain cost."""

    lambda_slope: float = 1.0
    lambda_soil: float = 1.0
    lambda_att: float = 1.0
    fusion_alpha: float = 1.5
    tau_slope: float = 0.6
    c_high: float = 1.0
    soil_margin: float = 0.20

    def __post_init__(self):
        if min(self.lambda_slope, self.lambda_soil, self.lambda_att, self.fusion_alpha) < 0:
            raise ValueError("cost weights must be non-negative")
        if not 0.0 < self.soil_margin < 1.0:
            raise ValueError("soil_margin must lie in (0, 1)")
        if not self.c_high > 0:
            raise ValueError("c_high must be positive")
        if not self.tau_slope > 0:
            raise ValueError("tau_slope must be positive")


# ---------------------------------------------------------------------------
# Soil lookup table (text config; the six default substrate rows ship here)
# ---------------------------------------------------------------------------

DEFAULT_SOIL_LUT_TEXT = """\
# soil lookup table: label  k_c [N/m^(n+1)]  k_phi [N/m^(n+2)]  n
pavement    1.0e6   1.0e7   1.0
gravel      0.0     5.0e5   1.0
wood_chips  7.0e3   1.5e6   0.8
loam        1.0e3   1.8e6   1.0
grass       1.0e3   1.2e6   0.9
sand        2.0e3   5.0e5   1.2
"""


def parse_soil_lut(text: str) -> dict[str, SoilParams]:
    lut: dict[str, SoilParams] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"soil LUT line {lineno}: expected 'label k_c k_phi n'")
        label, k_c, k_phi, n = parts
        lut[label] = SoilParams(float(k_c), float(k_phi), float(n))
    return lut


def load_soil_lut(path) -> dict[str, SoilParams]:
    with open(path) as fh:
        return parse_soil_lut(fh.read())


DEFAULT_SOIL_LUT = parse_soil_lut(DEFAULT_SOIL_LUT_TEXT)


# ---------------------------------------------------------------------------
# Soil mechanics
# ---------------------------------------------------------------------------


def pressure(z: float, soil: SoilParams, b: float) -> float:
    """Ground pressure under a wheel at sinkage depth z: (k_c/b + k_phi) z^n."""
    if not b > 0:
        raise ValueError("tire width must be positive")
    z = float(z)
    if not math.isfinite(z) or z < 0.0:
        raise ValueError("sinkage depth must be finite and non-negative")
    return (soil.k_c / b + soil.k_phi) * z**soil.n


def sinkage(soil: SoilParams, veh: VehicleParams) -> float:
    """Static-equilibrium sinkage depth of one loaded wheel.

    Closed-form inversion of W_contact = p(z) * b * sqrt(2 R z), using the
    contact-area approximation A = b sqrt(2 R z).
    """
    k = soil.k_c / veh.tire_width + soil.k_phi
    if k <= 0.0:
        raise ValueError("degenerate soil: k_c/b + k_phi must be positive")
    denom = k * veh.tire_width * math.sqrt(2.0 * veh.wheel_radius)
    return (veh.contact_weight / denom) ** (1.0 / (soil.n + 0.5))


def soil_cost(soil: SoilParams, veh: VehicleParams) -> float:
    """Dimensionless soil traversal cost: sinkage normalized by wheel radius,
    clipped at 1 (full wheel burial)."""
    return min(sinkage(soil, veh) / veh.wheel_radius, 1.0)


# ---------------------------------------------------------------------------
# Slope and attitude
# ---------------------------------------------------------------------------


def slope_field(dem: Dem, tau_slope: float) -> np.ndarray:
    """Saturated DEM gradient magnitude raster.

    Centered finite differences in the interior; one-sided differences on
    the border rows/columns so the raster keeps the DEM's shape.
    """
    if dem.shape[0] < 3 or dem.shape[1] < 3:
        raise ValueError("DEM must be at least 3x3 for slope estimation")
    dy, dx = np.gradient(dem.heights, dem.cell_size)
    return np.minimum(np.hypot(dx, dy), tau_slope)


def attitude_costs(dem: Dem, xs, ys, thetas, veh: VehicleParams) -> np.ndarray:
    """Attitude exceedance penalty at an array of planar poses.

    The four tire contact points (corners of the wheelbase x track
    rectangle) settle onto the DEM; pitch/roll come from the least-squares
    plane through them, which for a rectangle reduces to front/rear and
    left/right height averages.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    ys = np.atleast_1d(np.asarray(ys, dtype=np.float64))
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    c = np.cos(thetas)
    s = np.sin(thetas)
    hl = 0.5 * veh.wheelbase
    hw = 0.5 * veh.body_width
    # corners: front-left, front-right, rear-left, rear-right
    du = np.array([hl, hl, -hl, -hl])[:, None]
    dv = np.array([hw, -hw, hw, -hw])[:, None]
    cx = xs[None, :] + du * c[None, :] - dv * s[None, :]
    cy = ys[None, :] + du * s[None, :] + dv * c[None, :]
    z = bilinear(dem.heights, cx.ravel(), cy.ravel(), dem.cell_size, dem.origin).reshape(4, -1)
    lon = ((z[0] + z[1]) - (z[2] + z[3])) / (2.0 * veh.wheelbase)
    lat = ((z[0] + z[2]) - (z[1] + z[3])) / (2.0 * veh.body_width)
    alpha = np.arctan(lon)
    beta = np.arctan(lat)
    pen_a = np.maximum(0.0, (np.abs(alpha) - veh.pitch_limit) / veh.pitch_limit)
    pen_b = np.maximum(0.0, (np.abs(beta) - veh.roll_limit) / veh.roll_limit)
    return pen_a + pen_b


def attitude_cost(dem: Dem, pose, veh: VehicleParams) -> float:
    """Attitude penalty at a single planar pose (x, y, theta)."""
    x, y, theta = (pose.x, pose.y, pose.theta) if hasattr(pose, "theta") else pose
    return float(attitude_costs(dem, [x], [y], [theta], veh)[0])


# ---------------------------------------------------------------------------
# Terrain stack
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TerrainStack:
    """Aligned, immutable cost rasters over one DEM.

    Map updates never mutate a stack; ``with_occupancy`` returns a new
    version with the touched cells refused, so concurrent readers always
    see a consistent snapshot.
    """

    dem: Dem
    soil_labels: np.ndarray  # int16 codes into palette
    palette: tuple[str, ...]
    c_soil_mean: np.ndarray
    c_soil_ucb: np.ndarray
    c_slope: np.ndarray
    c_total_mean: np.ndarray
    c_total_ucb: np.ndarray
    occupancy: np.ndarray  # bool, ground-truth-or-known obstacles
    cfg: CostConfig
    version: int = 0

    def __post_init__(self):
        object.__setattr__(self, "soil_labels", freeze(self.soil_labels, np.int16))
        for name in ("c_soil_mean", "c_soil_ucb", "c_slope", "c_total_mean", "c_total_ucb"):
            object.__setattr__(self, name, freeze(getattr(self, name)))
        object.__setattr__(self, "occupancy", freeze(self.occupancy, bool))
        shape = self.dem.shape
        for name in (
            "soil_labels",
            "c_soil_mean",
            "c_soil_ucb",
            "c_slope",
            "c_total_mean",
            "c_total_ucb",
            "occupancy",
        ):
            if getattr(self, name).shape != shape:
                raise ValueError(f"raster {name} is not aligned with the DEM")
        # derived caches for the edge functional (not part of the value identity)
        combo = freeze(
            self.cfg.lambda_slope * self.c_slope + self.cfg.lambda_soil * self.c_soil_mean
        )
        object.__setattr__(self, "_edge_combo", combo)
        h = self.dem.heights
        uniform = bool(h.max() == h.min() and combo.max() == combo.min())
        object.__setattr__(self, "_uniform_integrand", float(1.0 + combo.flat[0]) if uniform else None)

    @property
    def shape(self):
        return self.dem.shape

    @property
    def cell_size(self) -> float:
        return self.dem.cell_size

    @property
    def origin(self):
        return self.dem.origin

    @property
    def obstacle_cost(self) -> float:
        """Cost written into occupied cells; comfortably above c_high."""
        return 2.0 * self.cfg.c_high + 1.0

    def admissibility(self, fail_safe: bool = True) -> np.ndarray:
        """Raster gating edge admissibility (UCB in fail-safe mode)."""
        return self.c_total_ucb if fail_safe else self.c_total_mean

    def max_admissibility(self, fail_safe: bool = True) -> float:
        return float(self.admissibility(fail_safe).max())

    def with_occupancy(self, cells, occupied=True, obstacle_cost=None) -> "TerrainStack":
        """New stack version with occupancy changed at ``cells`` (array of (i, j)).

        Occupied cells get c_total >= c_high in both variants; freed cells
        fall back to the fused slope+soil value.
        """
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
        if cells.size == 0:
            return self
        if obstacle_cost is None:
            obstacle_cost = self.obstacle_cost
        flags = np.broadcast_to(np.asarray(occupied, dtype=bool), (len(cells),))
        ii, jj = cells[:, 0], cells[:, 1]
        occ = self.occupancy.copy()
        occ[ii, jj] = flags
        alpha = self.cfg.fusion_alpha
        base_m = alpha * self.c_slope[ii, jj] + self.c_soil_mean[ii, jj]
        base_u = alpha * self.c_slope[ii, jj] + self.c_soil_ucb[ii, jj]
        ctm = self.c_total_mean.copy()
        ctu = self.c_total_ucb.copy()
        ctm[ii, jj] = np.where(flags, np.maximum(base_m, obstacle_cost), base_m)
        ctu[ii, jj] = np.where(flags, np.maximum(base_u, obstacle_cost), base_u)
        return replace(
            self,
            occupancy=occ,
            c_total_mean=ctm,
            c_total_ucb=ctu,
            version=self.version + 1,
        )


def build_stack(
    dem: Dem,
    soil_labels: np.ndarray,
    palette,
    lut: dict[str, SoilParams],
    veh: VehicleParams,
    cfg: CostConfig,
) -> TerrainStack:
    """Assemble the fused terrain-cost stack from a DEM and a soil-label raster.

    c_soil_mean uses nominal LUT parameters; c_soil_ucb derates both moduli
    by the soil margin (soft-soil worst case).  c_total = fusion_alpha *
    c_slope + c_soil, per variant.
    """
    labels = np.asarray(soil_labels)
    if labels.shape != dem.shape:
        raise ValueError("soil labels must align with the DEM")
    palette = tuple(palette)
    if labels.size and (labels.min() < 0 or labels.max() >= len(palette)):
        raise SoilLookupError(f"label code outside palette of size {len(palette)}")
    mean_vals = np.empty(len(palette))
    ucb_vals = np.empty(len(palette))
    for idx, name in enumerate(palette):
        try:
            soil = lut[name]
        except KeyError:
            raise SoilLookupError(f"soil label {name!r} missing from lookup table") from None
        mean_vals[idx] = soil_cost(soil, veh)
        ucb_vals[idx] = soil_cost(soil.derated(1.0 - cfg.soil_margin), veh)
    c_soil_mean = mean_vals[labels]
    c_soil_ucb = ucb_vals[labels]
    c_slope = slope_field(dem, cfg.tau_slope)
    return TerrainStack(
        dem=dem,
        soil_labels=labels.astype(np.int16),
        palette=palette,
        c_soil_mean=c_soil_mean,
        c_soil_ucb=c_soil_ucb,
        c_slope=c_slope,
        c_total_mean=cfg.fusion_alpha * c_slope + c_soil_mean,
        c_total_ucb=cfg.fusion_alpha * c_slope + c_soil_ucb,
        occupancy=np.zeros(dem.shape, dtype=bool),
        cfg=cfg,
    )


# ---------------------------------------------------------------------------
# Edge functional J(e)
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


def _gridline_coords(lo: float, hi: float, ref: float, cell_size: float) -> np.ndarray:
    """Bilinear-knot coordinates ref + k * cell_size within [lo, hi].

    Bilinear interpolation is smooth between cell *centers*, so its
    derivative kinks sit on the center lines, not the cell borders.
    """
    k0 = math.floor((lo - ref) / cell_size)
    k1 = math.ceil((hi - ref) / cell_size)
    return ref + np.arange(k0, k1 + 1) * cell_size


def _line_crossings(px, py, vx, vy, total, cell_size, origin):
    """Arc-length params where the line p + s*v (s in (0, total)) crosses cell borders."""
    out = []
    x1, y1 = px + vx * total, py + vy * total
    if abs(vx) > 1e-15:
        g = _gridline_coords(min(px, x1), max(px, x1), origin[0], cell_size)
        out.append((g - px) / vx)
    if abs(vy) > 1e-15:
        g = _gridline_coords(min(py, y1), max(py, y1), origin[1], cell_size)
        out.append((g - py) / vy)
    if not out:
        return np.empty(0)
    s = np.concatenate(out)
    return s[(s > 1e-12) & (s < total - 1e-12)]


def _circle_crossings(cx, cy, r_c, a0, rate, total, cell_size, origin):
    """Arc-length params where c + r_c*(cos, sin)(a0 + rate*s) crosses cell borders."""
    if r_c < 1e-12:
        return np.empty(0)
    out = []
    n_k = int(abs(rate) * total / TWO_PI) + 2
    ang_lo = min(a0, a0 + rate * total)
    for ref, center, use_cos in ((origin[0], cx, True), (origin[1], cy, False)):
        g = _gridline_coords(center - r_c, center + r_c, ref, cell_size)
        cval = (g - center) / r_c
        cval = cval[np.abs(cval) <= 1.0]
        if cval.size == 0:
            continue
        if use_cos:
            base = np.arccos(cval)
            roots = np.concatenate([base, -base])
        else:
            base = np.arcsin(cval)
            roots = np.concatenate([base, math.pi - base])
        base_k = np.floor((ang_lo - roots) / TWO_PI)
        for dk in range(n_k + 1):
            s = (roots + (base_k + dk) * TWO_PI - a0) / rate
            out.append(s[(s > 1e-12) & (s < total - 1e-12)])
    return np.concatenate(out) if out else np.empty(0)


def _segment_breakpoints(x0, y0, th0, kappa, signed_len, cell_size, origin):
    """Bilinear-knot crossing params of the segment centerline.

    Splitting quadrature chunks at these points keeps the interpolated
    raster integrand smooth inside every chunk, which is what makes fixed
    5-point Gauss-Legendre effectively exact for the edge functional.
    """
    total = abs(signed_len)
    sgn = 1.0 if signed_len >= 0 else -1.0
    cth, sth = math.cos(th0), math.sin(th0)
    if abs(kappa) < 1e-12:
        return _line_crossings(x0, y0, sgn * cth, sgn * sth, total, cell_size, origin)
    cx = x0 - sth / kappa
    cy = y0 + cth / kappa
    r_c = math.hypot(x0 - cx, y0 - cy)
    a0 = math.atan2(y0 - cy, x0 - cx)
    return _circle_crossings(cx, cy, r_c, a0, kappa * sgn, total, cell_size, origin)


def _quadrature_nodes(primitive: MotionPrimitive, cell_size, origin, max_chunk):
    """Gauss-Legendre nodes and weights along a primitive, chunked at crossings."""
    all_s = []
    all_w = []
    seg_start = 0.0
    x, y, th = primitive.start.x, primitive.start.y, primitive.start.theta
    for kappa, slen in primitive.segments:
        total = abs(slen)
        cuts = _segment_breakpoints(x, y, th, kappa, slen, cell_size, origin)
        bounds = np.unique(np.concatenate([[0.0, total], cuts]))
        widths = np.diff(bounds)
        keep = widths > 1e-12
        lo = bounds[:-1][keep]
        widths = widths[keep]
        n_sub = np.maximum(np.ceil(widths / max_chunk).astype(np.int64), 1)
        idx = np.repeat(np.arange(len(n_sub)), n_sub)
        within = np.arange(int(n_sub.sum())) - np.repeat(np.cumsum(n_sub) - n_sub, n_sub)
        sub_w = widths[idx] / n_sub[idx]
        sub_lo = lo[idx] + sub_w * within
        half = 0.5 * sub_w
        mid = sub_lo + half
        all_s.append((seg_start + mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel())
        all_w.append((half[:, None] * _GL_WEIGHTS[None, :]).ravel())
        seg_start += total
        x, y, th = advance(x, y, th, kappa, slen)
    if not all_s:
        return np.empty(0), np.empty(0)
    return np.concatenate(all_s), np.concatenate(all_w)


def edge_cost_J(
    primitive: MotionPrimitive,
    stack: TerrainStack,
    veh: VehicleParams,
    cfg: CostConfig | None = None,
    max_chunk: float | None = None,
) -> float:
    """Integrated edge cost: arc length plus weighted slope, soil, and
    attitude penalties along the primitive.

    Always >= the primitive's arc length since the integrand is >= 1.
    Raises EdgeEvaluationError when any sample (or attitude contact point)
    leaves the raster; callers treat that as inadmissible.
    """
    if cfg is None:
        cfg = stack.cfg
    if primitive.length <= 0.0:
        return 0.0
    if cfg is stack.cfg and stack._uniform_integrand is not None:
        # flat DEM + uniform soil: the integrand is the same constant everywhere
        x0, y0, x1, y1 = primitive.bounds()
        if not stack.dem.in_bounds(np.array([x0, x1]), np.array([y0, y1])).all():
            raise EdgeEvaluationError("edge sample left the raster")
        return stack._uniform_integrand * primitive.length
    if max_chunk is None:
        max_chunk = 0.25 * stack.cell_size
    s_vals, weights = _quadrature_nodes(primitive, stack.cell_size, stack.origin, max_chunk)
    xs, ys, ths = primitive.poses_at(s_vals)
    try:
        if cfg is stack.cfg:
            f = 1.0 + bilinear(stack._edge_combo, xs, ys, stack.cell_size, stack.origin)
        else:
            f = np.ones_like(s_vals)
            if cfg.lambda_slope:
                f += cfg.lambda_slope * bilinear(
                    stack.c_slope, xs, ys, stack.cell_size, stack.origin
                )
            if cfg.lambda_soil:
                f += cfg.lambda_soil * bilinear(
                    stack.c_soil_mean, xs, ys, stack.cell_size, stack.origin
                )
        if cfg.lambda_att:
            f += cfg.lambda_att * attitude_costs(stack.dem, xs, ys, ths, veh)
    except OutOfBoundsError as exc:
        raise EdgeEvaluationError(f"edge sample left the raster: {exc}") from exc
    return float(np.sum(weights * f))
