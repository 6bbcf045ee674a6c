"""The non-recurrence experiment.

A plateau bump ``xi`` sits on the ray ``{x2 = 0, x1 > 0}`` and vanishes on the
left half ``{x1 < 0}``. The background rotation shears the ray ``l`` into a
spiral whose ends separate at a rate of at least ``3t/8``; once it reaches the
left half, values of ``omega`` carried along ``l_t`` exceed ``epsilon`` where
``xi`` is zero, so ``||omega(t) - xi||_{C^1} > epsilon``. The run records the
series and four verdicts derived from it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .euler_sim import EulerSimulator, SimConfig, SimState
from .exceptions import ConstraintViolation, GridMismatch, ValidationError
from .geometry import PolarGrid, ScalarField, c1_norm, wrap_angle
from .io import dumps_json, write_json
from .lagrangian import GridVelocitySeries, MaterialLine, Patch, winding_separation

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
T_STAR = 8.0 * np.pi / 3.0
WINDING_RATE = 3.0 / 8.0
V_BOUND = 0.25
TEST_PATCH = ((1.2, 0.0), (1.4, 0.0), (1.4, 0.2), (1.2, 0.2))


def smoothstep5(t):
    """``6t^5 - 15t^4 + 10t^3`` clipped to [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


@dataclass(frozen=True)
class XiSpec:
    epsilon: float = 0.1
    amplitude: float | None = None
    plateau: float = 0.1
    support: float = 1.5

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValidationError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.amplitude is None:
            object.__setattr__(self, "amplitude", 2.5 * self.epsilon)
        if not (0.0 <= self.plateau < self.support):
            raise ValidationError("need 0 <= plateau < support")

    def profile(self, theta):
        """Angular profile: 1 on ``|theta| <= plateau``, 0 on ``|theta| >= support``."""
        a = np.abs(wrap_angle(theta))
        return smoothstep5((self.support - a) / (self.support - self.plateau))

    def as_dict(self) -> dict:
        return {"epsilon": self.epsilon, "amplitude": self.amplitude, "plateau": self.plateau, "support": self.support}


def build_xi(spec: XiSpec, grid: PolarGrid) -> ScalarField:
    """Sample ``amplitude * profile(theta)`` and check the three constraints on the grid."""
    eps = spec.epsilon
    if not spec.amplitude > 2.0 * eps:
        raise ConstraintViolation("value_on_ray", f"amplitude {spec.amplitude} must exceed 2*epsilon = {2 * eps}")
    if spec.support > np.pi / 2:
        raise ConstraintViolation(
            "vanish_left_half", f"support half-width {spec.support} exceeds pi/2, so xi is nonzero where x1 < 0"
        )
    xi = ScalarField.from_function(grid, lambda R, TH: spec.amplitude * spec.profile(TH))
    left = grid.X < 0
    if np.any(xi.values[left] != 0.0):
        raise ConstraintViolation("vanish_left_half", "xi is nonzero at grid nodes with x1 < 0")
    ray = xi.values[:, 0]
    if not np.all(ray > 2.0 * eps):
        raise ConstraintViolation("value_on_ray", f"min of xi on the ray is {ray.min():.4g} <= {2 * eps}")
    n1 = c1_norm(xi)
    if not n1 < 4.0 * eps:
        raise ConstraintViolation("c1_norm", f"grid C^1 norm {n1:.4g} is not below 4*epsilon = {4 * eps}")
    return xi


def random_perturbation(grid: PolarGrid, c1_target: float, seed: int, modes: int = 4) -> ScalarField:
    """Seeded smooth trigonometric perturbation scaled to grid C^1 norm ``c1_target``."""
    rng = np.random.default_rng(seed)
    s = (grid.R - 1.0) * np.pi
    vals = np.zeros(grid.shape)
    for m in range(modes + 1):
        for k in range(modes + 1):
            a, b = rng.normal(size=2) / (1.0 + m + k) ** 2
            vals += np.cos(k * s) * (a * np.cos(m * grid.TH) + b * np.sin(m * grid.TH))
    f = ScalarField(grid, vals)
    n = c1_norm(f)
    return f * (c1_target / n) if n > 0 else f


def distance_series(snapshots, xi: ScalarField) -> list[tuple[float, float]]:
    out = []
    for s in snapshots:
        if s.omega.grid != xi.grid:
            raise GridMismatch("snapshot grid does not match xi")
        out.append((float(s.t), c1_norm(s.omega - xi)))
    return out


def compute_verdicts(series: list[dict], t_threshold: float = T_STAR, margin: float = 0.0) -> dict:
    """Derive the four verdicts from a stored series (used both to produce and to re-check reports)."""
    eps = None
    late = [row for row in series if row["t"] > t_threshold + margin]
    if series and "epsilon" in series[0]:
        eps = series[0]["epsilon"]
    return {
        "distance": all(row["c1_distance"] > row.get("epsilon", eps) for row in late),
        "winding": all(row["winding"] >= WINDING_RATE * row["t"] for row in series if row["t"] > 0),
        "intersect_mminus": all(row["intersects_mminus"] for row in late),
        "v_bound": all(row["sup_v"] < V_BOUND for row in series),
    }


@dataclass
class ExperimentReport:
    params: dict
    series: list[dict]
    verdicts: dict
    conservation: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    first_intersection_time: float | None = None
    patch: dict | None = None
    final_line: MaterialLine | None = field(default=None, repr=False)
    final_omega: ScalarField | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def recompute_verdicts(self) -> dict:
        rows = [dict(r, epsilon=self.params["epsilon"]) for r in self.series]
        return compute_verdicts(rows, margin=self.params.get("margin", 0.0))

    def to_json_dict(self) -> dict:
        d = {
            "params": self.params,
            "series": self.series,
            "verdicts": self.verdicts,
            "conservation": self.conservation,
            "warnings": self.warnings,
            "first_intersection_time": self.first_intersection_time,
            "note": "verdicts quantify over the sampled output times only",
        }
        if self.patch is not None:
            d["patch"] = self.patch
        return d

    def to_json(self) -> str:
        return dumps_json(self.to_json_dict())

    def write(self, path) -> Path:
        return write_json(path, self.to_json_dict())


def _conservation(rows: list[dict], omega0: ScalarField) -> dict:
    ens = np.array([r["enstrophy"] for r in rows])
    en = np.array([r["energy"] for r in rows])
    m0 = float(np.max(np.abs(omega0.values)))
    mt = max(max(abs(r["omega_min"]), abs(r["omega_max"])) for r in rows)
    viol = max(0.0, mt - m0)
    return {
        "energy_drift": float(np.max(np.abs(en - en[0])) / abs(en[0])) if en[0] else float(np.max(np.abs(en))),
        "enstrophy_drift": float(np.max(np.abs(ens - ens[0])) / ens[0]) if ens[0] else float(np.max(ens)),
        "range_violation": viol,
        "range_violation_relative": viol / m0 if m0 > 0 else 0.0,
    }


def nonrecurrence_experiment(
    epsilon: float = 0.1,
    perturbation: ScalarField | None = None,
    config: SimConfig | None = None,
    *,
    xi_spec: XiSpec | None = None,
    negative_control: bool = False,
    line_threshold: float = 0.02,
    marker_cap: int = 10**6,
    margin: float = 0.0,
    track_patch: bool = False,
    patch_until: float = 10.0,
    svg_dir=None,
    svg_every: float = 2.0,
) -> ExperimentReport:
    """Run the coupled simulation from ``xi + perturbation`` and track the material ray.

    ``negative_control=True`` switches the background rotation off (sigma1 = 0),
    under which the winding verdict is expected to fail.
    """
    config = config or SimConfig()
    sigma1 = 0.0 if negative_control else TWO_PI
    if config.sigma1 != sigma1:
        if not negative_control and config.sigma1 != TWO_PI:
            raise ValidationError(f"the experiment fixes sigma1 = 2 pi, got {config.sigma1}")
        config = SimConfig(**{**config.as_dict(), "sigma1": sigma1})
    grid = config.grid
    xi_spec = xi_spec or XiSpec(epsilon)
    if xi_spec.epsilon != epsilon:
        raise ValidationError("xi_spec.epsilon must equal epsilon")
    xi = build_xi(xi_spec, grid)
    if perturbation is None:
        perturbation = ScalarField.zeros(grid)
    if perturbation.grid != grid:
        raise GridMismatch("perturbation grid does not match the configured grid")
    p_norm = c1_norm(perturbation)
    if not p_norm < epsilon:
        raise ValidationError(f"perturbation C^1 norm {p_norm:.4g} must be below epsilon = {epsilon}")

    params = {
        "epsilon": epsilon,
        "xi": xi_spec.as_dict(),
        "perturbation_c1_norm": p_norm,
        "negative_control": negative_control,
        "line_gap_threshold": line_threshold,
        "marker_cap": marker_cap,
        "margin": margin,
        "t_threshold": T_STAR,
        **config.as_dict(),
    }
    warnings = []
    if config.t_end <= T_STAR + margin:
        warnings.append(
            f"t_end = {config.t_end} does not exceed 8 pi/3 = {T_STAR:.6f}; the distance and "
            "left-half verdicts hold vacuously"
        )

    sim = EulerSimulator(config)
    state = sim.initial_state(xi + perturbation)
    supplier = GridVelocitySeries(grid, sigma1)
    supplier.append(state.t, state.velocity)
    line = MaterialLine.segment(line_threshold, marker_cap)
    patch = Patch.from_corners(TEST_PATCH) if track_patch else None
    patch_rows = []
    if patch is not None:
        patch_rows.append({"t": 0.0, "area": patch.area, "n_vertices": len(patch.points)})

    svg_out = []

    def record(s: SimState, sup_v: float) -> dict:
        d = s.diagnostics
        return {
            "t": s.t,
            "c1_distance": c1_norm(s.omega - xi),
            "winding": winding_separation(line),
            "sup_v": sup_v,
            "enstrophy": d["enstrophy"],
            "energy": d["energy"],
            "omega_min": d["omega_min"],
            "omega_max": d["omega_max"],
            "circulation": d["circulation"],
            "intersects_mminus": line.intersects_left_half(),
            "n_markers": len(line),
        }

    def snapshot_svg(s: SimState):
        if svg_dir is None:
            return
        from .svg import annulus_svg

        name = f"snapshot_t{s.t:08.3f}.svg"
        svg_out.append((Path(svg_dir) / name, annulus_svg(s.omega, [line.points], f"t = {s.t:.2f}")))

    rows = [record(state, state.diagnostics["sup_v"])]
    snapshot_svg(state)
    every = config.steps_per_output
    svg_steps = max(1, int(round(svg_every / config.dt)))
    n = config.n_steps
    sup_window = 0.0
    for k, new in sim.iterate(state):
        supplier.append(new.t, new.velocity)
        h = new.t - state.t
        line.step(supplier, state.t, h)
        if patch is not None and state.t < patch_until - 1e-12:
            patch.step(supplier, state.t, h)
        sup_window = max(sup_window, new.diagnostics["sup_v"])
        state = new
        if k % every == 0 or k == n:
            line.refine()
            if patch is not None and state.t <= patch_until + 1e-9:
                patch.refine()
                patch_rows.append({"t": state.t, "area": patch.area, "n_vertices": len(patch.points)})
            rows.append(record(state, sup_window))
            sup_window = 0.0
            log.info(
                "t=%.2f dist=%.4f winding=%.3f sup_v=%.4f markers=%d",
                state.t, rows[-1]["c1_distance"], rows[-1]["winding"], rows[-1]["sup_v"], len(line),
            )
        if k % svg_steps == 0 or k == n:
            snapshot_svg(state)

    check_rows = [dict(r, epsilon=epsilon) for r in rows]
    verdicts = compute_verdicts(check_rows, margin=margin)
    max_sup = max(r["sup_v"] for r in rows)
    if max_sup >= V_BOUND:
        warnings.append(f"measured sup|v| = {max_sup:.4g} reached the assumed bound 1/4")
    hits = [r["t"] for r in rows if r["intersects_mminus"]]
    patch_info = None
    if patch is not None:
        a0 = patch_rows[0]["area"]
        patch_info = {
            "series": patch_rows,
            "area_drift": max(abs(p["area"] - a0) for p in patch_rows) / abs(a0),
        }
    report = ExperimentReport(
        params=params,
        series=rows,
        verdicts=verdicts,
        conservation=_conservation(rows, xi + perturbation),
        warnings=warnings,
        first_intersection_time=hits[0] if hits else None,
        patch=patch_info,
        final_line=line,
        final_omega=state.omega,
    )
    if svg_dir is not None:
        from .io import atomic_write_text

        for path, text in svg_out:
            atomic_write_text(path, text)
    return report
