"""Scenario configuration, end-to-end runs, and the JSON analysis document.

Config files are flat key = value text with bracketed section headers
(stdlib configparser); the full key list is documented in the README.
"""

import configparser
import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from . import analysis as ana
from . import model, physical, records, vm
from .errors import ConfigError, FitError, ModelError, PrandtlLabError
from .grids import PsiGrid

FLOW_MODES = ("constant_adverse", "polynomial", "neutral")
PROFILE_MODES = ("generated", "file")


@dataclass
class ScenarioConfig:
    # flow
    flow_mode: str = "constant_adverse"
    dpdx: float = 1.0
    x0: float = 16.0
    p_coeffs: tuple = ()
    u_ref: float = 1.0
    # profile
    profile_mode: str = "generated"
    slope: float = 0.1
    blend_scale: float = 3.0
    profile_path: str = ""
    # grid
    grid_n: int = 1024
    grading: float = 2.0
    psi_max: float | None = None          # None = auto
    # march
    dx0: float = 2e-3
    dx_min: float = 1e-12
    tau_stop_rel: float = 2e-3
    x_end: float = 6.0
    snapshot_xs: tuple = ()
    march_mode: str = "picard"
    tau_jump_rel: float = 0.04
    # analysis
    tail_fraction: float = 0.5
    b_const: float = 4.0
    mu: float = 0.5
    epsilon0: float | None = None         # None = mu^2 / (2B)
    delta: float = 2.0
    window_rel: tuple = (1e-3, 5e-2)
    # bookkeeping
    label: str = ""

    def validate(self):
        if self.flow_mode not in FLOW_MODES:
            raise ConfigError(f"flow mode must be one of {FLOW_MODES}")
        if self.profile_mode not in PROFILE_MODES:
            raise ConfigError(f"profile mode must be one of {PROFILE_MODES}")
        if self.flow_mode == "constant_adverse":
            if self.dpdx <= 0 or self.x0 <= 0:
                raise ConfigError("constant_adverse needs dpdx > 0 and x0 > 0")
        if self.flow_mode == "polynomial" and len(self.p_coeffs) < 2:
            raise ConfigError("polynomial mode needs p_coeffs")
        if self.flow_mode == "neutral":
            if self.u_ref <= 0:
                raise ConfigError("neutral mode needs u_ref > 0")
            if self.dpdx > 0:
                self.dpdx = 0.0  # neutral default; favorable runs set dpdx < 0
        if self.profile_mode == "generated":
            if self.slope <= 0 or self.blend_scale <= 0:
                raise ConfigError("generated profile needs slope > 0 and blend_scale > 0")
        elif not self.profile_path:
            raise ConfigError("profile mode 'file' needs a path")
        for name in ("dx0", "dx_min", "tau_stop_rel", "x_end", "tail_fraction",
                     "b_const", "mu", "delta"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not (0 < self.mu < 1):
            raise ConfigError("mu must lie in (0, 1)")
        if self.grid_n < 8:
            raise ConfigError("grid n too small")
        return self

    def canonical_lines(self):
        out = []
        for key in sorted(self.__dataclass_fields__):
            out.append(f"{key}={getattr(self, key)!r}")
        return out

    def config_hash(self):
        text = "\n".join(self.canonical_lines())
        return hashlib.sha256(text.encode()).hexdigest()[:16]


_SECTION_KEYS = {
    "flow": {"mode": ("flow_mode", str), "dpdx": ("dpdx", float),
             "x0": ("x0", float), "p_coeffs": ("p_coeffs", "floats"),
             "u_ref": ("u_ref", float)},
    "profile": {"mode": ("profile_mode", str), "slope": ("slope", float),
                "blend_scale": ("blend_scale", float),
                "path": ("profile_path", str)},
    "grid": {"n": ("grid_n", int), "grading": ("grading", float),
             "psi_max": ("psi_max", "float_or_auto")},
    "march": {"dx0": ("dx0", float), "dx_min": ("dx_min", float),
              "tau_stop_rel": ("tau_stop_rel", float), "x_end": ("x_end", float),
              "snapshot_xs": ("snapshot_xs", "floats"),
              "mode": ("march_mode", str),
              "tau_jump_rel": ("tau_jump_rel", float)},
    "analysis": {"tail_fraction": ("tail_fraction", float),
                 "b_const": ("b_const", float), "mu": ("mu", float),
                 "epsilon0": ("epsilon0", "float_or_auto"),
                 "delta": ("delta", float),
                 "window_rel": ("window_rel", "floats")},
    "scenario": {"label": ("label", str)},
}


def _convert(raw, kind):
    raw = raw.strip()
    if kind is str:
        return raw
    if kind is float:
        return float(raw)
    if kind is int:
        return int(raw)
    if kind == "floats":
        if not raw:
            return ()
        return tuple(float(tok) for tok in raw.replace(",", " ").split())
    if kind == "float_or_auto":
        return None if raw.lower() == "auto" else float(raw)
    raise ConfigError(f"unhandled kind {kind}")


def load_config(path):
    """Parse a scenario config file into a validated ScenarioConfig."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    cfg = ScenarioConfig()
    for section in parser.sections():
        if section == "sweep":
            continue
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        table = _SECTION_KEYS[section]
        for key, raw in parser.items(section):
            if key not in table:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            attr, kind = table[key]
            try:
                setattr(cfg, attr, _convert(raw, kind))
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc
    if not cfg.label:
        cfg.label = os.path.splitext(os.path.basename(path))[0]
    return cfg.validate()


def load_sweep_lists(path):
    """Sweep lists from the [sweep] section: slopes, x0s, grid_ns."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        parser.read_file(fh)
    if not parser.has_section("sweep"):
        raise ConfigError("sweep config needs a [sweep] section")
    out = {}
    for key in ("slopes", "x0s", "grid_ns"):
        raw = parser.get("sweep", key, fallback="").strip()
        vals = tuple(float(tok) for tok in raw.replace(",", " ").split())
        out[key] = vals
    if not out["slopes"] or not out["x0s"] or not out["grid_ns"]:
        raise ConfigError("sweep lists slopes/x0s/grid_ns must be non-empty")
    return out


# ---------------------------------------------------------------------------
# Scenario assembly
# ---------------------------------------------------------------------------

def build_flow(cfg):
    if cfg.flow_mode == "constant_adverse":
        return model.make_outer_flow(dpdx=cfg.dpdx, x0=cfg.x0)
    if cfg.flow_mode == "polynomial":
        return model.make_outer_flow(p_coeffs=cfg.p_coeffs, x0=cfg.x0)
    return model.make_outer_flow(dpdx=cfg.dpdx, u_ref=cfg.u_ref)


def build_profile(cfg, flow):
    if cfg.profile_mode == "generated":
        return model.make_profile(cfg.slope, flow, cfg.blend_scale)
    if not os.path.exists(cfg.profile_path):
        raise ConfigError(f"profile file not found: {cfg.profile_path}")
    return model.load_profile(cfg.profile_path)


def build_initial_state(cfg, profile, flow):
    x_horizon = cfg.x_end if flow.x0 is None else min(cfg.x_end, flow.x0)
    psi_max = cfg.psi_max
    if psi_max is None:
        psi_max = vm.auto_psi_max(profile, flow, x_horizon)
    grid = PsiGrid(psi_max=psi_max, n=cfg.grid_n, grading=cfg.grading)
    return vm.to_von_mises(profile, grid, pgrad=flow.pressure_gradient(0.0))


def build_controls(cfg, flow):
    x_end = cfg.x_end
    if flow.x0 is not None:
        x_end = min(x_end, 0.999 * flow.x0)
    return vm.MarchControls(dx0=cfg.dx0, dx_min=cfg.dx_min,
                            tau_stop_rel=cfg.tau_stop_rel, x_end=x_end,
                            snapshot_xs=cfg.snapshot_xs, mode=cfg.march_mode,
                            tau_jump_rel=cfg.tau_jump_rel)


# ---------------------------------------------------------------------------
# Analysis document
# ---------------------------------------------------------------------------

def build_analysis_document(cfg, flow, profile, record_vm, record_phys=None):
    """Assemble the JSON analysis document for one scenario run."""
    doc = {
        "label": cfg.label,
        "scenario": cfg.config_hash(),
        "status": record_vm.termination,
        "xstar": None,
        "alpha": None,
        "C_estimate": None,
        "window": list(cfg.window_rel),
        "residual": None,
        "min_uyy": None,
        "max_uyy": None,
        "scan_windows": [],
        "goldstein": [],
    }

    bounds = ana.check_second_derivative_bounds(record_vm, profile, flow)
    doc["min_uyy"] = bounds.min_uyy
    doc["max_uyy"] = bounds.max_uyy
    doc["curvature_hypothesis_constant"] = bounds.hypothesis_constant
    doc["curvature_hypothesis_general"] = bounds.hypothesis_general

    if flow.x0 is not None:
        try:
            crit = model.check_separation_condition(
                profile, flow, mu=cfg.mu, b_const=cfg.b_const,
                epsilon0=cfg.epsilon0)
            doc["separation_criterion"] = {
                "satisfied": crit.satisfied, "slope_sup": crit.slope_sup,
                "threshold": crit.threshold, "psi0": crit.psi0, "y0": crit.y0,
                "B": crit.b_const, "epsilon0": crit.epsilon0, "mu": crit.mu,
                "xstar_bound": 0.5 * crit.mu * flow.x0,
            }
        except ModelError as exc:
            doc["separation_criterion"] = {"error": str(exc)}

    if record_vm.separated:
        fit = ana.estimate_xstar(record_vm, cfg.tail_fraction)
        doc["xstar"] = fit.xstar
        doc["alpha"] = fit.alpha
        doc["residual"] = fit.residual
        doc["amplitude"] = fit.amplitude
        lo, hi = cfg.window_rel
        window = (fit.xstar * (1.0 - hi), fit.xstar * (1.0 - lo))
        try:
            _, c_est = ana.fit_rate_exponent(record_vm, fit.xstar, window)
            doc["C_estimate"] = c_est
        except (FitError, ModelError) as exc:
            doc["C_estimate_error"] = str(exc)
        try:
            scan = ana.scan_quarter_rate(record_vm.snapshots, fit.xstar)
            doc["scan_windows"] = [
                {"k": k, "count": n, "max_ratio": mr, "max_ratio_min_stat": mn}
                for (k, n, mr, mn) in scan.windows]
            doc["scan_band_spread"] = scan.band_spread()
            doc["scan_loglog_slope"] = scan.loglog_slope()
        except (FitError, ModelError) as exc:
            doc["scan_error"] = str(exc)
        try:
            gold = ana.goldstein_fit(record_vm, fit.xstar, n_terms=2)
            doc["goldstein"] = list(gold.coefficients)
            doc["goldstein_residual"] = gold.residual
        except (FitError, ModelError) as exc:
            doc["goldstein_error"] = str(exc)
        try:
            wm = ana.weighted_mass_inequality(record_vm.snapshots, flow, cfg.delta)
            doc["weighted_mass_worst_residual"] = float(np.max(wm[:, 1]))
            doc["weighted_mass_scale"] = float(wm[0, 2])
        except (FitError, ModelError) as exc:
            doc["weighted_mass_error"] = str(exc)

    if record_phys is not None:
        try:
            comp = ana.compare_solvers(record_vm, record_phys, cfg.tail_fraction)
            doc["solver_comparison"] = {
                "max_tau_rel_diff": comp.max_tau_rel_diff,
                "mean_tau_rel_diff": comp.mean_tau_rel_diff,
                "xstar_vm": comp.xstar_vm,
                "xstar_phys": comp.xstar_phys,
                "xstar_rel_diff": comp.xstar_rel_diff,
                "x_cut": comp.x_cut,
            }
        except (FitError, ModelError, PrandtlLabError) as exc:
            doc["solver_comparison_error"] = str(exc)
    return doc


REQUIRED_DOC_KEYS = ("xstar", "alpha", "C_estimate", "window", "residual",
                     "min_uyy", "max_uyy", "scan_windows", "goldstein")


def write_analysis_json(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_analysis_json(path):
    with open(path) as fh:
        doc = json.load(fh)
    missing = [k for k in REQUIRED_DOC_KEYS if k not in doc]
    if missing:
        raise ConfigError(f"analysis document {path} missing keys: {missing}")
    return doc


# ---------------------------------------------------------------------------
# End-to-end run
# ---------------------------------------------------------------------------

def run_scenario(cfg, outdir, vm_only=False):
    """Execute one scenario: both solvers, CSVs, snapshots, analysis JSON."""
    os.makedirs(outdir, exist_ok=True)
    flow = build_flow(cfg)
    profile = build_profile(cfg, flow)
    state0 = build_initial_state(cfg, profile, flow)
    controls = build_controls(cfg, flow)
    scenario_hash = cfg.config_hash()

    record_vm = vm.march_until_separation(state0, flow, controls)
    record_vm.label = cfg.label
    record_vm.scenario_hash = scenario_hash
    records.write_record_csv(record_vm, os.path.join(outdir, "run_vm.csv"))

    record_phys = None
    if not vm_only:
        record_phys = physical.run_physical(profile, flow, controls)
        record_phys.label = cfg.label
        record_phys.scenario_hash = scenario_hash
        records.write_record_csv(record_phys, os.path.join(outdir, "run_phys.csv"))

    snap_dir = os.path.join(outdir, "snapshots")
    os.makedirs(snap_dir, exist_ok=True)
    for req in cfg.snapshot_xs:
        best = min(record_vm.snapshots, key=lambda s: abs(s.x - req))
        vm.write_snapshot(best, os.path.join(snap_dir, f"snapshot_x{req:g}.txt"))

    doc = build_analysis_document(cfg, flow, profile, record_vm, record_phys)
    write_analysis_json(doc, os.path.join(outdir, "analysis.json"))
    return doc, record_vm, record_phys
