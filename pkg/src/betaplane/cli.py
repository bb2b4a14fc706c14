"""Strict-JSON command line front end and the verify scenario registry.

evolve, spectrum, bvp and atlas each run one configured computation and
write CSV data plus a manifest; verify <scenario> re-runs one acceptance
check end to end and reports through the exit status (0 pass, 2 fail,
1 error).  Data CSVs are byte-identical across repeated runs of the same
config; the manifest additionally records wall time, so it is the one
output allowed to differ between runs.  The manifest is written last and
atomically, and a failed run removes whatever partial files it created.
"""

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from . import __version__
from .atlas import classify, closed_form_eigenpair, gamma_point, scan_atlas
from .evolution import (SimSetup, fit_decay, free_stream_oracle, integrate,
                        scattering_profile, spacetime_accumulator,
                        stability_limit)
from .fieldops import (ComplexField, Grid, helmholtz_solve, read_field_csv,
                       sobolev_norm, write_field_csv)
from .profiles import make_profile, pedlosky_semicircle
from .rayleighkuo import (AbsorptionConfig, BvpProblem, NoConvergence,
                          critical_layer_probe, limiting_absorption,
                          solve_bvp)
from .spectra import (SlProblem, discrete_spectrum,
                      embedding_candidate_residual, remove_discrete_projection,
                      sl_spectrum, unstable_modes, semicircle_check)


class ConfigError(ValueError):
    """Rejected configuration: malformed, unknown keys, or bad values."""


@dataclass
class RunConfig:
    subcommand: str
    out: str = "out"
    workers: int = None
    profile: dict = None
    alpha: float = 1.0
    beta: float = 0.0
    n: int = 256
    dt: float = None            # None: 0.9 x the advertised stability limit
    t_final: float = 10.0
    sample_stride: int = 1
    initial_data: dict = None
    c: complex = None           # bvp spectral parameter
    forcing: dict = None        # bvp right-hand side, same shape as initial_data
    alpha_range: tuple = (0.5, 3.0)
    beta_range: tuple = (-4.0, 4.0)
    n_alpha: int = 5
    n_beta: int = 5
    spectrum_n: int = 96
    scenario: str = None

    def echo(self):
        """JSON-safe copy of the fields the subcommand actually consumes."""
        doc = {"subcommand": self.subcommand, "out": self.out}
        if self.subcommand in ("evolve", "spectrum", "bvp"):
            doc.update(profile=self.profile, alpha=self.alpha, beta=self.beta,
                       n=self.n)
        if self.subcommand == "evolve":
            doc.update(dt=self.dt, t_final=self.t_final,
                       sample_stride=self.sample_stride,
                       initial_data=self.initial_data)
        if self.subcommand == "bvp":
            doc.update(c=[self.c.real, self.c.imag], forcing=self.forcing)
        if self.subcommand == "atlas":
            doc.update(alpha_range=list(self.alpha_range),
                       beta_range=list(self.beta_range),
                       n_alpha=self.n_alpha, n_beta=self.n_beta,
                       spectrum_n=self.spectrum_n, workers=self.workers)
        if self.subcommand == "verify":
            doc.update(scenario=self.scenario, workers=self.workers)
        return doc


_COMMON_KEYS = {"out"}
_ALLOWED = {
    "evolve": _COMMON_KEYS | {"profile", "alpha", "beta", "n", "dt",
                              "t_final", "sample_stride", "initial_data"},
    "spectrum": _COMMON_KEYS | {"profile", "alpha", "beta", "n"},
    "bvp": _COMMON_KEYS | {"profile", "alpha", "beta", "n", "c", "forcing"},
    "atlas": _COMMON_KEYS | {"alpha_range", "beta_range", "n_alpha", "n_beta",
                             "spectrum_n", "workers"},
    "verify": _COMMON_KEYS | {"scenario", "workers"},
}
_DEFAULT_PROFILE = {"name": "couette", "params": {}}
_DEFAULT_DATA = {"kind": "sine", "modes": [[1, 1.0, 0.0]]}


def _load_source(source):
    if source is None:
        return {}
    if source == "-":
        text = sys.stdin.read()
    elif source.lstrip().startswith("{"):
        text = source
    else:
        if not os.path.exists(source):
            raise ConfigError("config file not found: %s" % source)
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("malformed JSON config: %s" % exc) from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def _require_number(doc, key, positive=False, integer=False):
    if key not in doc:
        return
    val = doc[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError("%s must be a number" % key)
    if integer and int(val) != val:
        raise ConfigError("%s must be an integer" % key)
    if positive and val <= 0:
        raise ConfigError("%s must be positive" % key)


def _pair(doc, key):
    if key not in doc:
        return
    val = doc[key]
    if (not isinstance(val, (list, tuple)) or len(val) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float))
                   for v in val)):
        raise ConfigError("%s must be a pair of numbers" % key)


def parse_config(source, subcommand, overrides=None):
    """Validate a config for one subcommand and fill the documented defaults.

    source is a path, inline JSON text, or '-' for stdin; overrides holds
    the command line flags, which win over config values.  Unknown keys are
    rejected outright.  An evolve dt beyond the stability rule is refused
    here with the computed bound in the message, so a bad config never
    starts a run.
    """
    if subcommand not in _ALLOWED:
        raise ConfigError("unknown subcommand %r" % subcommand)
    doc = _load_source(source)
    unknown = sorted(set(doc) - _ALLOWED[subcommand])
    if unknown:
        raise ConfigError("unknown config keys for %s: %s"
                          % (subcommand, ", ".join(unknown)))
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value

    for key in ("alpha", "t_final", "dt", "spectrum_n"):
        _require_number(doc, key, positive=True, integer=key == "spectrum_n")
    for key in ("n", "n_alpha", "n_beta", "sample_stride", "workers"):
        _require_number(doc, key, positive=True, integer=True)
    _require_number(doc, "beta")
    _pair(doc, "alpha_range")
    _pair(doc, "beta_range")
    _pair(doc, "c")

    cfg = RunConfig(subcommand=subcommand)
    cfg.out = doc.get("out", cfg.out)
    cfg.workers = int(doc["workers"]) if "workers" in doc else None
    cfg.profile = doc.get("profile", dict(_DEFAULT_PROFILE))
    if not isinstance(cfg.profile, dict) or "name" not in cfg.profile:
        raise ConfigError("profile must be an object with a name")
    extra = sorted(set(cfg.profile) - {"name", "params"})
    if extra:
        raise ConfigError("unknown profile keys: %s" % ", ".join(extra))
    cfg.alpha = float(doc.get("alpha", cfg.alpha))
    cfg.beta = float(doc.get("beta", cfg.beta))
    cfg.n = int(doc.get("n", cfg.n))
    cfg.t_final = float(doc.get("t_final", cfg.t_final))
    cfg.sample_stride = int(doc.get("sample_stride", cfg.sample_stride))
    cfg.initial_data = doc.get("initial_data", dict(_DEFAULT_DATA))
    cfg.forcing = doc.get("forcing", dict(_DEFAULT_DATA))
    cfg.alpha_range = tuple(doc.get("alpha_range", cfg.alpha_range))
    cfg.beta_range = tuple(doc.get("beta_range", cfg.beta_range))
    cfg.n_alpha = int(doc.get("n_alpha", cfg.n_alpha))
    cfg.n_beta = int(doc.get("n_beta", cfg.n_beta))
    cfg.spectrum_n = int(doc.get("spectrum_n", cfg.spectrum_n))
    cfg.scenario = doc.get("scenario")
    if "c" in doc:
        cfg.c = complex(doc["c"][0], doc["c"][1])

    if subcommand == "bvp" and cfg.c is None:
        raise ConfigError("bvp needs c as a [re, im] pair")
    if subcommand == "verify":
        if cfg.scenario is None:
            raise ConfigError("verify needs a scenario; available: %s"
                              % ", ".join(sorted(SCENARIOS)))
        if cfg.scenario not in SCENARIOS:
            raise ConfigError("unknown scenario %r; available: %s"
                              % (cfg.scenario, ", ".join(sorted(SCENARIOS))))

    if subcommand == "evolve":
        profile = _build_profile(cfg.profile)
        grid = Grid(cfg.n, profile.y1, profile.y2)
        limit = stability_limit(profile, cfg.alpha, cfg.beta, grid)
        if "dt" in doc:
            cfg.dt = float(doc["dt"])
            if cfg.dt > limit * (1 + 1e-12):
                raise ConfigError("dt %.6g exceeds the stability bound %.6g"
                                  % (cfg.dt, limit))
        else:
            cfg.dt = min(0.9 * limit, cfg.t_final)
    return cfg


def _build_profile(spec):
    try:
        return make_profile(spec["name"], spec.get("params"))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError("bad profile spec: %s" % exc) from exc


def _sine_series(grid, modes):
    length = grid.y2 - grid.y1
    vals = np.zeros(grid.n + 1, dtype=complex)
    for entry in modes:
        if len(entry) != 3:
            raise ConfigError("sine modes are [k, re, im] triples")
        k, re, im = entry
        if int(k) != k or k < 1:
            raise ConfigError("sine mode index must be a positive integer")
        vals += complex(re, im) * np.sin(k * np.pi * (grid.nodes - grid.y1) / length)
    return ComplexField(grid, vals)


def build_field(spec, grid, alpha, profile=None, beta=0.0):
    """Materialize an initial-data or forcing spec on a grid.

    Kinds: sine (series of wall-to-wall sine modes), file (nodal CSV), and
    curve-eigenmode (closed-form resonant pair; the grid must cover the
    curve's validity interval).  remove_discrete projects the accepted
    discrete modes out afterwards, which is how hypothesis-grade data is
    prepared for the damping scenarios.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("data spec must be an object with a kind")
    known = {"sine": {"kind", "modes", "remove_discrete"},
             "file": {"kind", "path", "remove_discrete"},
             "curve-eigenmode": {"kind", "curve", "parameter", "remove_discrete"}}
    kind = spec["kind"]
    if kind not in known:
        raise ConfigError("unknown data kind %r; known: %s"
                          % (kind, ", ".join(sorted(known))))
    unknown = sorted(set(spec) - known[kind])
    if unknown:
        raise ConfigError("unknown data keys: %s" % ", ".join(unknown))
    if kind == "sine":
        field = _sine_series(grid, spec.get("modes", [[1, 1.0, 0.0]]))
    elif kind == "file":
        field = read_field_csv(grid, spec["path"])
    else:
        c, phi, _ = closed_form_eigenpair(spec["curve"], spec["parameter"], grid)
        vals = -(phi.second_derivative() - alpha**2 * phi.values)
        field = ComplexField(grid, vals)
    if spec.get("remove_discrete"):
        if profile is None:
            raise ConfigError("remove_discrete needs a profile")
        spectrum = discrete_spectrum(profile, alpha, beta, grid)
        field = remove_discrete_projection(field, spectrum, alpha)
    return field


class Outputs:
    """Files written by one run: paths, hashes, and failure cleanup."""

    def __init__(self, directory):
        os.makedirs(directory, exist_ok=True)
        self.directory = directory
        self.names = []

    def path(self, name):
        self.names.append(name)
        return os.path.join(self.directory, name)

    def entries(self):
        rows = []
        for name in self.names:
            full = os.path.join(self.directory, name)
            digest = hashlib.sha256()
            with open(full, "rb") as fh:
                digest.update(fh.read())
            rows.append({"path": name, "bytes": os.path.getsize(full),
                         "sha256": digest.hexdigest()})
        return rows

    def discard(self):
        for name in self.names:
            full = os.path.join(self.directory, name)
            if os.path.exists(full):
                os.unlink(full)
        self.names = []


def _write_manifest(out, config_echo, grid_doc, dt, summary, wall_time,
                    passed=None):
    doc = {
        "tool": {"name": "betaplane", "version": __version__},
        "config": config_echo,
        "grid": grid_doc,
        "dt": dt,
        "wall_time_s": round(wall_time, 3),
        "outputs": out.entries(),
        "summary": summary,
    }
    if passed is not None:
        doc["pass"] = bool(passed)
    blob = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    fd, tmp = tempfile.mkstemp(dir=out.directory, prefix=".manifest-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(blob)
        os.replace(tmp, os.path.join(out.directory, "manifest.json"))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return doc


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("%.17g" % v if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _diagnostics_rows(traj):
    rows = []
    for rec in traj.records:
        row = [rec.t, rec.enstrophy, rec.v_norm, rec.v2_norm,
               rec.boundary_traces[0].real, rec.boundary_traces[0].imag,
               rec.boundary_traces[1].real, rec.boundary_traces[1].imag]
        row.extend(rec.critical_values)
        row.append(float("nan") if rec.omega1_norm is None else rec.omega1_norm)
        rows.append([float(v) for v in row])
    return rows


def _diagnostics_header(traj):
    head = ["t", "enstrophy", "v_norm", "v2_norm",
            "trace1_re", "trace1_im", "trace2_re", "trace2_im"]
    head.extend("crit_%d" % i for i in range(len(traj.critical_ys)))
    head.append("omega1_norm")
    return head


def _run_evolve(cfg, out):
    profile = _build_profile(cfg.profile)
    grid = Grid(cfg.n, profile.y1, profile.y2)
    omega0 = build_field(cfg.initial_data, grid, cfg.alpha, profile, cfg.beta)
    setup = SimSetup(profile, cfg.alpha, cfg.beta, grid, cfg.dt, cfg.t_final,
                     sample_stride=cfg.sample_stride)
    traj = integrate(omega0, setup)
    _write_rows(out.path("diagnostics.csv"), _diagnostics_header(traj),
                _diagnostics_rows(traj))
    write_field_csv(out.path("final_field.csv"), traj.final_field)
    last = traj.records[-1]
    summary = {"samples": len(traj.records),
               "enstrophy_final": last.enstrophy,
               "v_norm_final": last.v_norm,
               "v2_norm_final": last.v2_norm,
               "aborted_at": traj.aborted_at}
    grid_doc = {"n": grid.n, "domain": [grid.y1, grid.y2]}
    return 0, grid_doc, cfg.dt, summary, None


def _run_spectrum(cfg, out):
    profile = _build_profile(cfg.profile)
    grid = Grid(cfg.n, profile.y1, profile.y2)
    spec = discrete_spectrum(profile, cfg.alpha, cfg.beta, grid)
    report = {"eigenvalues": [
        {"re": float(c.real), "im": float(c.imag),
         "accepted": bool(a), "refinement_gap": float(g)}
        for c, a, g in zip(spec.eigenvalues, spec.accepted, spec.refinement_gap)],
        "semicircle": bool(semicircle_check(spec, profile, cfg.alpha, cfg.beta))}
    with open(out.path("eigenvalues.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    header = ["y"]
    columns = [grid.nodes]
    for i in np.flatnonzero(spec.accepted):
        header.extend(["mode%d_re" % i, "mode%d_im" % i])
        columns.extend([spec.right_modes[i].values.real,
                        spec.right_modes[i].values.imag])
    _write_rows(out.path("modes.csv"), header,
                [[float(col[j]) for col in columns] for j in range(grid.n + 1)])
    n_unstable = len(unstable_modes(spec, 1e-6))
    summary = {"n_eigenvalues": len(spec.eigenvalues),
               "n_accepted": int(spec.accepted.sum()),
               "n_unstable": n_unstable,
               "semicircle": report["semicircle"]}
    grid_doc = {"n": grid.n, "domain": [grid.y1, grid.y2]}
    return 0, grid_doc, None, summary, None


def _run_bvp(cfg, out):
    profile = _build_profile(cfg.profile)
    grid = Grid(cfg.n, profile.y1, profile.y2)
    forcing = build_field(cfg.forcing, grid, cfg.alpha, profile, cfg.beta)
    sol = solve_bvp(BvpProblem(profile, cfg.alpha, cfg.beta, cfg.c, forcing),
                    grid)
    write_field_csv(out.path("phi.csv"), sol.phi)
    report = {"residual_sup": sol.residual_sup,
              "h1_ratio": sol.h1_ratio,
              "boundary_derivatives": [[d.real, d.imag]
                                       for d in sol.boundary_derivatives],
              "condition": sol.condition}
    with open(out.path("report.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    summary = {"residual_sup": sol.residual_sup, "h1_ratio": sol.h1_ratio}
    grid_doc = {"n": grid.n, "domain": [grid.y1, grid.y2]}
    return 0, grid_doc, None, summary, None


def _run_atlas(cfg, out):
    workers = cfg.workers or os.cpu_count() or 1
    scan = scan_atlas(cfg.alpha_range, cfg.beta_range, cfg.n_alpha, cfg.n_beta,
                      workers=workers, spectrum_n=cfg.spectrum_n)
    rows = []
    for i, a in enumerate(scan.alphas):
        for j, b in enumerate(scan.betas):
            rows.append([float(a), float(b), scan.tags[i][j],
                         float(scan.growth[i, j])])
    _write_rows(out.path("atlas.csv"), ["alpha", "beta", "tag", "growth_rate"],
                rows)
    tag_counts = {}
    for i in range(cfg.n_alpha):
        for j in range(cfg.n_beta):
            tag_counts[scan.tags[i][j]] = tag_counts.get(scan.tags[i][j], 0) + 1
    finite = scan.growth[np.isfinite(scan.growth)]
    summary = {"n_points": cfg.n_alpha * cfg.n_beta,
               "tag_counts": tag_counts,
               "max_growth": float(finite.max()) if finite.size else 0.0,
               "n_errors": len(scan.errors)}
    with open(out.path("summary.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    grid_doc = {"n_alpha": cfg.n_alpha, "n_beta": cfg.n_beta}
    return 0, grid_doc, None, summary, None


# --- verify scenarios, one per acceptance check ---

@dataclass
class ScenarioResult:
    passed: bool
    summary: dict


SCENARIOS = {}


def _scenario(name):
    def register(fn):
        SCENARIOS[name] = fn
        return fn
    return register


def _sine_mode(grid, k=1):
    length = grid.y2 - grid.y1
    return ComplexField(grid, np.sin(k * np.pi * (grid.nodes - grid.y1) / length)
                        + 0j)


@_scenario("couette-transport")
def _sc_transport(out, workers):
    """Free streaming is exact for couette at beta 0, and RK4 is 4th order."""
    profile = make_profile("couette", {})
    grid = Grid(128, 0.0, 1.0)
    omega0 = _sine_mode(grid)
    sups = {}
    for dt in (1e-3, 5e-4):
        setup = SimSetup(profile, 1.0, 0.0, grid, dt, 2.0, sample_stride=200)
        traj = integrate(omega0, setup)
        oracle = free_stream_oracle(omega0, setup, traj.times[-1])
        sups[dt] = float(np.max(np.abs(traj.final_field.values - oracle.values)))
        if dt == 1e-3:
            _write_rows(out.path("transport_diagnostics.csv"),
                        _diagnostics_header(traj), _diagnostics_rows(traj))
    ratio = sups[1e-3] / sups[5e-4]
    passed = sups[1e-3] < 1e-8 and 12.0 <= ratio <= 20.0
    return ScenarioResult(passed, {"sup_error": sups[1e-3],
                                   "sup_error_halved_dt": sups[5e-4],
                                   "halving_ratio": ratio})


@_scenario("helmholtz-kernel")
def _sc_helmholtz(out, workers):
    """Sine-mode kernel identities and the norm interpolation chain."""
    alpha = 1.3
    grid = Grid(64, 0.0, 1.0)
    rows = []
    worst_id = 0.0
    for k in (1, 2, 3):
        omega = _sine_mode(grid, k)
        lam = (k * np.pi) ** 2 + alpha**2
        psi = helmholtz_solve(omega, alpha)
        sup = float(np.max(np.abs(psi.values - omega.values / lam)))
        nm = sobolev_norm(omega, -1, alpha) ** 2
        rel = abs(nm - 0.5 / lam) * lam / 0.5
        rows.append([float(k), sup, rel])
        worst_id = max(worst_id, sup, rel)
    _write_rows(out.path("kernel_identities.csv"),
                ["k", "psi_sup_error", "neg1_norm_rel_error"], rows)
    rng = np.random.default_rng(2026)
    worst_chain = 0.0
    for _ in range(100):
        vals = rng.standard_normal(grid.n + 1) + 1j * rng.standard_normal(grid.n + 1)
        vals[0] = vals[-1] = 0.0
        omega = ComplexField(grid, vals)
        norms = {k: sobolev_norm(omega, k, alpha) for k in range(-2, 3)}
        for j in range(-2, 3):
            for k in range(j + 1, 3):
                excess = alpha ** (k - j) * norms[j] / norms[k] - 1.0
                worst_chain = max(worst_chain, excess)
    passed = worst_id < 1e-10 and worst_chain < 1e-10
    return ScenarioResult(passed, {"worst_identity_error": worst_id,
                                   "worst_chain_excess": worst_chain})


@_scenario("manufactured-bvp")
def _sc_bvp(out, workers):
    """Quadratic manufactured solution, conjugation, and affine covariance."""
    alpha, beta, c = 1.0, 0.3, 1j
    grid = Grid(64, 0.0, 1.0)
    y = grid.nodes
    phi_star = y * (1 - y)
    d2_star = -2.0 * np.ones_like(y)
    couette = make_profile("couette", {})
    u = couette.eval(y)
    f_vals = (u - c) * (d2_star - alpha**2 * phi_star) + beta * phi_star
    forcing = ComplexField(grid, f_vals)
    sol = solve_bvp(BvpProblem(couette, alpha, beta, c, forcing), grid)
    sup = float(np.max(np.abs(sol.phi.values - phi_star)))
    write_field_csv(out.path("manufactured_phi.csv"), sol.phi)

    conj_sol = solve_bvp(BvpProblem(couette, alpha, beta, np.conj(c),
                                    ComplexField(grid, np.conj(f_vals))), grid)
    conj_err = float(np.max(np.abs(conj_sol.phi.values - np.conj(sol.phi.values))))

    # affine map u -> 2u + 1/2 scales the whole equation by 2
    stretched = make_profile("poly", {"coefficients": [0.5, 2.0],
                                      "domain": (0.0, 1.0)})
    sol2 = solve_bvp(BvpProblem(stretched, alpha, 2 * beta, 2 * c + 0.5,
                                ComplexField(grid, 2 * f_vals)), grid)
    cov_err = float(np.max(np.abs(sol2.phi.values - sol.phi.values)))
    passed = sup < 1e-10 and conj_err < 1e-8 and cov_err < 1e-8
    return ScenarioResult(passed, {"sup_error": sup,
                                   "conjugation_error": conj_err,
                                   "covariance_error": cov_err})


@_scenario("sinus-closed-forms")
def _sc_closed_forms(out, workers):
    """Resonant-pair residuals and the eigenvalue ladder identities."""
    sinus = make_profile("sinus", {})
    rows = []
    worst = {"gamma1": 0.0, "gamma2": 0.0, "gamma4": 0.0}
    cases = ([("gamma1", b) for b in (0.0, 2.0)]
             + [("gamma2", r) for r in (0.3, 0.5, 0.7)]
             + [("gamma4", r) for r in (0.3, 0.45)])
    for curve, par in cases:
        point = gamma_point(curve, par)
        c, phi, validity = closed_form_eigenpair(curve, par)
        res = embedding_candidate_residual(sinus, point.alpha, point.beta,
                                           c, phi, validity)
        worst[curve] = max(worst[curve], res)
        rows.append([curve, float(par), float(res)])
    _write_rows(out.path("pair_residuals.csv"),
                ["curve", "parameter", "residual"], rows)

    grid = Grid(512, -1.0, 1.0)
    r = 0.3
    pi2 = np.pi**2
    flat = sl_spectrum(SlProblem(lambda y: -pi2 * np.ones_like(y),
                                 (-1.0, 1.0), 3), grid)
    ladder = sl_spectrum(SlProblem(
        lambda y: -pi2 + pi2 * (r**2 - r / 2) / np.cos(np.pi * y / 2) ** 2,
        (-1.0, 1.0), 3), grid)
    half = sl_spectrum(SlProblem(
        lambda y: -pi2 + pi2 * (r**2 - r / 2) / np.sin(np.pi * y / 2) ** 2,
        (0.0, 1.0), 2), Grid(512, 0.0, 1.0))
    checks = [
        ("flat_second_zero", abs(flat[1]) / (3 * pi2 / 4)),
        ("ladder_second", abs(ladder[1] - pi2 * (r**2 + r - 0.75))
         / abs(pi2 * (r**2 + r - 0.75))),
        ("ladder_third", abs(ladder[2] - pi2 * (r**2 + 2 * r))
         / abs(pi2 * (r**2 + 2 * r))),
        ("half_second", abs(half[1] - pi2 * (r**2 + 3 * r + 1.25))
         / abs(pi2 * (r**2 + 3 * r + 1.25))),
    ]
    _write_rows(out.path("sl_identities.csv"), ["identity", "rel_error"],
                [[name, float(err)] for name, err in checks])
    worst_sl = max(err for _, err in checks)
    passed = (worst["gamma1"] < 1e-10 and worst["gamma2"] < 1e-10
              and worst["gamma4"] < 1e-8 and worst_sl < 1e-4)
    return ScenarioResult(passed, {"worst_gamma1": worst["gamma1"],
                                   "worst_gamma2": worst["gamma2"],
                                   "worst_gamma4": worst["gamma4"],
                                   "worst_sl_rel_error": worst_sl})


_PARAM_RANGES = {"gamma1": (-np.pi**2 / 2, np.pi**2 / 2),
                 "gamma2": (0.25, 1.0),
                 "gamma3": (0.25, 0.5),
                 "gamma4": (0.25, 0.5)}


@_scenario("atlas-classification")
def _sc_atlas(out, workers):
    """Curve points round-trip through classify; landmarks hit their tags."""
    rng = np.random.default_rng(7)
    rows = []
    failures = 0
    for curve, (lo, hi) in _PARAM_RANGES.items():
        span = hi - lo
        for _ in range(50):
            par = float(lo + span * (0.001 + 0.998 * rng.random()))
            point = gamma_point(curve, par)
            region = classify(point.alpha, point.beta)
            err = abs((region.parameter if region.parameter is not None
                       else float("nan")) - par)
            ok = region.tag == curve and err <= 1e-9 * max(1.0, abs(par))
            failures += not ok
            rows.append([curve, par, point.alpha, point.beta, region.tag,
                         float(err)])
    _write_rows(out.path("roundtrips.csv"),
                ["curve", "parameter", "alpha", "beta", "tag", "parameter_error"],
                rows)
    corner = classify(np.sqrt(3.0) * np.pi / 2, -np.pi**2 / 2)
    interior = classify(np.pi, 0.0)
    passed = (failures == 0 and corner.tag == "corner"
              and corner.embedding_c == 1.0 and interior.tag == "Gamma")
    return ScenarioResult(passed, {"roundtrip_failures": failures,
                                   "corner_tag": corner.tag,
                                   "corner_c": corner.embedding_c,
                                   "interior_tag": interior.tag})


@_scenario("resonance-non-damping")
def _sc_resonance(out, workers):
    """A resonant eigenmode neither decays nor scatters."""
    alpha = np.sqrt(3.0) * np.pi / 2
    grid = Grid(256, -1.0, 1.0)
    sinus = make_profile("sinus", {})
    _, phi, _ = closed_form_eigenpair("gamma1", 0.0, grid)
    omega0 = ComplexField(grid, -(phi.second_derivative()
                                  - alpha**2 * phi.values))
    setup = SimSetup(sinus, alpha, 0.0, grid, 0.005, 10.0, sample_stride=20)
    traj = integrate(omega0, setup)
    _write_rows(out.path("resonance_diagnostics.csv"),
                _diagnostics_header(traj), _diagnostics_rows(traj))
    v0 = traj.records[0].v_norm
    drift = max(abs(rec.v_norm - v0) for rec in traj.records) / v0
    _, increments = scattering_profile(traj)
    min_increment = float(min(increments))
    passed = drift < 1e-6 and min_increment > 0.1
    return ScenarioResult(passed, {"v_norm_drift": drift,
                                   "min_scatter_increment": min_increment})


def _decay_run(n):
    profile = make_profile("poly", {"coefficients": [0.0, 2.0],
                                    "domain": (0.0, 1.0)})
    grid = Grid(n, 0.0, 1.0)
    omega0 = _sine_mode(grid)
    setup = SimSetup(profile, 1.0, 0.5, grid, 0.02, 40.0, sample_stride=5)
    return profile, integrate(omega0, setup)


def _clip(traj, tmax):
    keep = [i for i, t in enumerate(traj.times) if t <= tmax + 1e-12]
    return SimpleNamespace(times=[traj.times[i] for i in keep],
                           records=[traj.records[i] for i in keep])


@_scenario("decay-rates")
def _sc_decay(out, workers):
    """Algebraic damping rates on a spectrally clean monotone profile."""
    profile = make_profile("poly", {"coefficients": [0.0, 2.0],
                                    "domain": (0.0, 1.0)})
    spectrum = discrete_spectrum(profile, 1.0, 0.5, Grid(128, 0.0, 1.0))
    n_accepted = int(spectrum.accepted.sum())
    window = (10.0, 40.0)
    fits = {}
    for n in (512, 768):
        _, traj = _decay_run(n)
        v_fit = fit_decay([(r.t, r.v_norm) for r in traj.records], window)
        v2_fit = fit_decay([(r.t, r.v2_norm) for r in traj.records], window)
        fits[n] = (v_fit, v2_fit)
        if n == 512:
            _write_rows(out.path("decay_diagnostics.csv"),
                        _diagnostics_header(traj), _diagnostics_rows(traj))
    v512, v2512 = fits[512][0][0], fits[512][1][0]
    v768, v2768 = fits[768][0][0], fits[768][1][0]
    passed = (n_accepted == 0
              and -1.2 <= v512 <= -0.8 and -2.4 <= v2512 <= -1.6
              and abs(v512 - v768) <= 0.1 and abs(v2512 - v2768) <= 0.1)
    return ScenarioResult(passed, {"n_accepted_modes": n_accepted,
                                   "v_exponent_512": v512,
                                   "v2_exponent_512": v2512,
                                   "v_exponent_768": v768,
                                   "v2_exponent_768": v2768,
                                   "v_fit_r2": fits[512][0][2],
                                   "v2_fit_r2": fits[512][1][2]})


@_scenario("spacetime-plateau")
def _sc_spacetime(out, workers):
    """The space-time velocity and wall integrals saturate by T=20."""
    _, traj = _decay_run(512)
    _, _, r40 = spacetime_accumulator(traj, 1.0)
    _, _, r20 = spacetime_accumulator(_clip(traj, 20.0), 1.0)
    vel_growth = r40[0] / r20[0] - 1.0
    bnd_growth = r40[1] / r20[1] - 1.0
    _write_rows(out.path("spacetime_ratios.csv"),
                ["T", "velocity_ratio", "boundary_ratio"],
                [[20.0, float(r20[0]), float(r20[1])],
                 [40.0, float(r40[0]), float(r40[1])]])
    passed = vel_growth < 0.10 and bnd_growth < 0.10
    return ScenarioResult(passed, {"velocity_ratio_growth": vel_growth,
                                   "boundary_ratio_growth": bnd_growth})


@_scenario("vectorfield-boundary")
def _sc_vectorfield(out, workers):
    """The commuting vector field stays bounded; wall traces decay like 1/t."""
    stats = {}
    for n in (512, 768):
        _, traj = _decay_run(n)
        omega0 = _sine_mode(traj.final_field.grid)
        h1 = sobolev_norm(omega0, 1, 1.0)
        om1 = max(rec.omega1_norm for rec in traj.records) / h1
        wall = max((1 + rec.t) * max(abs(rec.boundary_traces[0]),
                                     abs(rec.boundary_traces[1]))
                   for rec in traj.records)
        stats[n] = (om1, wall)
        if n == 512:
            _write_rows(out.path("vectorfield_series.csv"),
                        ["t", "omega1_over_h1", "scaled_wall_trace"],
                        [[rec.t, rec.omega1_norm / h1,
                          (1 + rec.t) * max(abs(rec.boundary_traces[0]),
                                            abs(rec.boundary_traces[1]))]
                         for rec in traj.records])
    om1_drift = abs(stats[512][0] - stats[768][0])
    passed = (stats[512][0] < 10.0 and om1_drift < 1e-3
              and stats[512][1] < 10.0)
    return ScenarioResult(passed, {"omega1_ratio_512": stats[512][0],
                                   "omega1_ratio_768": stats[768][0],
                                   "omega1_ratio_drift": om1_drift,
                                   "max_scaled_wall_trace": stats[512][1]})


@_scenario("depletion")
def _sc_depletion(out, workers):
    """Vorticity drains from the stationary streamline, walls stay silent."""
    alpha, beta = np.pi, np.pi**2 / 4
    region = classify(alpha, beta)
    sinus = make_profile("sinus", {})
    grid = Grid(512, -1.0, 1.0)
    omega0 = ComplexField.from_function(
        grid, lambda y: np.cos(np.pi * y / 2) + 0j)
    t_final = 30.0 / alpha
    setup = SimSetup(sinus, alpha, beta, grid, t_final / 2400, t_final,
                     sample_stride=24)
    traj = integrate(omega0, setup)
    ys = list(traj.critical_ys)
    center = int(np.argmin(np.abs(ys)))
    walls = [i for i in range(len(ys)) if i != center]
    _write_rows(out.path("depletion_series.csv"),
                ["t"] + ["abs_omega_at_%g" % ys[i] for i in range(len(ys))],
                [[rec.t] + [float(v) for v in rec.critical_values]
                 for rec in traj.records])
    center_ratio = (traj.records[-1].critical_values[center]
                    / traj.records[0].critical_values[center])
    wall_max = max(rec.critical_values[i]
                   for rec in traj.records for i in walls)
    passed = (region.tag == "Gamma" and center_ratio < 0.3
              and wall_max < 1e-8)
    return ScenarioResult(passed, {"region_tag": region.tag,
                                   "center_ratio": float(center_ratio),
                                   "max_wall_amplitude": float(wall_max)})


@_scenario("critical-layer")
def _sc_layer(out, workers):
    """Stream function vanishes and layer vorticity stays integrable."""
    sinus = make_profile("sinus", {})
    eps_list = tuple(np.logspace(-4, -1, 10))
    probes = {}
    for n in (512, 768):
        grid = Grid(n, -1.0, 1.0)
        omega = ComplexField.from_function(
            grid, lambda y: np.sin(np.pi * y) * (1 + y) / 2 + 0j)
        probes[n] = critical_layer_probe(sinus, 1.0, 0.0, 0.0, eps_list,
                                         omega, grid)
    p512, p768 = probes[512], probes[768]
    _write_rows(out.path("layer_scaling.csv"),
                ["eps", "abs_phi", "abs_layer_vorticity"],
                [[float(e), float(p), float(w)]
                 for e, p, w in zip(p512.eps, p512.phi_values,
                                    p512.wlayer_values)])
    passed = (p512.exponent_phi >= 0.2 and p768.exponent_phi >= 0.2
              and p512.exponent_wlayer >= -0.8 and p768.exponent_wlayer >= -0.8
              and abs(p512.exponent_phi - p768.exponent_phi) <= 0.1
              and abs(p512.exponent_wlayer - p768.exponent_wlayer) <= 0.1)
    return ScenarioResult(passed, {"exponent_phi_512": p512.exponent_phi,
                                   "exponent_phi_768": p768.exponent_phi,
                                   "exponent_wlayer_512": p512.exponent_wlayer,
                                   "exponent_wlayer_768": p768.exponent_wlayer})


@_scenario("semicircle")
def _sc_semicircle(out, workers):
    """Unstable speeds respect the beta-enlarged semicircle at three points."""
    sinus = make_profile("sinus", {})
    rows = []
    passed = True
    worst_shift = 0.0
    for alpha, beta in ((0.5, 0.0), (0.5, 1.0), (1.0, -1.0)):
        coarse = discrete_spectrum(sinus, alpha, beta, Grid(128, -1.0, 1.0))
        fine = discrete_spectrum(sinus, alpha, beta, Grid(256, -1.0, 1.0))
        acc_c = coarse.eigenvalues[coarse.accepted]
        acc_f = fine.eigenvalues[fine.accepted]
        if len(acc_c) != len(acc_f):
            passed = False
            shift = float("inf")
        elif len(acc_c):
            shift = float(np.max(np.min(np.abs(acc_f[None, :] - acc_c[:, None]),
                                        axis=1)))
        else:
            shift = 0.0
        worst_shift = max(worst_shift, shift)
        center, radius = pedlosky_semicircle(sinus, alpha, beta)
        for c in unstable_modes(coarse, 1e-6):
            inside = abs(c - center) <= radius + 1e-6
            passed = passed and inside
            rows.append([alpha, beta, c.real, c.imag,
                         float(abs(c - center) - radius)])
        passed = (passed and shift < 1e-6
                  and semicircle_check(coarse, sinus, alpha, beta))
    _write_rows(out.path("unstable_modes.csv"),
                ["alpha", "beta", "c_re", "c_im", "disk_margin"], rows)
    return ScenarioResult(passed, {"worst_eigenvalue_shift": worst_shift,
                                   "n_unstable_rows": len(rows)})


@_scenario("limiting-absorption")
def _sc_absorption(out, workers):
    """Two-sided boundary values converge in range and merge off range."""
    couette = make_profile("couette", {})
    # odd node count keeps every node off u = c, where the degenerate
    # collocation row would poison the small-eps solves
    grid = Grid(127, 0.0, 1.0)
    omega = _sine_mode(grid)
    cfg = AbsorptionConfig()
    try:
        plus = limiting_absorption(couette, 1.0, 0.0, 0.5, omega, +1, cfg, grid)
        minus = limiting_absorption(couette, 1.0, 0.0, 0.5, omega, -1, cfg, grid)
        converged = True
    except NoConvergence:
        converged = False
        plus = minus = None
    off_p = limiting_absorption(couette, 1.0, 0.0, 2.0, omega, +1, cfg, grid)
    off_m = limiting_absorption(couette, 1.0, 0.0, 2.0, omega, -1, cfg, grid)
    off_gap = float(np.max(np.abs(off_p.values - off_m.values)))
    if converged:
        write_field_csv(out.path("phi_plus.csv"), plus)
        write_field_csv(out.path("phi_minus.csv"), minus)
    passed = converged and off_gap < 1e-10
    return ScenarioResult(passed, {"in_range_converged": converged,
                                   "off_range_gap": off_gap,
                                   "tolerance": cfg.convergence_tol})


def _run_verify(cfg, out):
    result = SCENARIOS[cfg.scenario](out, cfg.workers or 1)
    status = 0 if result.passed else 2
    return status, {"scenario": cfg.scenario}, None, result.summary, result.passed


_RUNNERS = {"evolve": _run_evolve, "spectrum": _run_spectrum,
            "bvp": _run_bvp, "atlas": _run_atlas, "verify": _run_verify}


def run(cfg):
    """Execute a validated config; returns (exit status, manifest dict)."""
    out = Outputs(cfg.out)
    started = time.monotonic()
    try:
        status, grid_doc, dt, summary, passed = _RUNNERS[cfg.subcommand](cfg, out)
    except BaseException:
        out.discard()
        raise
    manifest = _write_manifest(out, cfg.echo(), grid_doc, dt, summary,
                               time.monotonic() - started, passed)
    return status, manifest


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="betaplane",
        description="single-mode channel shear flow runs and checks")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, text in (("evolve", "march one mode and record diagnostics"),
                       ("spectrum", "discrete eigenvalues with acceptance flags"),
                       ("bvp", "solve the spectral boundary value problem"),
                       ("atlas", "classify a parameter grid with growth rates"),
                       ("verify", "run one named acceptance scenario")):
        p = sub.add_parser(name, help=text)
        if name == "verify":
            p.add_argument("scenario", nargs="?", default=None,
                           help="scenario name; omit to use the config value")
        p.add_argument("--config", default=None,
                       help="path, inline JSON, or - for stdin")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--n", type=int, default=None, help="grid intervals")
        p.add_argument("--dt", type=float, default=None)
    args = parser.parse_args(argv)

    overrides = {"out": args.out, "workers": args.workers,
                 "n": args.n, "dt": args.dt}
    if args.subcommand == "verify" and args.scenario is not None:
        overrides["scenario"] = args.scenario
    overrides = {k: v for k, v in overrides.items()
                 if k in _ALLOWED[args.subcommand]}
    try:
        cfg = parse_config(args.config, args.subcommand, overrides)
        status, manifest = run(cfg)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1
    except Exception as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    if args.subcommand == "verify":
        flag = "PASS" if status == 0 else "FAIL"
        print("%s %s" % (flag, cfg.scenario))
        for key in sorted(manifest["summary"]):
            print("  %s = %s" % (key, manifest["summary"][key]))
    else:
        print("wrote %s" % os.path.join(cfg.out, "manifest.json"))
    return status


if __name__ == "__main__":
    sys.exit(main())
