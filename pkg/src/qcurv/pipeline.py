"""Run configuration and the end-to-end commands behind the CLI."""

from __future__ import annotations

import copy
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .degree import (
    DegreeError,
    GMap,
    NotFound,
    alignment_check,
    ball_cloud,
    brouwer_degree,
    decay_fit,
    default_pole_grid,
    euler_sum,
    floors_from_table,
    g_map,
    g_norm_table,
    morse_analysis,
    morse_sum,
    sphere_points,
    find_lambda_zero,
)
from .fspec import PRESETS, FSpec, preset
from .functionals import aubin_probe, kw_residual, pde_residual, sobolev_probe
from .geometry import BallParam, Dimension, dilation, dilation_scale, make_dimension
from .io import SCHEMA_VERSION, config_hash, write_csv, write_json
from .reduction import (
    IllConditioned,
    ReductionError,
    ResolutionError,
    SolverOptions,
    multiplier_field,
)
from .spectral import Backend, Field, make_backend

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "EXIT_OK",
    "EXIT_HYPOTHESIS",
    "EXIT_NOT_FOUND",
    "EXIT_GATE",
    "HypothesisReport",
    "Certificate",
    "cmd_constants",
    "cmd_check",
    "cmd_solve",
    "cmd_probe",
    "recheck",
    "build_f",
    "build_backend",
]

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_NOT_FOUND = 3
EXIT_GATE = 4

FULL_DEFAULT_L = {5: 4, 6: 3, 7: 2, 8: 2}


class ConfigError(ValueError):
    pass


def _default_tolerances():
    return {
        "solver": 1e-10,
        "feasibility": 1e-12,
        "zero": 1e-8,
        "gate_lambda": 1e-6,
        "gate_residual": 1e-3,
        "gate_kw": 1e-6,
        "dedupe": 1e-6,
        "h1_threshold": 0.1,
    }


def _default_h2():
    return {"alphas": [1.0, 2.0, 3.0], "t_grid": [4.0, 8.0, 16.0, 32.0], "poles": 64, "stability_band": 2.0}


def _default_probe():
    return {
        "aubin_a": 0.95,
        "aubin_starts": 50,
        "aubin_L": 24,
        "sobolev_count": 200,
        "gmap_points": 64,
        "decay_t": [6.0, 7.0, 8.0, 9.0, 10.0],
        "alignment_t": [6.0, 7.0, 8.0, 9.0, 10.0],
    }


@dataclass
class RunConfig:
    """All knobs of a run; every default is written into the reports."""

    n: int = 6
    backend: str = "axisym"
    L: int | None = None
    K: int | None = None
    oversample: float = 1.5
    f: dict = field(default_factory=lambda: {"preset": "axis", "eps": 0.03})
    t0: float = 8.0
    seed: int = 0
    starts: int = 32
    tolerances: dict = field(default_factory=_default_tolerances)
    h2: dict = field(default_factory=_default_h2)
    probe: dict = field(default_factory=_default_probe)
    out: str = "qcurv-out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if int(self.n) != self.n or self.n < 5:
            raise ConfigError(f"n must be an integer >= 5, got {self.n!r}")
        self.n = int(self.n)
        if self.backend not in ("axisym", "full"):
            raise ConfigError(f"backend must be 'axisym' or 'full', got {self.backend!r}")
        if self.L is None:
            self.L = 160 if self.backend == "axisym" else FULL_DEFAULT_L.get(self.n, 2)
        if int(self.L) != self.L or self.L < 1:
            raise ConfigError("L must be a positive integer")
        self.L = int(self.L)
        if self.t0 <= 1.0:
            raise ConfigError("t0 must exceed 1")
        for name, defaults in (("tolerances", _default_tolerances()), ("h2", _default_h2()),
                               ("probe", _default_probe())):
            given = getattr(self, name)
            if not isinstance(given, dict):
                raise ConfigError(f"{name} must be a table")
            unknown = set(given) - set(defaults)
            if unknown:
                raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
            merged = dict(defaults)
            merged.update(given)
            setattr(self, name, merged)
        fkeys = {"preset", "eps", "axis", "weights", "value", "skew", "terms"}
        unknown = set(self.f) - fkeys
        if unknown:
            raise ConfigError(f"unknown keys in [f]: {sorted(unknown)}")
        if ("preset" in self.f) == ("terms" in self.f):
            raise ConfigError("[f] needs exactly one of 'preset' or 'terms'")
        if "preset" in self.f and self.f["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset {self.f['preset']!r}; choose from {list(PRESETS)}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**copy.deepcopy(raw))

    def with_overrides(self, **kw) -> "RunConfig":
        raw = self.to_dict()
        for k, v in kw.items():
            if v is None:
                continue
            if k == "eps":
                raw["f"] = dict(raw["f"], eps=v)
            elif k == "backend" and v != raw["backend"] and "L" not in kw:
                raw["backend"], raw["L"] = v, None
            else:
                raw[k] = v
        return RunConfig.from_dict(raw)

    @property
    def hash(self) -> str:
        """Digest of the numerical configuration (the output location is excluded)."""
        d = self.to_dict()
        d.pop("out")
        return config_hash(d)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(tol=self.tolerances["solver"], feas_tol=self.tolerances["feasibility"])


def load_config(path) -> RunConfig:
    """Read a TOML or JSON configuration file."""
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        raw = json.loads(text)
    else:
        raw = tomllib.loads(text.decode())
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table")
    return RunConfig.from_dict(raw)


# --------------------------------------------------------------------------
# Building blocks
# --------------------------------------------------------------------------


def build_f(cfg: RunConfig, dim: Dimension) -> FSpec:
    spec = cfg.f
    if "terms" in spec:
        try:
            return FSpec.from_list(dim.n, spec["terms"], "terms")
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad polynomial terms: {exc}") from exc
    kw = {k: spec[k] for k in ("axis", "weights", "value", "skew") if k in spec}
    return preset(spec["preset"], dim, spec.get("eps", 0.03), **kw)


def build_backend(cfg: RunConfig, dim: Dimension) -> Backend:
    kw = {"K": cfg.K} if cfg.backend == "axisym" else {"oversample": cfg.oversample}
    return make_backend(dim, cfg.backend, cfg.L, **kw)


def backend_spec(be: Backend) -> dict:
    out = {"kind": be.kind, "n": be.n, "L": be.L}
    if be.kind == "axisym":
        out["K"] = be.K
    else:
        out["oversample"] = be.oversample
        out["max_nodes"] = be.max_nodes
    return out


def backend_from_spec(spec: dict) -> Backend:
    dim = make_dimension(spec["n"])
    if spec["kind"] == "axisym":
        return make_backend(dim, "axisym", spec["L"], K=spec["K"])
    return make_backend(dim, "full", spec["L"], oversample=spec["oversample"], max_nodes=spec["max_nodes"])


def axisym_frame(f: FSpec, backend: Backend) -> tuple[FSpec, tuple[int, int] | None]:
    """Rotate coordinates so that a single-coordinate f depends on the last one."""
    if backend.kind != "axisym":
        return f, None
    i = f.axis()
    if i is None:
        raise ConfigError("axisymmetric backend needs f depending on one coordinate; use backend = 'full'")
    if i == f.n:
        return f, None
    return f.swapped(i, f.n), (i, f.n)


def _provenance(cfg: RunConfig, command: str) -> dict:
    return {"schema": SCHEMA_VERSION, "command": command, "version": __version__,
            "config": cfg.to_dict(), "config_hash": cfg.hash}


# --------------------------------------------------------------------------
# constants
# --------------------------------------------------------------------------


def cmd_constants(n_values) -> list[dict]:
    """One row per dimension with the constants and the identity residuals."""
    rows = []
    for n in n_values:
        dim = make_dimension(n)
        ids = dim.identities()
        rows.append({
            "n": dim.n,
            "c_n": dim.c_n,
            "d_n": dim.d_n,
            "two_sharp": dim.two_sharp,
            "f0": dim.f0,
            "omega_n": dim.omega_n,
            "k0_inv_scaled": dim.k0_inv_scaled,
            "identities": ids,
            "identities_pass": bool(all(abs(v) < 1e-9 for v in ids.values())),
        })
    return rows


# --------------------------------------------------------------------------
# check
# --------------------------------------------------------------------------


@dataclass
class HypothesisReport:
    eps_f: float
    eps_ratio: float
    f_min: float
    h1_pass: bool
    floors: list
    h2_alpha: float | None
    h2_pass: bool
    degree: int | None
    degree_reliable: bool
    degree_zeros: list
    degree_boundary_min: float | None
    degree_error: str | None
    morse_sum: int
    euler_sum: int
    morse_reliable: bool
    critical_points: list
    h3_pass: bool
    warnings: list

    @property
    def passed(self) -> bool:
        return self.h1_pass and self.h2_pass and self.h3_pass

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdicts"] = {"H1": self.h1_pass, "H2": self.h2_pass, "H3": self.h3_pass, "all": self.passed}
        return d


def _kw_warning(f: FSpec) -> str | None:
    """Non-constant affine f is killed by the conformal-vector-field identity."""
    if f.is_constant or f.degree != 1:
        return None
    return ("f - const is a linear function of the coordinates: the conformal-vector-field "
            "identity rules out positive solutions for this f")


def cmd_check(cfg: RunConfig) -> HypothesisReport:
    dim = make_dimension(cfg.n)
    f = build_f(cfg, dim)
    tol = cfg.tolerances
    morse = morse_analysis(f, seed=cfg.seed, dedupe=tol["dedupe"])
    crit = [c.x for c in morse.points]
    samples = np.vstack(crit + [sphere_points(dim.n, 4096, cfg.seed + 3)]) if crit else sphere_points(dim.n, 4096, cfg.seed + 3)
    fv = f(samples)
    eps_f = float(np.max(np.abs(fv - dim.f0)))
    f_min = float(np.min(fv))
    ratio = eps_f / dim.f0
    h1 = bool(ratio <= tol["h1_threshold"] and f_min > 0)

    h2cfg = cfg.h2
    t_grid = np.asarray(sorted(h2cfg["t_grid"]), dtype=float)
    poles = np.vstack(crit + [sphere_points(dim.n, int(h2cfg["poles"]), cfg.seed + 1)]) if crit else \
        sphere_points(dim.n, int(h2cfg["poles"]), cfg.seed + 1)
    table = g_norm_table(f, t_grid, poles)
    alpha_max = dim.n if dim.n % 2 == 0 else dim.n - 1
    floors, h2_alpha = [], None
    for a in h2cfg["alphas"]:
        if a > alpha_max:
            continue
        r = floors_from_table(table, float(a), dim.n, t_grid, poles, h2cfg["stability_band"])
        floors.append({"alpha": float(a), "floor": r.floor, "stability": r.stability, "stable": r.stable,
                       "argmin_P": r.argmin_P.tolist(), "argmin_t": r.argmin_t,
                       "floors_by_t": r.floors_by_t.tolist()})
        if r.stable and h2_alpha is None:
            h2_alpha = float(a)

    deg = None
    deg_err = None
    zeros, bmin, reliable = [], None, False
    try:
        rep = brouwer_degree(GMap(f), dim.n + 1, cfg.t0, starts=cfg.starts, seed=cfg.seed,
                             dedupe=tol["dedupe"], map_id="G")
        deg, reliable, bmin = rep.degree, rep.reliable, rep.boundary_min
        zeros = [{"p": z.p.tolist(), "sign": z.sign, "residual": z.residual, "singular": z.singular}
                 for z in rep.zeros]
    except DegreeError as exc:
        deg_err = str(exc)
    ms, es = morse_sum(morse), euler_sum(morse)
    h3 = bool(deg is not None and deg != 0 and reliable)
    warnings = []
    w = _kw_warning(f)
    if w:
        warnings.append(w)
    if f.is_constant:
        warnings.append("f is constant: G vanishes identically and the degree is undefined")
    elif morse.degenerate:
        warnings.append("f has degenerate critical points; the Morse sum is not meaningful")
    elif deg is not None and reliable and ms != -1 and deg == 0:
        warnings.append("Morse sum differs from -1 but the computed degree is zero")
    cps = [{"x": c.x.tolist(), "index": c.index, "lap_h": c.lap_h, "degenerate": c.degenerate}
           for c in morse.points]
    return HypothesisReport(
        eps_f=eps_f, eps_ratio=ratio, f_min=f_min, h1_pass=h1,
        floors=floors, h2_alpha=h2_alpha, h2_pass=h2_alpha is not None,
        degree=deg, degree_reliable=reliable, degree_zeros=zeros, degree_boundary_min=bmin,
        degree_error=deg_err, morse_sum=ms, euler_sum=es, morse_reliable=morse.reliable,
        critical_points=cps, h3_pass=h3, warnings=warnings,
    )


def _write_hypothesis(cfg: RunConfig, rep: HypothesisReport, out: Path) -> Path:
    return write_json(out / "hypothesis.json", {"provenance": _provenance(cfg, "check"), "report": rep.to_dict()})


# --------------------------------------------------------------------------
# solve
# --------------------------------------------------------------------------


@dataclass
class Certificate:
    passed: bool
    status: str
    exit_code: int
    data: dict
    field: Field | None = None


def reconstruct(sol) -> Field:
    """u = T_{phi^{-1}} of the renormalised reduced solution, projected."""
    up = sol.renormalized()
    be = up.backend
    p = sol.p
    if p.is_origin:
        return up
    x = be.nodes
    y = dilation(p.P, 1.0 / p.t, x)
    vals = up(y) * dilation_scale(p.P, 1.0 / p.t, x) ** ((be.n - 4) / 2.0)
    return Field(be, values=vals).chopped()


def evaluate_gates(u: Field, f: FSpec, lam: np.ndarray, tol: dict) -> tuple[dict, dict]:
    res = pde_residual(u, f)
    g = u.backend.residual_grid()
    umin = float(np.min(u.backend.evaluate(u.spectral, g.nodes)))
    kw = kw_residual(u, f)
    lam_norm = float(np.linalg.norm(lam))
    kw_norm = float(np.max(np.abs(kw)))
    gates = {
        "lambda": {"value": lam_norm, "threshold": tol["gate_lambda"], "pass": lam_norm < tol["gate_lambda"]},
        "residual_sup": {"value": res.sup, "threshold": tol["gate_residual"], "pass": res.sup < tol["gate_residual"]},
        "positivity": {"value": umin, "threshold": 0.0, "pass": umin > 0.0},
        "kw": {"value": kw_norm, "threshold": tol["gate_kw"], "pass": kw_norm < tol["gate_kw"]},
    }
    extra = {"residual_l2": res.l2, "kw_vector": kw.tolist(), "min_u": umin}
    return gates, extra


def cmd_solve(cfg: RunConfig, force: bool = False, write: bool = True) -> Certificate:
    dim = make_dimension(cfg.n)
    out = Path(cfg.out)
    f_user = build_f(cfg, dim)
    hyp = cmd_check(cfg)
    if write:
        _write_hypothesis(cfg, hyp, out)
    base = {"provenance": _provenance(cfg, "solve"), "forced": bool(force),
            "hypotheses": {"H1": hyp.h1_pass, "H2": hyp.h2_pass, "H3": hyp.h3_pass},
            "warnings": list(hyp.warnings)}
    if not hyp.passed and not force:
        data = dict(base, status="hypothesis-fail", **{"pass": False})
        if write:
            write_json(out / "certificate.json", data)
        return Certificate(False, "hypothesis-fail", EXIT_HYPOTHESIS, data)

    backend = build_backend(cfg, dim)
    f, swap = axisym_frame(f_user, backend)
    opts = cfg.solver_options()
    seeds = [z["p"] for z in hyp.degree_zeros]
    if swap:
        i, j = swap
        for s in seeds:
            s[i], s[j] = s[j], s[i]
    diag: dict = {}
    try:
        zero = find_lambda_zero(f, cfg.t0, backend, opts, tol=cfg.tolerances["zero"], seeds=seeds,
                                starts=cfg.starts)
        found, sol, lam, diag = True, zero.solution, zero.lambda_vec, zero.diagnostics
        message = "zero of Lambda located"
    except NotFound as exc:
        found, diag, message = False, exc.diagnostics, str(exc)
        if exc.best is None:
            sol, lam = None, None
        else:
            _, _, sol, lam = exc.best
    except (ReductionError, ResolutionError, IllConditioned) as exc:
        found, sol, lam, message = False, None, None, f"{type(exc).__name__}: {exc}"

    data = dict(base, frame_swap=list(swap) if swap else None, zero_found=found, message=message)
    if write and "sweep_s" in diag:
        write_csv(out / "sweep.csv", ["s", "t", "lambda_last"],
                  [[s, 1.0 / (1.0 - abs(s)), v] for s, v in zip(diag["sweep_s"], diag["sweep_lambda"])])
    if sol is None:
        data.update(status="not-found", **{"pass": False})
        if write:
            write_json(out / "certificate.json", data)
        return Certificate(False, "not-found", EXIT_NOT_FOUND, data)

    u = reconstruct(sol)
    gates, extra = evaluate_gates(u, f, lam, cfg.tolerances)
    ok = found and all(g["pass"] for g in gates.values())
    status = "pass" if ok else ("not-found" if not found else "gate-fail")
    code = EXIT_OK if ok else (EXIT_NOT_FOUND if not found else EXIT_GATE)
    data.update(
        status=status,
        **{"pass": ok},
        p_star=sol.p.to_list(),
        t_star=float(sol.p.t),
        lambda_vec=np.asarray(lam).tolist(),
        M_p=sol.M_p,
        kappa=sol.kappa,
        el_residual=sol.el_residual,
        gates=gates,
        failed_gates=[k for k, g in gates.items() if not g["pass"]],
        f_terms=f.to_list(),
        field={"backend": backend_spec(backend), "coeffs": u.spectral.tolist()},
        **extra,
    )
    if write:
        write_json(out / "certificate.json", data)
        write_csv(out / "field.csv", [f"x{i + 1}" for i in range(backend.n + 1)] + ["weight", "u"],
                  [list(x) + [w, v] for x, w, v in zip(backend.nodes, backend.weights, u.nodal)])
    return Certificate(ok, status, code, data, u)


def recheck(path) -> tuple[int, dict]:
    """Re-evaluate the gates of a stored certificate from its field coefficients."""
    data = json.loads(Path(path).read_text())
    if "field" not in data:
        return EXIT_NOT_FOUND, {"pass": False, "reason": "certificate carries no field"}
    be = backend_from_spec(data["field"]["backend"])
    f = FSpec.from_list(be.n, data["f_terms"])
    u = Field(be, coeffs=np.asarray(data["field"]["coeffs"], dtype=float))
    tol = {"gate_" + k: v["threshold"] for k, v in data["gates"].items() if k in ("lambda", "kw")}
    tol["gate_residual"] = data["gates"]["residual_sup"]["threshold"]
    gates, extra = evaluate_gates(u, f, np.asarray(data["lambda_vec"]), tol)
    ok = all(g["pass"] for g in gates.values())
    consistent = ok == bool(data["pass"])
    report = {"pass": ok, "stored_pass": bool(data["pass"]), "consistent": consistent, "gates": gates, **extra}
    return (EXIT_OK if ok and consistent else EXIT_GATE), report


# --------------------------------------------------------------------------
# probes
# --------------------------------------------------------------------------


PROBES = ("aubin", "sobolev", "gmap", "decay", "alignment")


def _probe_aubin(cfg, dim, out):
    pc = cfg.probe
    be = make_backend(dim, "axisym", pc["aubin_L"]) if cfg.backend == "axisym" else build_backend(cfg, dim)
    rep = aubin_probe(dim, a=pc["aubin_a"], starts=pc["aubin_starts"], seed=cfg.seed, backend=be)
    write_csv(out / "aubin.csv", ["start", "value", "converged"],
              [[k, v, int(c)] for k, (v, c) in enumerate(zip(rep.values, rep.converged))])
    return {"best": rep.best, "threshold": rep.threshold, "d_n": dim.d_n, "a": rep.a, "q": rep.q,
            "all_converged": all(rep.converged), "pass": rep.passed}


def _probe_sobolev(cfg, dim, out):
    be = build_backend(cfg, dim)
    vals = sobolev_probe(be, cfg.probe["sobolev_count"], cfg.seed)
    write_csv(out / "sobolev.csv", ["sample", "quotient"], [[k, v] for k, v in enumerate(vals)])
    return {"min": float(vals.min()), "d_n": dim.d_n, "pass": bool(vals.min() >= dim.d_n - 1e-9)}


def _probe_gmap(cfg, dim, out):
    f = build_f(cfg, dim)
    r0 = (cfg.t0 - 1.0) / cfg.t0
    pts = ball_cloud(dim.n + 1, r0, cfg.probe["gmap_points"], cfg.seed)
    rows = []
    gmax = 0.0
    for p in pts:
        G = g_map(BallParam(p), f)
        gmax = max(gmax, float(np.max(np.abs(G))))
        rows.append(list(p) + list(G))
    m = dim.n + 1
    write_csv(out / "gmap.csv", [f"p{i + 1}" for i in range(m)] + [f"G{i + 1}" for i in range(m)], rows)
    return {"points": len(rows), "max_abs_G": gmax, "all_zero": gmax < 1e-12}


def _probe_pole(f: FSpec, backend: Backend, seed: int) -> np.ndarray:
    if backend.kind == "axisym":
        e = np.zeros(f.n + 1)
        e[-1] = 1.0
        return e
    pts = morse_analysis(f, seed=seed).points
    if not pts:
        return sphere_points(f.n, 1, seed)[0]
    return pts[0].x


def _probe_decay(cfg, dim, out):
    backend = build_backend(cfg, dim)
    f, _ = axisym_frame(build_f(cfg, dim), backend)
    P = _probe_pole(f, backend, cfg.seed)
    res = decay_fit(f, P, backend, cfg.probe["decay_t"], opts=cfg.solver_options())
    write_csv(out / "decay.csv", ["quantity", "slope", "expected", "consistent"],
              [[k, res["slopes"][k], res["expected"][k], int(res["consistent"][k])] for k in res["slopes"]])
    return dict(res, pole=P.tolist())


def _probe_alignment(cfg, dim, out):
    backend = build_backend(cfg, dim)
    f, _ = axisym_frame(build_f(cfg, dim), backend)
    rep = alignment_check(f, backend, cfg.probe["alignment_t"], opts=cfg.solver_options())
    write_csv(out / "alignment.csv", ["t", "G_dot_A", "cosine", "G_norm", "A_norm"],
              [[s["t"], s["G_dot_A"], s["cosine"], s["G_norm"], s["A_norm"]] for s in rep.samples])
    return {"fraction_positive": rep.fraction_positive, "min_dot": rep.min_dot, "min_cosine": rep.min_cosine,
            "homotopy_min": {str(k): v for k, v in rep.homotopy_min.items()},
            "pass": rep.fraction_positive == 1.0}


def cmd_probe(cfg: RunConfig, which: str) -> dict:
    if which not in PROBES:
        raise ValueError(f"unknown probe {which!r}; choose from {list(PROBES)}")
    dim = make_dimension(cfg.n)
    out = Path(cfg.out)
    result = globals()[f"_probe_{which}"](cfg, dim, out)
    write_json(out / f"probe_{which}.json", {"provenance": _provenance(cfg, f"probe {which}"), "result": result})
    return result
