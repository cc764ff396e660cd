"""Command-line front end.

Every run writes one header line (schema version, config echo, seed and the
sha256 of the body) followed by a CSV or JSON-lines body.  The body depends
only on the config, so replays are byte-identical.  Exit status is 0 when all
checks of the command pass, 1 with a JSON failure list on stderr otherwise,
and 2 for invalid configurations.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

SCHEMA_VERSION = 1
COMMANDS = (
    "reference",
    "prufer",
    "expsum",
    "coarse",
    "random-mc",
    "transition-scan",
    "wsum",
    "stationary",
    "spectral-scan",
)


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class RunConfig:
    command: str
    F: float | None = None
    p: int | None = None
    q: int | None = None
    E: float = 0.0
    lam: float = 1.0
    N: int = 10_000
    trials: int = 100
    seed: int = 0
    family: str | None = None
    theta0: float = 0.0
    l_min: int = 20
    l_max: int = 200
    x_min: float = 0.0
    x_max: float = 100.0
    step: float = 0.5
    points: int = 1000
    k: int = 2
    problem: str = "stationary"
    omega_min: float = 40.0
    omega_max: float = 640.0
    E_grid: str = ""
    F_grid: str = "0.25,0.4,0.5,0.6,1.0"
    tol: float | None = None
    out: str | None = None
    format: str = "csv"
    threads: int | None = None

    # -- derived -----------------------------------------------------------
    @property
    def rational(self) -> bool:
        return self.p is not None or self.q is not None

    def field_value(self) -> float:
        if self.rational:
            return math.pi**2 * self.q / (3 * self.p)
        return float(self.F)

    def model(self, E: float | None = None):
        from .special import ModelParams

        E = self.E if E is None else E
        if self.rational:
            return ModelParams.from_rational(self.p, self.q, E, self.lam)
        return ModelParams(float(self.F), E, self.lam)

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("threads")
        return d

    # -- validation ----------------------------------------------------------
    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError("command", f"unknown command {self.command!r}")
        if self.rational:
            if self.p is None or self.q is None:
                raise ConfigError("p", "--p and --q go together")
            if self.p < 1 or self.q < 1 or math.gcd(self.p, self.q) != 1:
                raise ConfigError("p", "p and q must be coprime positive integers")
            if self.F is not None:
                raise ConfigError("F", "give either F or (p, q), not both")
        elif self.command not in ("wsum", "transition-scan") and not (
            self.command == "stationary" and self.problem != "cell"
        ):
            if self.F is None:
                raise ConfigError("F", "required (or --p/--q)")
            if not (math.isfinite(self.F) and self.F > 0):
                raise ConfigError("F", "must be positive and finite")
        if self.command in ("wsum", "spectral-scan") and not self.rational:
            raise ConfigError("p", f"{self.command} needs the rational form --p/--q")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        if self.N < 2 or self.N > 100_000_000:
            raise ConfigError("N", "must lie in [2, 1e8]")
        if self.trials < 1:
            raise ConfigError("trials", "must be positive")
        if self.l_min < 1 or self.l_max <= self.l_min:
            raise ConfigError("l_max", "need 1 <= l_min < l_max")
        if self.x_max <= self.x_min or self.x_min < 0 or self.step <= 0:
            raise ConfigError("x_max", "need 0 <= x_min < x_max and step > 0")
        if not 1 <= self.k <= 3:
            raise ConfigError("k", "must be 1, 2 or 3")
        if self.problem not in ("stationary", "nonstationary", "cell"):
            raise ConfigError("problem", "stationary, nonstationary or cell")
        if not 0 < self.omega_min < self.omega_max:
            raise ConfigError("omega_max", "need 0 < omega_min < omega_max")
        if self.format not in ("csv", "json"):
            raise ConfigError("format", "csv or json")
        if self.family is not None and self.family not in ("gaussian", "rademacher", "uniform"):
            raise ConfigError("family", "gaussian, rademacher or uniform")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads", "must be positive")
        if self.points < 2:
            raise ConfigError("points", "must be >= 2")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _convert(name: str, raw: str) -> Any:
    f = _FIELDS.get(name)
    if f is None or name == "command":
        raise ConfigError(name, "unknown config key")
    t = str(f.type)
    try:
        if raw.lower() in ("none", ""):
            return None if "None" in t else ("" if "str" in t else None)
        if t.startswith("int"):
            return int(raw)
        if t.startswith("float"):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(name, f"cannot parse {raw!r}") from None


def read_config_file(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}", "expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            k = k.replace("-", "_")
            k = "lam" if k == "lambda" else k
            out[k] = _convert(k, v)
    return out


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    footer: dict = field(default_factory=dict)
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, *row):
        self.rows.append(list(row))

    def check(self, name: str, ok: bool, detail: str = ""):
        self.checks.append((name, bool(ok), detail))

    def body(self, form: str) -> str:
        lines = []
        if form == "csv":
            lines.append(",".join(self.columns))
            lines += [",".join(fmt(v) for v in r) for r in self.rows]
            if self.footer:
                lines.append("# " + json.dumps(_jsonable(self.footer), sort_keys=True))
        else:
            lines += [json.dumps(_jsonable(dict(zip(self.columns, r))), sort_keys=True) for r in self.rows]
            if self.footer:
                lines.append(json.dumps({"footer": _jsonable(self.footer)}, sort_keys=True))
        return "\n".join(lines) + "\n"


def render(cfg: RunConfig, table: Table) -> str:
    body = table.body(cfg.format)
    digest = hashlib.sha256(body.encode()).hexdigest()
    head = {"schema": SCHEMA_VERSION, "config": cfg.echo(), "seed": cfg.seed, "sha256": digest}
    prefix = "# " if cfg.format == "csv" else ""
    return prefix + json.dumps(_jsonable(head), sort_keys=True) + "\n" + body


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_reference(cfg: RunConfig) -> Table:
    from .special import ReferenceSolution

    rs = ReferenceSolution(cfg.model())
    x = np.arange(cfg.x_min, cfg.x_max + 0.5 * cfg.step, cfg.step)
    d = rs.evaluate(x)
    wr = np.abs(rs.wronskian(x) + 2j)
    t = Table(["x", "re_zeta", "im_zeta", "abs_zeta", "gamma", "gamma1", "gamma2", "wronskian_residual"])
    for i in range(x.size):
        z = complex(d.zeta[i])
        t.add(x[i], z.real, z.imag, abs(z), d.gamma[i], d.gamma1[i], d.gamma2[i], wr[i])
    tol = cfg.tol or 1e-10
    t.check("wronskian", wr.max() <= tol, f"max {wr.max():.3g}")
    t.check("phase_identity", np.max(np.abs(d.abs2 * d.gamma1 - 1)) <= tol)
    if cfg.x_min == 0:
        t.check("gamma0_branch", -math.pi < d.gamma[0] <= math.pi, f"gamma(0) = {d.gamma[0]:.17g}")
    return t


def _couplings(cfg: RunConfig):
    if cfg.family is None:
        return None
    from .random import CouplingSampler

    return CouplingSampler(cfg.family, cfg.lam, cfg.seed)


def cmd_prufer(cfg: RunConfig) -> Table:
    from .prufer import coupling_values, run_prufer
    from .random import fit_points, growth_slope
    from .special import ReferenceSolution

    rs = ReferenceSolution(cfg.model())
    samp = _couplings(cfg)
    rec = np.arange(1, cfg.N + 1) if cfg.N <= cfg.points else fit_points(cfg.N, 1, cfg.points)
    traj = run_prufer(rs, cfg.N, samp, cfg.theta0, record=rec)
    g1 = rs.gamma_phase(rec.astype(float))[1]
    g = np.array([coupling_values(rs, samp, int(n), int(n) + 1)[0] if n < cfg.N else np.nan for n in rec])
    U = g / g1
    t = Table(["n", "logR", "eta", "theta", "U"])
    for i, n in enumerate(rec):
        t.add(n, traj.logR[i], traj.eta[i], traj.theta[i], U[i])
    use = rec >= 10
    t.footer = {"logR_final": float(traj.logR[-1]), "exp_endpoint": float(traj.logR[-1] / math.log(cfg.N))}
    if use.sum() >= 3:
        t.footer["exp_slope"] = growth_slope(rec[use], traj.logR[use])
    if cfg.lam == 0:
        t.check("constant_R", np.ptp(traj.logR) <= 1e-12, f"range {np.ptp(traj.logR):.3g}")
    return t


def _lrange(cfg: RunConfig, count: int = 16) -> np.ndarray:
    return np.unique(np.geomspace(cfg.l_min, cfg.l_max, min(count, cfg.l_max - cfg.l_min + 1)).round().astype(int))


def cmd_expsum(cfg: RunConfig) -> Table:
    from .expsum import SqrtPerturbation, precise_asymptotic, window_sum
    from .special import ReferenceSolution

    params = cfg.model()
    rs = ReferenceSolution(params)
    h = SqrtPerturbation.canonical(cfg.lam, params.F)
    t = Table(["l", "re_raw", "im_raw", "re_pred", "im_pred", "abs_res"])
    ls = _lrange(cfg)
    res = []
    for l in ls:
        raw = window_sum(rs, int(l), h)
        pred = precise_asymptotic(rs, int(l), h).predicted
        res.append(abs(raw - pred))
        t.add(l, raw.real, raw.imag, pred.real, pred.imag, res[-1])
    slope = float(np.polyfit(np.log(ls), np.log(res), 1)[0])
    t.footer = {"slope": slope}
    if ls[-1] >= 4 * ls[0]:
        lim = cfg.tol if cfg.tol is not None else -1.4
        t.check("residual_slope", slope <= lim, f"slope {slope:.3f} vs {lim}")
    return t


def cmd_coarse(cfg: RunConfig) -> Table:
    from .coarse import binned_loglog_slope, coarse_run, l_step_residuals, S_values
    from .prufer import build_resonance_grid
    from .special import ReferenceSolution

    rs = ReferenceSolution(cfg.model())
    grid = build_resonance_grid(rs, cfg.l_min, cfg.l_max)
    cs = coarse_run(rs, grid, cfg.theta0)
    S = S_values(rs, cs.l[:-1])
    r = l_step_residuals(cs, S)
    t = Table(["l", "logRl", "Lambda", "Theta", "res_logR", "res_Lambda"])
    for i in range(r.l.size):
        t.add(r.l[i], cs.logRl[i], cs.Lambda[i], cs.Theta[i], r.res_logR[i], r.res_Lambda[i])
    if r.l[-1] >= 4 * r.l[0]:
        s_log = binned_loglog_slope(r.l, r.res_logR)
        s_lam = binned_loglog_slope(r.l, r.res_Lambda)
        t.footer = {"slope_logR": s_log, "slope_Lambda": s_lam}
        lim = cfg.tol if cfg.tol is not None else -1.1
        t.check("l_step_slope", s_log <= lim, f"slope {s_log:.3f} vs {lim}")
    return t


def cmd_random_mc(cfg: RunConfig) -> Table:
    from .random import CouplingSampler, mc_radius_exponent

    samp = CouplingSampler(cfg.family or "gaussian", cfg.lam, cfg.seed)
    res = mc_radius_exponent(cfg.model(), samp, cfg.N, cfg.trials, cfg.theta0, cfg.threads, check_preconditions=False)
    t = Table(["seed", "index", "exponent", "slope"])
    for i, (e, s) in enumerate(zip(res.per_trial, res.per_trial_slope)):
        t.add(cfg.seed, i, e, s)
    expected = cfg.lam**2 / (8 * cfg.field_value())
    t.footer = {"mean_exp": res.mean_exp, "stderr": res.stderr, "slope_mean": res.slope_mean,
                "slope_stderr": res.slope_stderr, "stabilization": res.stabilization, "expected": expected}
    if cfg.tol is not None:
        t.check("mean_exponent", abs(res.mean_exp - expected) <= cfg.tol, f"{res.mean_exp:.4f} vs {expected:.4f}")
    return t


def _grid(text: str, name: str) -> list[float]:
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(name, "comma separated numbers expected") from None
    if not vals:
        raise ConfigError(name, "empty grid")
    return vals


def cmd_transition_scan(cfg: RunConfig) -> Table:
    from .random import transition_scan

    Fs = _grid(cfg.F_grid, "F_grid")
    if any(not 0 < F < 4 * cfg.lam**2 for F in Fs):
        raise ConfigError("F_grid", "values must lie in (0, 4 lambda^2)")
    rows = transition_scan(Fs, cfg.lam, cfg.N, cfg.trials, cfg.family or "gaussian", cfg.seed, cfg.threads)
    t = Table(["F", "lambda", "N", "trials", "mean_exp", "stderr", "decay_exp", "proxy", "proxy_stderr", "sign", "sub_exp"])
    for r in rows:
        t.add(r.F, r.lam, r.N, r.trials, r.mean_exp, r.stderr, r.decay_exp, r.proxy, r.proxy_stderr, r.sign, r.sub_exp)
        crit = cfg.lam**2 / 2
        want = "0" if math.isclose(r.F, crit) else ("-" if r.F < crit else "+")
        t.check(f"sign_F={r.F:g}", r.sign == want, f"{r.sign} vs {want}")
    return t


def cmd_wsum(cfg: RunConfig) -> Table:
    from .expsum import gauss_sum_profile, nonvanishing_count

    w = gauss_sum_profile(cfg.p, cfg.q)
    t = Table(["m", "re_w", "im_w", "abs_w"])
    for m, v in enumerate(w):
        t.add(m, v.real, v.imag, abs(v))
    total = math.fsum(np.abs(w) ** 2)
    cnt = nonvanishing_count(w, cfg.q)
    t.footer = {"sum_abs2": total, "nonvanishing": cnt}
    t.check("parseval", abs(total - cfg.q**2) <= (cfg.tol or 1e-9) * cfg.q**2, f"{total!r}")
    t.check("nonvanishing", cnt >= cfg.q ** (2 / 3) / 2, f"{cnt}")
    return t


def cmd_stationary(cfg: RunConfig) -> Table:
    from .oscillatory import cell_problem, model_problem, omega_scan, quadrature_oracle, stationary_expansion

    if cfg.problem == "cell":
        from .expsum import SqrtPerturbation
        from .special import ReferenceSolution

        params = cfg.model()
        rs = ReferenceSolution(params)
        l = cfg.l_min
        cp = cell_problem(rs, l, SqrtPerturbation.canonical(cfg.lam, params.F), k=cfg.k)
        e = stationary_expansion(cp.problem).value
        o = quadrature_oracle(cp.problem)
        w = cp.problem.omega
        t = Table(["l", "omega", "re_exp", "im_exp", "re_oracle", "im_oracle", "err", "err_scaled"])
        t.add(l, w, e.real, e.imag, o.real, o.imag, abs(e - o), abs(e - o) * w**cfg.k)
        lim = cfg.tol if cfg.tol is not None else 10.0
        t.check("cell_match", abs(e - o) * w**cfg.k <= lim, f"err*omega^k = {abs(e - o) * w**cfg.k:.3g}")
        return t
    omegas = np.geomspace(cfg.omega_min, cfg.omega_max, 6)
    sc = omega_scan(model_problem(cfg.problem, cfg.k), omegas, cfg.problem == "stationary")
    t = Table(["omega", "re_exp", "im_exp", "re_oracle", "im_oracle", "err"])
    for i in range(omegas.size):
        t.add(omegas[i], sc.expansion[i].real, sc.expansion[i].imag, sc.oracle[i].real, sc.oracle[i].imag, sc.error[i])
    t.footer = {"slope": sc.slope}
    tol = cfg.tol if cfg.tol is not None else 0.2
    if cfg.problem == "stationary":
        t.check("omega_slope", abs(sc.slope + cfg.k) <= tol, f"{sc.slope:.3f} vs {-cfg.k}")
    else:
        t.check("omega_slope", sc.slope <= -cfg.k + tol, f"{sc.slope:.3f} vs <= {-cfg.k + tol}")
    return t


def cmd_spectral_scan(cfg: RunConfig) -> Table:
    from .coarse import InsufficientRangeError, spectral_scan_row

    Es = _grid(cfg.E_grid, "E_grid") if cfg.E_grid else [cfg.E]
    t = Table(["E", "exceptional", "m", "w_abs", "converged", "limit_est", "slope"])
    for E in Es:
        try:
            r = spectral_scan_row(cfg.model(E), cfg.l_max, theta0=cfg.theta0)
        except InsufficientRangeError as exc:
            raise ConfigError("l_max", str(exc)) from None
        t.add(E, r["exceptional"], r["m"], r["w_abs"], r["converged"], r["limit_est"], r["slope"])
        if not r["exceptional"]:
            t.check(f"converged_E={E:g}", r["converged"], f"slope {r['slope']:.3f}")
    return t


HANDLERS: dict[str, Callable[[RunConfig], Table]] = {
    "reference": cmd_reference,
    "prufer": cmd_prufer,
    "expsum": cmd_expsum,
    "coarse": cmd_coarse,
    "random-mc": cmd_random_mc,
    "transition-scan": cmd_transition_scan,
    "wsum": cmd_wsum,
    "stationary": cmd_stationary,
    "spectral-scan": cmd_spectral_scan,
}


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="flat key=value file; flags override it")
    a("--F", type=float)
    a("--p", type=int)
    a("--q", type=int)
    a("--E", type=float)
    a("--lambda", dest="lam", type=float)
    a("--N", type=int)
    a("--trials", type=int)
    a("--seed", type=int)
    a("--family", choices=("gaussian", "rademacher", "uniform"))
    a("--theta0", type=float)
    a("--l-min", dest="l_min", type=int)
    a("--l-max", dest="l_max", type=int)
    a("--x-min", dest="x_min", type=float)
    a("--x-max", dest="x_max", type=float)
    a("--step", type=float)
    a("--points", type=int)
    a("--k", type=int)
    a("--problem", choices=("stationary", "nonstationary", "cell"))
    a("--omega-min", dest="omega_min", type=float)
    a("--omega-max", dest="omega_max", type=float)
    a("--E-grid", dest="E_grid")
    a("--F-grid", dest="F_grid")
    a("--tol", type=float, help="override the command's check tolerance")
    a("--out", help="output path (default stdout)")
    a("--format", choices=("csv", "json"))
    a("--threads", type=int, help="worker cap (default STARKPRUFER_THREADS or cpu count)")
    parser = argparse.ArgumentParser(prog="starkprufer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], argument_default=argparse.SUPPRESS)
    return parser


def make_config(argv: list[str] | None = None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    values: dict[str, Any] = {}
    path = ns.pop("config", None)
    if path:
        values.update(read_config_file(path))
    values.update({k: v for k, v in ns.items() if v is not None})
    cfg = RunConfig(**values)
    if cfg.threads is None and os.environ.get("STARKPRUFER_THREADS"):
        cfg.threads = int(os.environ["STARKPRUFER_THREADS"])
    return cfg.validate()


def run(cfg: RunConfig) -> tuple[str, list[tuple[str, bool, str]]]:
    table = HANDLERS[cfg.command](cfg)
    return render(cfg, table), table.checks


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = make_config(argv)
        text, checks = run(cfg)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "field": exc.field, "message": str(exc)}), file=sys.stderr)
        return 2
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = [{"check": n, "detail": d} for n, ok, d in checks if not ok]
    if failed:
        print(json.dumps({"failures": failed}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
