"""Command-line front end.

Usage::

    duffing-flow <subcommand> --scenario FILE [--out DIR] [--seed N] [--quiet]

Subcommands: ``simulate``, ``classify``, ``energies``, ``special``, ``basin``,
``lemma-check``.  Scenarios are INI files (format in the README); mode
numbers in scenario files are 1-based.

On any package error the process prints ``{"error": <name>, "message": ...}``
as JSON on stdout and exits with status 2.
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import asymptotics, basin, dynamics, energy, special
from .errors import ConfigParseError, DuffingFlowError
from .forcing import (
    ConstantForcing,
    DecayingForcing,
    PeriodicForcing,
    SampledForcing,
    ZeroForcing,
)
from .spectral import ModelParams, PhaseState, make_operator, make_params

SCHEMA_VERSION = 1
SUBCOMMANDS = ("simulate", "classify", "energies", "special", "basin", "lemma-check")
SIGMA_NAMES = {"minus": -1.0, "zero": 0.0, "plus": 1.0}


# ---------------------------------------------------------------------------
# scenario parsing


class Scenario:
    """Validated view of a scenario file."""

    def __init__(self, cfg: configparser.ConfigParser, path: str = "<scenario>", seed: int | None = None):
        self.cfg = cfg
        self.path = path
        version = self._get("scenario", "schema_version", int, required=True)
        if version != SCHEMA_VERSION:
            raise ConfigParseError(f"{path}: [scenario] schema_version={version} unsupported (expected {SCHEMA_VERSION})")
        eig = self._floats("model", "eigenvalues", required=True)
        lam = self._get("model", "lambda", float, required=True)
        n_decl = self._get("model", "n_modes", int)
        if n_decl is not None and n_decl != len(eig):
            raise ConfigParseError(f"{path}: [model] n_modes={n_decl} but {len(eig)} eigenvalues given")
        self.params: ModelParams = make_params(make_operator(eig), lam)
        self.seed_override = seed
        self.forcing = self._forcing()
        self.initials = self._initials()
        self.t0 = self._get("integration", "t0", float, 0.0)
        self.t1 = self._get("integration", "t1", float, 100.0)
        self.dt = self._get("integration", "dt", float)
        self.method = self._get("integration", "method", str, "rk4")
        self.stride = self._get("integration", "stride", int, 1)
        if self.method not in dynamics.METHODS:
            raise ConfigParseError(f"{path}: [integration] method must be one of {dynamics.METHODS}")
        self.window_fraction = self._get("analysis", "window_fraction", float, 0.5)
        self.mode = self._get("analysis", "mode", str, "pragmatic")
        self.burn_in = self._get("analysis", "burn_in", float, 0.0)
        if self.mode not in ("pragmatic", "theoretical"):
            raise ConfigParseError(f"{path}: [analysis] mode must be 'pragmatic' or 'theoretical'")
        self.out_dir = self._get("outputs", "directory", str, ".")

    # -- low-level accessors -------------------------------------------------
    def _get(self, section, key, kind, default=None, required=False):
        if not self.cfg.has_option(section, key):
            if required:
                raise ConfigParseError(f"{self.path}: missing [{section}] {key}")
            return default
        raw = self.cfg.get(section, key).strip()
        try:
            return kind(raw)
        except ValueError:
            raise ConfigParseError(f"{self.path}: [{section}] {key} = {raw!r} is not a valid {kind.__name__}") from None

    def _floats(self, section, key, required=False, default=None):
        raw = self._get(section, key, str, required=required)
        if raw is None:
            return default
        try:
            return [float(x) for x in raw.replace(",", " ").split()]
        except ValueError:
            raise ConfigParseError(f"{self.path}: [{section}] {key} must be a list of numbers") from None

    def _sigma(self, section, key="sigma", default="plus"):
        name = self._get(section, key, str, default)
        if name not in SIGMA_NAMES:
            raise ConfigParseError(f"{self.path}: [{section}] {key} must be one of {sorted(SIGMA_NAMES)}")
        return SIGMA_NAMES[name] * self.params.sigma0

    def _vector(self, section, key, default_zero=True):
        n = self.params.n_modes
        vals = self._floats(section, key)
        if vals is None:
            if default_zero:
                return np.zeros(n)
            raise ConfigParseError(f"{self.path}: missing [{section}] {key}")
        if len(vals) != n:
            raise ConfigParseError(f"{self.path}: [{section}] {key} has {len(vals)} entries, model has {n} modes")
        return np.array(vals)

    # -- sections --------------------------------------------------------------
    def _forcing(self, section="forcing", kind_key="kind"):
        n = self.params.n_modes
        kind = self._get(section, kind_key, str, "zero")
        if kind == "zero":
            return ZeroForcing(n)
        if kind == "constant":
            return ConstantForcing(self._vector(section, "coefficients", default_zero=False))
        if kind == "periodic":
            period = self._get(section, "period", float)
            omega = self._get(section, "omega", float)
            if period is None:
                period = 2 * np.pi / (omega if omega is not None else 1.0)
            raw = self._get(section, "terms", str, required=True)
            terms = []
            for chunk in raw.replace(";", ",").split(","):
                if not chunk.strip():
                    continue
                parts = chunk.strip().split(":")
                if len(parts) != 4:
                    raise ConfigParseError(f"{self.path}: [{section}] term {chunk!r} must be harmonic:mode:cos:sin")
                try:
                    j, k, a, b = int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])
                except ValueError:
                    raise ConfigParseError(f"{self.path}: [{section}] term {chunk!r} is malformed") from None
                if not 1 <= k <= n:
                    raise ConfigParseError(f"{self.path}: [{section}] mode {k} outside 1..{n}")
                terms.append((j, k - 1, a, b))
            return PeriodicForcing(period, tuple(terms), n)
        if kind == "decaying":
            rate = self._get(section, "rate", float, required=True)
            return DecayingForcing(self._forcing(section, "base"), rate)
        if kind == "sampled":
            fname = self._get(section, "file", str, required=True)
            fpath = Path(self.path).parent / fname
            try:
                data = np.loadtxt(fpath, delimiter=",", ndmin=2)
            except OSError as exc:
                raise ConfigParseError(f"{self.path}: cannot read sampled forcing {fpath}: {exc}") from None
            if data.shape[1] != n + 1:
                raise ConfigParseError(f"{self.path}: sampled forcing needs columns t, f_1..f_{n}")
            return SampledForcing(data[:, 0], data[:, 1:])
        raise ConfigParseError(f"{self.path}: [{section}] {kind_key} = {kind!r} is unknown")

    def _initials(self):
        kind = self._get("initial", "kind", str, "equilibrium")
        if kind == "explicit":
            return [PhaseState(self._vector("initial", "u", default_zero=False), self._vector("initial", "v"))]
        if kind == "equilibrium":
            sigma = self._sigma("initial", "name", "plus")
            u = sigma * self.params.operator.e1()
            return [PhaseState(u, np.zeros(self.params.n_modes))]
        if kind == "random":
            seed = self._get("initial", "seed", int, 0)
            if self.seed_override is not None:
                seed = self.seed_override
            bound = self._get("initial", "bound", float, 1.0)
            count = self._get("initial", "count", int, 1)
            return dynamics.random_states(seed, self.params.operator, bound, count)
        raise ConfigParseError(f"{self.path}: [initial] kind = {kind!r} is unknown")


def load_scenario(path: str, seed: int | None = None) -> Scenario:
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cfg.read_file(fh, source=path)
    except OSError as exc:
        raise ConfigParseError(f"cannot read scenario {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigParseError(f"{path}: {exc}") from None
    return Scenario(cfg, path, seed)


# ---------------------------------------------------------------------------
# output helpers


def csv_header(n: int) -> list[str]:
    return (
        ["t"]
        + [f"u_{k}" for k in range(1, n + 1)]
        + [f"v_{k}" for k in range(1, n + 1)]
        + list(energy.EnergyRecord.FIELDS)
    )


def write_trajectory_csv(path: Path, traj, forcing, params, gamma1=None):
    rec = energy.energy_ledger(traj, forcing, params, gamma1)
    cols = [traj.times[:, None], traj.u, traj.v] + [np.asarray(getattr(rec, f))[:, None] for f in rec.FIELDS]
    table = np.hstack(cols)
    np.savetxt(path, table, delimiter=",", fmt="%.17g", header=",".join(csv_header(traj.n_modes)), comments="")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload):
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _threads() -> int:
    raw = os.environ.get("DUFFING_FLOW_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _suffix(i, count):
    return "" if count == 1 else f"_{i:03d}"


def _integrate_all(sc: Scenario):
    return dynamics.integrate_many(
        sc.initials, sc.forcing, sc.params, sc.t0, sc.t1, dt=sc.dt, method=sc.method, stride=sc.stride
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(sc: Scenario, out: Path):
    runs = _integrate_all(sc)
    files = []
    for i, traj in enumerate(runs):
        path = out / f"trajectory{_suffix(i, len(runs))}.csv"
        write_trajectory_csv(path, traj, sc.forcing, sc.params)
        files.append(path.name)
    return {"files": files}


def cmd_classify(sc: Scenario, out: Path):
    runs = _integrate_all(sc)
    reports = [
        asymptotics.classify(tr, sc.forcing, sc.params, sc.mode, sc.window_fraction, sc.burn_in).as_dict()
        for tr in runs
    ]
    payload = reports[0] if len(reports) == 1 else reports
    write_json(out / "report.json", payload)
    return {"files": ["report.json"], "sigma": [r["sigma"] for r in reports], "certified": [r["certified"] for r in reports]}


def cmd_energies(sc: Scenario, out: Path):
    runs = _integrate_all(sc)
    files, certs = [], []
    for i, traj in enumerate(runs):
        sfx = _suffix(i, len(runs))
        write_trajectory_csv(out / f"energies{sfx}.csv", traj, sc.forcing, sc.params)
        rep = energy.certify_dissipation(traj, sc.forcing, sc.params)
        certs.append({
            "identity_residual": energy.certify_energy_identity(traj, sc.forcing, sc.params),
            "identity_budget": energy.IDENTITY_SLACK_C * traj.dt**2,
            "thresholds": rep.thresholds,
            "min_margins": rep.min_margins(),
            "passed": rep.passed(),
            "certified": rep.certified,
            "s_energy_constant": energy.s_energy_constant(sc.params, asymptotics.regime_constants(sc.params).gamma1),
        })
        files.append(f"energies{sfx}.csv")
    write_json(out / "certification.json", certs[0] if len(certs) == 1 else certs)
    return {"files": files + ["certification.json"]}


def cmd_special(sc: Scenario, out: Path):
    sigma = sc._sigma("special", "sigma", "plus")
    tol = sc._get("special", "tol", float, 1e-13)
    harmonics = sc._get("special", "harmonics", int)
    samples = sc._get("special", "samples", int, 256)
    max_iter = sc._get("special", "max_iter", int, 200)
    if not isinstance(sc.forcing, (PeriodicForcing, ZeroForcing)):
        raise ConfigParseError(f"{sc.path}: special needs periodic or zero forcing")
    period = sc._get("special", "period", float, 2 * np.pi)
    forcing = sc.forcing if isinstance(sc.forcing, PeriodicForcing) else None
    sol = special.solve_periodic(sigma, forcing, sc.params, tol, max_iter, harmonics, period=period)
    traj = sol.trajectory(samples)
    write_trajectory_csv(out / "special.csv", traj, sc.forcing, sc.params)
    header = {"sigma": sol.sigma, "period": sol.period, "residual": sol.residual,
              "iterations": sol.iterations, "closure": sol.closure(), "harmonics": sol.harmonics}
    write_json(out / "special.json", header)
    return {"files": ["special.csv", "special.json"], "residual": sol.residual}


def cmd_basin(sc: Scenario, out: Path):
    n = sc.params.n_modes
    e1 = sc.params.operator.e1()
    a_u = sc._vector("basin", "a_u", default_zero=True) if sc.cfg.has_option("basin", "a_u") else 0.5 * sc.params.sigma0 * e1
    b_u = sc._vector("basin", "b_u", default_zero=True) if sc.cfg.has_option("basin", "b_u") else -a_u
    a = PhaseState(a_u, sc._vector("basin", "a_v"))
    b = PhaseState(b_u, sc._vector("basin", "b_v"))
    res = basin.bisect_boundary(
        a, b, sc.forcing, sc.params,
        horizon=sc._get("basin", "horizon", float, 150.0),
        width_tol=sc._get("basin", "width_tol", float, 1e-10),
        dt=sc._get("basin", "dt", float, 1e-2),
    )
    payload = res.as_dict()
    payload["n_modes"] = n
    write_json(out / "basin.json", payload)
    return {"files": ["basin.json"], "width": res.width}


def cmd_lemma_check(sc: Scenario, out: Path):
    horizon = sc._get("lemma", "horizon", float, 200.0)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(lambda c: asymptotics.run_lemma_case(c, horizon), asymptotics.LEMMA_SUITE))
    payload = {"passed": all(r["passed"] for r in results), "cases": results}
    write_json(out / "lemma.json", payload)
    return {"files": ["lemma.json"], "passed": payload["passed"]}


COMMANDS = {
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "energies": cmd_energies,
    "special": cmd_special,
    "basin": cmd_basin,
    "lemma-check": cmd_lemma_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="duffing-flow", description="Simulate and verify the damped modal Duffing system.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--scenario", required=True, help="INI scenario file")
    p.add_argument("--out", help="output directory (overrides [outputs] directory)")
    p.add_argument("--seed", type=int, help="override [initial] seed")
    p.add_argument("--quiet", action="store_true", help="suppress the summary line on stdout")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario, args.seed)
        out = Path(args.out if args.out is not None else sc.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        summary = COMMANDS[args.subcommand](sc, out)
    except DuffingFlowError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}))
        return 2
    if not args.quiet:
        print(json.dumps(_jsonable({"subcommand": args.subcommand, **summary}), sort_keys=True))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
