"""Command line front end.

Subcommands run one problem each from a JSON config file and write
deterministic artifacts (manifold payload, residual CSV, summary) into the
output directory.  Every failure exits through the documented code map:

    0  success
    2  configuration problem (bad file, bad schema, bad structure)
    3  violated solvability hypothesis (signs, energy threshold, ...)
    4  small-divisor underflow (resonant or near-resonant frequency)
    5  diagnostic bound violation (sector/orbit/contraction checks)

with a machine-readable JSON description of the error on stderr.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import operators
from .applications import (HeCuParams, OscillatorParams,
                           build_oscillator_field, hecu_manifolds)
from .errors import (BoundViolated, CNotInvertible, ConfigError,
                     DimensionMismatch, Diverged, EnergyBelowThreshold,
                     FlowLeftSector, HypothesisViolated,
                     NonPositiveLeadingCoefficient, NonZeroAverage,
                     ParatoriError, SingularSystem, SmallDivisorUnderflow,
                     StructureViolation, TailNotConverged, TruncationTooLow,
                     ZeroLeadingCoefficient)
from .flow_solver import solve_flow_to_order, solve_helicoure
from .fourier import FourierSeries
from .ioutil import (canonical_json, pair_from_payload, pair_payload,
                     report_payload, residual_csv)
from .map_solver import solve_to_order
from .mapdata import TaylorFourierMap
from .pairs import compare_pairs, residual_report

_CODE_CONFIG = 2
_CODE_HYPOTHESIS = 3
_CODE_SMALL_DIVISOR = 4
_CODE_BOUND = 5

_ERROR_CODES = (
    (SmallDivisorUnderflow, _CODE_SMALL_DIVISOR),
    ((BoundViolated, TailNotConverged, Diverged, FlowLeftSector), _CODE_BOUND),
    ((HypothesisViolated, NonPositiveLeadingCoefficient,
      ZeroLeadingCoefficient, CNotInvertible, EnergyBelowThreshold),
     _CODE_HYPOTHESIS),
    ((ConfigError, DimensionMismatch, StructureViolation, NonZeroAverage,
      SingularSystem, TruncationTooLow), _CODE_CONFIG),
)


def _error_payload(err):
    detail = {}
    if isinstance(err, SmallDivisorUnderflow):
        detail = {"mode": list(err.mode), "magnitude": err.magnitude,
                  "floor": err.floor}
    elif isinstance(err, BoundViolated) and hasattr(err, "witness"):
        u, j = err.witness
        detail = {"witness_point": complex(u), "witness_iterate": int(j)}
    for cls, code in _ERROR_CODES:
        if isinstance(err, cls):
            return code, {"error": type(err).__name__, "exit_code": code,
                          "message": str(err), "detail": detail}
    return _CODE_CONFIG, {"error": type(err).__name__,
                          "exit_code": _CODE_CONFIG,
                          "message": str(err), "detail": detail}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(canonical_json({
            "error": "ConfigError", "exit_code": _CODE_CONFIG,
            "message": message, "detail": {}}))
        raise SystemExit(_CODE_CONFIG)


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def _series_spec(spec, dim, cut, what):
    """A coefficient from config: plain number, or {const, modes} where
    modes maps 'k1,k2,...' to [re, im] of the one-sided coefficient."""
    if isinstance(spec, (int, float)):
        return FourierSeries.constant(float(spec), dim, cut)
    if not isinstance(spec, dict):
        raise ConfigError("%s: expected number or {const, modes}" % what)
    s = FourierSeries.constant(float(spec.get("const", 0.0)), dim, cut)
    modes = {}
    for key, val in spec.get("modes", {}).items():
        try:
            mode = tuple(int(t) for t in str(key).split(","))
            re, im = float(val[0]), float(val[1])
        except (ValueError, IndexError, TypeError):
            raise ConfigError("%s: bad mode entry %r" % (what, key))
        if len(mode) != dim:
            raise ConfigError("%s: mode %s has %d axes, expected %d"
                              % (what, key, len(mode), dim))
        modes[mode] = complex(re, im)
    if modes:
        s = s + FourierSeries.from_modes(modes, dim, cut)
    return s


def _terms_spec(block, dim, cut, what):
    out = {}
    for key, spec in (block or {}).items():
        try:
            l, m = (int(t) for t in str(key).split(","))
        except ValueError:
            raise ConfigError("%s: bad exponent key %r, expected 'l,m'"
                              % (what, key))
        out[(l, m)] = _series_spec(spec, dim, cut, "%s[%s]" % (what, key))
    return out


def _map_from_config(block, kind):
    for key in ("cut", "freqs"):
        if key not in block:
            raise ConfigError("problem block misses %r" % key)
    d = int(block.get("d", len(block["freqs"]) if kind == "map" else 1))
    drive = int(block.get("drive", 0))
    if kind == "map" and drive:
        raise ConfigError("maps take no drive axes; bake forcing into d")
    dim = d + drive
    cut = int(block["cut"])
    freqs = [float(v) for v in block["freqs"]]
    theta_blocks = block.get("theta_terms", [])
    if len(theta_blocks) != d:
        raise ConfigError("theta_terms lists %d axes, d = %d"
                          % (len(theta_blocks), d))
    return TaylorFourierMap(
        kind, d, drive, cut, freqs,
        _terms_spec(block.get("x_terms"), dim, cut, "x_terms"),
        _terms_spec(block.get("y_terms"), dim, cut, "y_terms"),
        [_terms_spec(t, dim, cut, "theta_terms[%d]" % a)
         for a, t in enumerate(theta_blocks)],
        k=block.get("k"), p=block.get("p"))


class RunConfig:
    """Validated run settings shared by the solve subcommands."""

    _PROBLEMS = ("custom-map", "custom-flow", "oscillator", "hecu",
                 "helicoure")

    def __init__(self, raw, order=None, branch=None):
        if not isinstance(raw, dict):
            raise ConfigError("config root must be an object")
        self.raw = raw
        self.problem = raw.get("problem")
        if self.problem not in self._PROBLEMS:
            raise ConfigError("problem must be one of %s, got %r"
                              % (", ".join(self._PROBLEMS), self.problem))
        self.n_target = int(order if order is not None
                            else raw.get("n_target", 0))
        if self.n_target < 2:
            raise ConfigError("n_target must be at least 2")
        self.branch = branch or raw.get("branch", "stable")
        if self.branch not in ("stable", "unstable"):
            raise ConfigError("branch must be stable or unstable")
        self.trunc = raw.get("trunc")
        if self.trunc is not None:
            self.trunc = int(self.trunc)
        self.sd_floor = float(raw.get("sd_floor", 1e-12))
        self.assert_tol = float(raw.get("assert_tol", 1e-9))
        if self.sd_floor <= 0 or self.assert_tol <= 0:
            raise ConfigError("tolerances must be positive")
        self.theta_leading = raw.get("theta_leading", "closed_form")
        self.sweep = raw.get("sweep")
        if self.sweep is not None and not isinstance(self.sweep, list):
            raise ConfigError("sweep must be a list of override objects")

    def check_sector(self, k):
        sec = self.raw.get("sector")
        if sec is None:
            return None
        beta, rho = float(sec["beta"]), float(sec["rho"])
        if not 0 < beta < math.pi / (k - 1):
            raise ConfigError(
                "sector opening %.6g outside (0, pi/(k-1)) for k = %d"
                % (beta, k))
        if rho <= 0:
            raise ConfigError("sector radius must be positive")
        return operators.Sector(beta, rho, k)


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise ConfigError("cannot read config: %s" % err)
    except ValueError as err:
        raise ConfigError("config is not valid JSON: %s" % err)


def _deep_merge(base, override):
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def _write(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# solve commands
# ---------------------------------------------------------------------------

def _solve_one(cfg):
    """Build and solve the configured problem; returns (pairs, summary)."""
    problem, raw = cfg.problem, cfg.raw
    extras = {}
    if problem == "custom-map":
        data = _map_from_config(raw.get("map") or {}, "map")
        pair = solve_to_order(data, cfg.n_target, branch=cfg.branch,
                              trunc=cfg.trunc, sd_floor=cfg.sd_floor,
                              assert_tol=cfg.assert_tol)
        pairs = {"pair": pair}
    elif problem == "custom-flow":
        data = _map_from_config(raw.get("field") or {}, "field")
        pair = solve_flow_to_order(data, cfg.n_target, branch=cfg.branch,
                                   trunc=cfg.trunc, sd_floor=cfg.sd_floor,
                                   assert_tol=cfg.assert_tol)
        pairs = {"pair": pair}
    elif problem == "helicoure":
        data = _map_from_config(raw.get("field") or {}, "field")
        pair = solve_helicoure(data, cfg.n_target, branch=cfg.branch,
                               theta_leading=cfg.theta_leading,
                               trunc=cfg.trunc, sd_floor=cfg.sd_floor,
                               assert_tol=cfg.assert_tol)
        pairs = {"pair": pair}
        extras["theta_leading"] = cfg.theta_leading
    elif problem == "oscillator":
        block = raw.get("oscillator") or {}
        try:
            params = OscillatorParams(
                block["c_pot"], block["n_pot"], block["alpha"],
                _series_spec(block.get("g", 1.0),
                             len(block.get("nu", ())),
                             int(block.get("cut", 16)), "oscillator g"),
                nu=block.get("nu", ()), cut=int(block.get("cut", 16)))
        except KeyError as err:
            raise ConfigError("oscillator block misses %s" % err)
        data = build_oscillator_field(params)
        pair = solve_flow_to_order(data, cfg.n_target, branch=cfg.branch,
                                   trunc=cfg.trunc, sd_floor=cfg.sd_floor,
                                   assert_tol=cfg.assert_tol)
        pairs = {"pair": pair}
        abar = params.alpha * params.g.average()
        extras["oracle_deltas"] = {
            "quadratic_mean": abs(data.coefficient_y((2, 0)).average() - abar),
            "normal_form_lead": abs(
                abs(pair.inner_coeff(2)) - math.sqrt(abar / 6.0)),
        }
    elif problem == "hecu":
        block = raw.get("hecu") or {}
        try:
            params = HeCuParams(block["D"], block["alpha_morse"], block["m"],
                                block["h"], block.get("g_surface", 0.0),
                                cut=int(block.get("cut", 16)))
        except KeyError as err:
            raise ConfigError("hecu block misses %s" % err)
        stable, unstable, rep, reports = hecu_manifolds(
            params, cfg.n_target,
            expansion=block.get("expansion", "displayed"),
            theta_leading=cfg.theta_leading, return_reports=True)
        pairs = {"stable": stable, "unstable": unstable}
        extras["hecu_report"] = rep
        return None, pairs, extras, reports
    else:  # pragma: no cover - guarded by RunConfig
        raise ConfigError("unhandled problem %r" % problem)
    return data, pairs, extras, None


def _summarize(cfg, data, pairs, extras, out_dir, ready_reports=None):
    summary = {"problem": cfg.problem, "branch": cfg.branch,
               "n_target": cfg.n_target}
    summary.update(extras)
    for name, pair in sorted(pairs.items()):
        fname = "pair.json" if len(pairs) == 1 else "%s.json" % name
        _write(out_dir, fname, canonical_json(pair_payload(pair)))
        rep = None
        if ready_reports is not None:
            rep = ready_reports.get(name)
        elif data is not None:
            rep = residual_report(data, pair)
        if rep is not None:
            csv_name = ("residual.csv" if len(pairs) == 1
                        else "residual_%s.csv" % name)
            _write(out_dir, csv_name, residual_csv(rep))
            summary.setdefault("residuals", {})[name] = report_payload(rep)
        summary.setdefault("orders", {})[name] = {
            "achieved": pair.order,
            "contract": list(pair.contract_orders()),
            "truncation": pair.trunc,
        }
    _write(out_dir, "summary.json", canonical_json(summary))
    return summary


def _run_solve(cfg, out_dir):
    data, pairs, extras, ready_reports = _solve_one(cfg)
    if cfg.problem == "hecu":
        # residual measurements come from the solve coordinates; the emitted
        # pairs live in wall coordinates
        _write(out_dir, "hecu_report.json",
               canonical_json(extras["hecu_report"]))
    _summarize(cfg, data, pairs, extras, out_dir, ready_reports)
    return 0


def _cmd_solve(args, expected_problem):
    raw = _load_config(args.config)
    cfg = RunConfig(raw, order=args.order, branch=args.branch)
    if cfg.problem != expected_problem:
        raise ConfigError("config problem is %r but the subcommand expects %r"
                          % (cfg.problem, expected_problem))
    if cfg.sweep:
        index = []
        for i, override in enumerate(cfg.sweep):
            if not isinstance(override, dict):
                raise ConfigError("sweep entry %d is not an object" % i)
            merged = _deep_merge(raw, override)
            merged.pop("sweep", None)
            sub = RunConfig(merged, order=args.order, branch=args.branch)
            sub_dir = os.path.join(args.out, "sweep_%03d" % i)
            _run_solve(sub, sub_dir)
            index.append({"entry": i, "override": override,
                          "dir": "sweep_%03d" % i})
        _write(args.out, "sweep_index.json", canonical_json(index))
        return 0
    return _run_solve(cfg, args.out)


# ---------------------------------------------------------------------------
# operator diagnostics
# ---------------------------------------------------------------------------

def _cmd_diagnose(args):
    raw = _load_config(args.config)
    cfg = RunConfig(raw, order=args.order, branch=args.branch)
    if cfg.problem != "custom-map":
        raise ConfigError("diagnose-operators runs on a custom-map config")
    data = _map_from_config(raw.get("map") or {}, "map")
    pair = solve_to_order(data, cfg.n_target, branch=cfg.branch,
                          trunc=cfg.trunc, sd_floor=cfg.sd_floor,
                          assert_tol=cfg.assert_tol)
    sector = cfg.check_sector(pair.k)
    if sector is None:
        raise ConfigError("diagnose-operators needs a sector block")
    diag_block = raw.get("diagnostics") or {}
    mu = float(diag_block.get("mu", 0.5))
    out = {"order": pair.order, "mu": mu,
           "sector": {"beta": sector.beta, "rho": sector.rho, "k": sector.k}}

    grid = diag_block.get("grid", [20, 20])
    out["sector_iterates"] = operators.sector_iterate_check(
        pair.inner, sector, mu, int(diag_block.get("iterates", 1000)),
        grid_shape=(int(grid[0]), int(grid[1])))

    out["inverse_norm_limit"] = operators.map_inverse_norm_limit(
        pair.order, pair.k, mu, sector.rho)

    probe_block = diag_block.get("probe")
    if probe_block is not None:
        samples = probe_block.get("samples", [8, 5, 8])
        rep = operators.contraction_probe(
            data, pair, sector, mu,
            ball_alpha=float(probe_block.get("ball_alpha", 0.5)),
            samples=tuple(int(s) for s in samples),
            n_iter=int(probe_block.get("n_iter", 10)))
        out["contraction"] = rep
    _write(args.out, "operators.json", canonical_json(out))
    return 0


# ---------------------------------------------------------------------------
# artifact comparison
# ---------------------------------------------------------------------------

def _cmd_compare(args):
    def load_pair(path):
        try:
            with open(path) as fh:
                return pair_from_payload(json.load(fh))
        except OSError as err:
            raise ConfigError("cannot read %s: %s" % (path, err))
        except (ValueError, KeyError) as err:
            raise ConfigError("%s is not a manifold payload: %s" % (path, err))

    a, b = load_pair(args.a), load_pair(args.b)
    diff = compare_pairs(a, b, tol=args.tol)
    report = {
        "a": {"path": args.a, "order": a.order, "branch": a.branch},
        "b": {"path": args.b, "order": b.order, "branch": b.branch},
        "tol": args.tol,
        "first_differing_order": diff,
        "identical": all(v is None for v in
                         [diff["x"], diff["y"], diff["inner"]] + diff["theta"]),
    }
    text = canonical_json(report)
    if args.out:
        _write(args.out, "compare.json", text)
    sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None):
    parser = _Parser(prog="paratori",
                     description="Invariant manifolds of parabolic tori: "
                                 "order-by-order solves and diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)

    solve_names = {
        "solve-map": "custom-map",
        "solve-flow": "custom-flow",
        "helicoure": "helicoure",
        "oscillator": "oscillator",
        "hecu": "hecu",
    }
    for name in list(solve_names) + ["diagnose-operators"]:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=".")
        sp.add_argument("--order", type=int, default=None)
        sp.add_argument("--branch", choices=("stable", "unstable"),
                        default=None)

    cp = sub.add_parser("compare")
    cp.add_argument("a")
    cp.add_argument("b")
    cp.add_argument("--out", default=None)
    cp.add_argument("--tol", type=float, default=1e-11)

    args = parser.parse_args(argv)
    try:
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "diagnose-operators":
            return _cmd_diagnose(args)
        return _cmd_solve(args, solve_names[args.command])
    except ParatoriError as err:
        code, payload = _error_payload(err)
        sys.stderr.write(canonical_json(payload))
        return code
    except AssertionError as err:
        sys.stderr.write(canonical_json({
            "error": "AssertionError", "exit_code": _CODE_BOUND,
            "message": str(err), "detail": {}}))
        return _CODE_BOUND


if __name__ == "__main__":
    raise SystemExit(main())
