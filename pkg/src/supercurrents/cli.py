"""Command-line driver: ``supercurrents run <scenario.json> --out DIR`` and ``supercurrents list-builtins``.

A scenario is a JSON file::

    {"n": 2,
     "objects": {"T": {"current": {"builtin": "plane"}},
                 "w": {"weight": {"euclidean": {}}}},
     "tasks": [{"op": "lelong", "args": {"current": "T", "weight": "w", "r_grid": [1, 0.5, 0.25]}}]}

Every task writes ``NN_<op>.json`` (and a CSV table when the result has
one).  Exit codes: 0 all checks pass, 1 a check failed, 2 the scenario does
not parse, 3 a declared hypothesis failed its sampled check, 4 a numeric
quantity did not converge.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .builtins import instantiate, list_builtins, sin_shell_masses
from .currents import Current, SmoothCurrent, plane_current, tropical_ddsharp
from .degree import degree, strip_experiment, weighted_degree
from .exterior import Superform
from .fields import MaxAffine, Polynomial, ScalarField, field_from_spec
from .lelong import HypothesisError, Weight, jensen_terms, lelong_number, m_lelong_number
from .positivity import check_eq1, form_is_m_positive, form_is_weakly_positive, is_m_convex, wedge_minor_constant
from .quadrature import MonteCarlo, Spherical, TensorGrid, quad_params

JOBS_ENV = "SUPERCURRENTS_JOBS"

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_HYPOTHESIS, EXIT_CONVERGENCE = 0, 1, 2, 3, 4


class ScenarioError(ValueError):
    pass


class NonConvergence(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# -- scenario parsing -----------------------------------------------------------------


def _need(d, key, where):
    if key not in d:
        raise ScenarioError(f"{where}: missing {key!r}")
    return d[key]


def parse_quad(spec, stochastic_seed=None):
    if spec is None:
        return None
    method = spec.get("method")
    if method == "spherical":
        return Spherical(int(spec.get("radial", 24)), int(spec.get("angular", 24)))
    if method == "tensor":
        return TensorGrid(int(spec.get("points", 24)), int(spec.get("panels", 1)))
    if method == "mc":
        seed = spec.get("seed", stochastic_seed)
        if seed is None:
            raise ScenarioError("Monte Carlo quadrature needs a seed")
        return MonteCarlo(int(_need(spec, "samples", "mc quad")), int(seed))
    raise ScenarioError(f"unknown quadrature {spec!r}")


class Scenario:
    """Parsed scenario: dimension, named objects, task list."""

    def __init__(self, data: dict, seed_override=None):
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a JSON object")
        self.raw = data
        self.n = int(_need(data, "n", "scenario"))
        self.seed_override = seed_override
        self.objects = {}
        for name, spec in data.get("objects", {}).items():
            try:
                self.objects[name] = self._build(spec)
            except ScenarioError:
                raise
            except (ValueError, KeyError, TypeError) as e:
                raise ScenarioError(f"object {name!r}: {e}") from e
        self.tasks = list(data.get("tasks", []))
        for i, t in enumerate(self.tasks):
            if not isinstance(t, dict) or "op" not in t:
                raise ScenarioError(f"task {i}: needs an 'op'")
            if t["op"] not in OPS:
                raise ScenarioError(f"task {i}: unknown op {t['op']!r}")
            if t["op"] in STOCHASTIC and self.seed(t) is None:
                raise ScenarioError(f"task {i} ({t['op']}) is stochastic and needs a seed")
            for key, val in t.get("args", {}).items():
                if key in REF_ARGS and isinstance(val, str) and val not in self.objects:
                    raise ScenarioError(f"task {i}: unresolved reference {val!r}")

    @property
    def hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def seed(self, task):
        if self.seed_override is not None:
            return int(self.seed_override)
        s = task.get("seed", self.raw.get("seed"))
        return None if s is None else int(s)

    def _build(self, spec):
        if not isinstance(spec, dict) or len(spec) != 1:
            raise ScenarioError(f"object spec must have exactly one key: {spec!r}")
        (kind, body), = spec.items()
        n = self.n
        if kind == "field":
            return field_from_spec(body, n)
        if kind == "form":
            return Superform.from_text(n, body)
        if kind == "weight":
            if "euclidean" in body:
                e = body["euclidean"] or {}
                return Weight.euclidean(n, e.get("center"), e.get("scale", 1))
            if "phi" in body:
                return Weight(field_from_spec(body["phi"], n))
            raise ScenarioError(f"bad weight {body!r}")
        if kind == "current":
            return self._current(body)
        if kind == "builtin":
            return instantiate(body["name"], body.get("n", n), **body.get("args", {}))
        raise ScenarioError(f"unknown object kind {kind!r}")

    def _current(self, body):
        n = self.n
        if "builtin" in body:
            obj = instantiate(body["builtin"], n, **body.get("args", {}))
            if not isinstance(obj, Current):
                raise ScenarioError(f"builtin {body['builtin']!r} is not a current")
            return obj
        if "form" in body:
            return SmoothCurrent(Superform.from_text(n, body["form"]), body.get("name", "T"))
        if "tropical" in body:
            return tropical_ddsharp(MaxAffine.from_rows(body["tropical"]))
        if "plane" in body:
            pl = body["plane"]
            return plane_current(n, pl.get("point", [0] * n), pl["tangent"])
        raise ScenarioError(f"bad current {body!r}")

    def get(self, name, kind=None):
        if not isinstance(name, str):
            return name
        obj = self.objects.get(name)
        if obj is None:
            raise ScenarioError(f"unresolved reference {name!r}")
        if kind is not None and not isinstance(obj, kind):
            raise ScenarioError(f"{name!r} is a {type(obj).__name__}, expected {kind.__name__}")
        return obj


# -- tasks ------------------------------------------------------------------------------


def _weight(sc, args):
    w = args.get("weight")
    return sc.get(w, Weight) if w is not None else Weight.euclidean(sc.n, args.get("center"))


def _sample_points(sc, args, seed):
    if "points" in args:
        return np.asarray(args["points"], dtype=float)
    s = args.get("sample")
    if s is None:
        return None
    rng = np.random.default_rng(seed if seed is not None else 0)
    R = float(s.get("radius", 1.0))
    X = rng.uniform(-R, R, size=(int(s.get("count", 32)), sc.n))
    return X[np.linalg.norm(X, axis=1) > 1e-3]


def task_check_eq1(sc, args, seed, jobs):
    rng = np.random.default_rng(seed)
    n = sc.n
    samples = int(args.get("samples", 100))
    max_degree = int(args.get("max_degree", 3))
    ks = args.get("k") or list(range(1, n + 1))
    const = args.get("constant")
    polys = [Polynomial.random(n, max_degree, rng) for _ in range(samples)]

    def one(u):
        out = {}
        for k in ks:
            c = Fraction(*const) if const is not None else wedge_minor_constant(n, k)
            out[str(k)] = bool(check_eq1(u, k, c))
        return out

    with ThreadPoolExecutor(max_workers=jobs) as ex:
        rows = list(ex.map(one, polys))
    ok = all(all(r.values()) for r in rows)
    result = {"samples": [{"u": str(u), "exact_equal": r} for u, r in zip(polys, rows)], "all_exact_equal": ok}
    return ok, result, None


def task_positivity(sc, args, seed, jobs):
    obj = sc.get(_need(args, "object", "positivity"))
    cone = args.get("cone", "weak")
    X = _sample_points(sc, args, seed)
    if X is None:
        raise ScenarioError("positivity needs 'points' or 'sample'")
    m = int(args.get("m", sc.n))
    if cone == "m-convex":
        if not isinstance(obj, ScalarField):
            raise ScenarioError("m-convexity applies to fields")
        v = is_m_convex(obj, X, m)
        verdicts = [v]
    else:
        if not isinstance(obj, Superform):
            raise ScenarioError("cone checks apply to forms")
        fn = (lambda x: form_is_m_positive(obj, x, m)) if cone == "m-positive" else \
            (lambda x: form_is_weakly_positive(obj, x, samples=int(args.get("samples", 2000)), seed=seed))
        verdicts = [fn(x) for x in X]
    bad = [v for v in verdicts if not v.holds]
    expect = args.get("expect", True)
    holds = not bad
    result = {"holds": holds, "status": bad[0].status if bad else verdicts[0].status,
              "witness": bad[0].to_dict()["witness"] if bad else None,
              "samples": sum(v.samples or 1 for v in verdicts), "expect": expect}
    return holds == bool(expect), result, None


def task_jensen(sc, args, seed, jobs):
    T = sc.get(_need(args, "current", "jensen"), Current)
    w = _weight(sc, args)
    quad = parse_quad(args.get("quad"), seed)
    J = jensen_terms(T, w, float(_need(args, "r1", "jensen")), float(_need(args, "r2", "jensen")), quad,
                     ddT=None if args.get("closed") else "auto")
    tol = float(args.get("tol", 5e-3))
    res = J.to_dict()
    return J.relative_residual <= tol, res, None


def task_lelong(sc, args, seed, jobs):
    T = sc.get(_need(args, "current", "lelong"), Current)
    w = _weight(sc, args)
    rep = lelong_number(T, w, args.get("r_grid"), parse_quad(args.get("quad"), seed),
                        hypotheses=args.get("hypotheses"), sample_points=_sample_points(sc, args, seed))
    ok = rep.monotone_ok if args.get("assert_monotone", True) else True
    return ok, rep.to_dict(), rep.csv_rows()


def task_m_lelong(sc, args, seed, jobs):
    T = sc.get(_need(args, "current", "m_lelong"), Current)
    rep = m_lelong_number(T, args.get("center", [0] * sc.n), int(_need(args, "m", "m_lelong")),
                          r_grid=args.get("r_grid"), quad=parse_quad(args.get("quad"), seed))
    ok = True
    if "expect_limit" in args:
        ok = rep.extra["limit_exists"] == bool(args["expect_limit"])
    return ok, rep.to_dict(), rep.csv_rows()


def task_degree(sc, args, seed, jobs):
    T = sc.get(_need(args, "current", "degree"), Current)
    R_grid = _need(args, "R_grid", "degree")
    quad = parse_quad(args.get("quad"), seed)
    if args.get("weight") is not None:
        phi = sc.get(args["weight"])
        phi = phi.phi if isinstance(phi, Weight) else phi
        rep = weighted_degree(T, phi, R_grid, quad)
    else:
        rep = degree(T, R_grid, quad)
    if args.get("require_converged", True) and not rep.converged:
        raise NonConvergence("partial degrees did not settle", rep.to_dict())
    return True, rep.to_dict(), rep.csv_rows()


def task_strip(sc, args, seed, jobs):
    T = sc.get(_need(args, "current", "strip"), Current)
    rep = strip_experiment(T, int(_need(args, "k", "strip")), float(args.get("delta", 2)), args.get("r_grid"),
                           declared=args.get("declared", "concave"))
    ok = True
    if "expect_bounded" in args:
        ok = rep["bounded"] == bool(args["expect_bounded"])
    rows = [("r", "nu")] + list(zip(rep["r_grid"], rep["nu"]))
    return ok, rep, rows


def task_sin_shells(sc, args, seed, jobs):
    rep = sin_shell_masses(int(args.get("count", 20)), parse_quad(args.get("quad"), seed))
    p = rep["partial"]
    ok = all(b > a for a, b in zip(p, p[1:])) and p[-1] > 10 * p[0]
    rows = [("shell", "mass", "partial")] + [(k + 1, m, q) for k, (m, q) in enumerate(zip(rep["per_shell"], p))]
    return ok, rep, rows


OPS = {
    "check_eq1": task_check_eq1,
    "positivity": task_positivity,
    "jensen": task_jensen,
    "lelong": task_lelong,
    "m_lelong": task_m_lelong,
    "degree": task_degree,
    "strip": task_strip,
    "sin_shells": task_sin_shells,
}
STOCHASTIC = {"check_eq1", "positivity"}
REF_ARGS = {"current", "weight", "object"}


# -- output -----------------------------------------------------------------------------


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if np.isfinite(f) else repr(f)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (str, int, bool)) or v is None:
        return v
    return str(v)


def _quad_record(args, seed):
    try:
        q = parse_quad(args.get("quad"), seed)
    except ScenarioError:
        return None
    return quad_params(q) if q is not None else "module default"


def run(path, out_dir, seed_override=None, jobs=None) -> int:
    try:
        data = json.loads(Path(path).read_text())
        sc = Scenario(data, seed_override)
    except (OSError, json.JSONDecodeError, ScenarioError) as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    jobs = int(jobs or os.environ.get(JOBS_ENV, 1))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    codes = []
    summary = []
    for i, task in enumerate(sc.tasks):
        op = task["op"]
        args = task.get("args", {})
        seed = sc.seed(task)
        started = time.time()
        rows = None
        try:
            ok, result, rows = OPS[op](sc, args, seed, jobs)
            status, code = ("pass" if ok else "fail"), (EXIT_OK if ok else EXIT_CHECK)
        except HypothesisError as e:
            status, code, result = "hypothesis_failed", EXIT_HYPOTHESIS, {"error": str(e), "witness": e.witness}
        except NonConvergence as e:
            status, code, result = "not_converged", EXIT_CONVERGENCE, {"error": str(e), "diagnostics": e.diagnostics}
        except ScenarioError as e:
            status, code, result = "parse_error", EXIT_PARSE, {"error": str(e)}
        codes.append(code)
        name = f"{i:02d}_{task.get('name', op)}"
        report = {
            "header": {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(started)),
                       "elapsed_s": round(time.time() - started, 3), "jobs": jobs},
            "scenario_hash": sc.hash,
            "version": __version__,
            "task": {"index": i, "op": op, "args": args, "seed": seed},
            "quadrature": _quad_record(args, seed),
            "status": status,
            "result": result,
        }
        (out / f"{name}.json").write_text(json.dumps(_clean(report), indent=2, sort_keys=True) + "\n")
        if rows:
            with open(out / f"{name}.csv", "w", newline="") as fh:
                csv.writer(fh).writerows(rows)
        summary.append({"task": name, "status": status})
        print(f"{name}: {status}")
    (out / "summary.json").write_text(json.dumps({"scenario_hash": sc.hash, "tasks": summary}, indent=2) + "\n")
    # hypothesis failures outrank non-convergence, which outranks a failed check
    for code in (EXIT_PARSE, EXIT_HYPOTHESIS, EXIT_CONVERGENCE, EXIT_CHECK):
        if code in codes:
            return code
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="supercurrents", description="superform and supercurrent calculus checks")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("scenario")
    r.add_argument("--out", required=True, help="output directory for JSON/CSV reports")
    r.add_argument("--seed-override", type=int, default=None)
    r.add_argument("--jobs", type=int, default=None, help=f"worker threads (default ${JOBS_ENV} or 1)")
    sub.add_parser("list-builtins", help="print the built-in corpus")
    a = ap.parse_args(argv)
    if a.cmd == "list-builtins":
        for b in list_builtins():
            print(f"{b['name']:28s} {b['kind']:8s} n in {b['dims']}  {b['description']}")
        return EXIT_OK
    return run(a.scenario, a.out, a.seed_override, a.jobs)


if __name__ == "__main__":
    sys.exit(main())
