"""Command-line experiments: region comparisons, decay fits, norm ratios and sweeps.

Every subcommand accepts ``--config`` (JSON whose keys match the flag names with
underscores), ``--out``, ``--seed`` and ``--threads``.  Flags override config
values, which override the built-in defaults.  Tables are written as CSV and a
JSON summary is written next to them and echoed to stdout.

Exit status: 0 on success, 2 for configuration errors, 3 for numerical failures.
"""
from __future__ import annotations

import csv
import functools
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import __version__
from .averaging import (
    GridFunction,
    TimeSampling,
    continuity_diff_norm,
    lp_norm,
    maximal_on_grid,
)
from .counterexamples import TAGS, measure_scaling
from .delta_grid import MeasuredBox
from .fitting import loglog_slope
from .geometry import (
    FAMILY_ALIASES,
    Cutoff,
    QuadratureError,
    SpecError,
    SurfaceSpec,
    decay_profile,
    measure_fourier,
    parse_family,
)
from .regions import RegionName, compare_regions, make_region, boundary_rows, parse_point
from .sparse import (
    SparsenessError,
    indicator_pair,
    parabola_model,
    parabola_window,
    verify_sparse_domination,
)
from .weights import (
    WEIGHT_FAMILIES,
    ap_characteristic,
    characteristic_bound,
    conjugate,
    cube_family,
    maximal_values,
    named_weight,
    rh_characteristic,
    weighted_norm_ratio,
)

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(click.ClickException):
    exit_code = EXIT_CONFIG


class NumericalError(click.ClickException):
    exit_code = EXIT_NUMERIC


# plumbing


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def dumps(summary: dict) -> str:
    return json.dumps(_jsonable(summary), indent=2, sort_keys=True)


def csv_text(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writeheader()
    for r in rows:
        w.writerow({c: _cell(r.get(c, "")) for c in columns})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def resolve(flags: dict, defaults: dict) -> dict:
    """Merge defaults, config file and explicit flags (in increasing priority)."""
    cfg = _load_config(flags.get("config"))
    common = {"config", "out", "seed", "threads"}
    unknown = set(cfg) - set(defaults) - common - {"spec"}
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = dict(defaults)
    out.update({"out": "results", "seed": 0, "threads": 1})
    out.update({k: v for k, v in cfg.items() if k != "spec"})
    for k, v in flags.items():
        if k == "config" or v is None or (isinstance(v, tuple) and not v):
            continue
        out[k] = v
    out["spec_doc"] = cfg.get("spec")
    if int(out["threads"]) < 1:
        raise ConfigError("--threads must be at least 1")
    return out


def _spec(s: dict, family_key: str = "family") -> SurfaceSpec:
    try:
        if s.get("spec_doc") is not None:
            return SurfaceSpec.from_json(s["spec_doc"])
        return SurfaceSpec(
            parse_family(s[family_key]), int(s["d"]), m=int(s.get("m", 1)), c=float(s.get("c", 0.0)),
            phi_coeffs=tuple(_floats(s.get("phi", "1"))),
            support_radius=float(s.get("support_radius", 0.125)),
        )
    except (SpecError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(Fraction(v.strip())) for v in str(text).split(",") if v.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse numbers from {text!r}") from exc


def _pairs(text) -> list[tuple[float, float]]:
    """``"2,2;2,3"`` or ``[[2, 2], [2, 3]]`` into ``[(p, q), ...]``."""
    items = text if isinstance(text, (list, tuple)) else [t for t in str(text).split(";") if t.strip()]
    out = []
    for it in items:
        vals = _floats(it)
        if len(vals) != 2:
            raise ConfigError(f"exponent pair needs two entries, got {it!r}")
        out.append((vals[0], vals[1]))
    return out


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _emit(s: dict, name: str, summary: dict, tables: dict[str, str] | None = None,
          extra: dict[str, str] | None = None) -> None:
    out = Path(s["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
        for fname, text in (tables or {}).items():
            (out / fname).write_text(text, newline="")
        for fname, text in (extra or {}).items():
            (out / fname).write_text(text)
        text = dumps(summary)
        (out / f"{name}.json").write_text(text + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write to {out}: {exc}") from exc
    click.echo(text)


def common_options(fn):
    @click.option("--config", type=click.Path(dir_okay=False), default=None, help="JSON config file.")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
    @click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Random seed.")
    @click.option("--threads", type=int, default=None, help="Worker threads for independent jobs.")
    @functools.wraps(fn)
    def wrapper(**kw):
        return fn(**kw)

    return wrapper


FAMILY_CHOICE = click.Choice(sorted(FAMILY_ALIASES) + sorted(v.value for v in FAMILY_ALIASES.values()))


@click.group()
@click.version_option(__version__, prog_name="curvmax")
def cli():
    """Maximal averages along curves and surfaces: numerical experiments."""


# regions


@cli.command()
@click.option("--family", "region", type=click.Choice([r.value for r in RegionName]), default=None)
@click.option("--d", type=int, default=None)
@click.option("--compare", type=click.Choice([r.value for r in RegionName]), default=None)
@click.option("--compare-d", type=int, default=None, help="d for the second region (defaults to --d).")
@click.option("--point", "points", multiple=True, help="Membership query '1/p,1/q', repeatable.")
@click.option("--samples", type=int, default=None, help="Lattice denominator of the sampling cross-check.")
@common_options
def regions(**flags):
    """Boundary CSV of an exponent region, membership queries and a comparison verdict."""
    s = resolve(flags, {"region": "delta0", "d": 2, "compare": None, "compare_d": None,
                        "points": [], "samples": 120})
    try:
        a = make_region(s["region"], s["d"])
        pts = [parse_point(p) for p in s["points"]]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = boundary_rows(a)
    summary = {"command": "regions", "region": a.name, "d": s["d"],
               "membership": {str(p): a.contains(p) for p in pts}}
    if s["compare"]:
        try:
            b = make_region(s["compare"], s["compare_d"] if s["compare_d"] is not None else s["d"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        cmp = compare_regions(a, b, int(s["samples"]))
        rows += boundary_rows(b)
        summary.update({
            "compare": b.name, "compare_d": b.d, "verdict": cmp.verdict.value,
            "relation": _relation(a.name, b.name, cmp.verdict),
            "witness_a_not_b": str(cmp.witness_a_not_b) if cmp.witness_a_not_b else None,
            "witness_b_not_a": str(cmp.witness_b_not_a) if cmp.witness_b_not_a else None,
            "lattice_points": cmp.samples,
        })
    cols = ["region", "d", "kind", "order", "inv_p", "inv_q"]
    _emit(s, "regions", summary, {"regions.csv": csv_text(rows, cols)})


def _relation(a: str, b: str, verdict) -> str:
    return {"equal": f"{a} = {b}", "A<B": f"{a} strictly inside {b}",
            "B<A": f"{b} strictly inside {a}", "incomparable": f"{a} and {b} incomparable"}[verdict.value]


# fourier decay


@cli.command("fourier-decay")
@click.option("--family", type=FAMILY_CHOICE, default=None)
@click.option("--d", type=int, default=None)
@click.option("--m", type=int, default=None)
@click.option("--c", type=float, default=None)
@click.option("--phi", default=None, help="Taylor coefficients of phi, e.g. '1,0,1'.")
@click.option("--support-radius", type=float, default=None)
@click.option("--direction", default=None, help="Frequency direction, e.g. '0,1'.")
@click.option("--lmin", type=int, default=None, help="Smallest lambda exponent (base 2).")
@click.option("--lmax", type=int, default=None, help="Largest lambda exponent (base 2).")
@click.option("--per-octave", type=int, default=None)
@click.option("--tol", type=float, default=None)
@common_options
def fourier_decay(**flags):
    """Table of |mu^(lambda w)| with a zero-frequency row and the fitted log-log slope."""
    s = resolve(flags, {"family": "homogeneous", "d": 2, "m": 1, "c": 0.0, "phi": "1",
                        "support_radius": 1.0, "direction": None, "lmin": 4, "lmax": 10,
                        "per_octave": 2, "tol": 1e-10})
    spec = _spec(s)
    cut = Cutoff.for_spec(spec)
    n = spec.ambient_dim
    w = np.array(_floats(s["direction"])) if s["direction"] else np.eye(n)[-1]
    if w.shape != (n,) or not np.any(w):
        raise ConfigError(f"direction must be a nonzero vector of length {n}")
    w = w / np.linalg.norm(w)
    if int(s["lmax"]) <= int(s["lmin"]):
        raise ConfigError("need lmax > lmin")
    count = (int(s["lmax"]) - int(s["lmin"])) * int(s["per_octave"]) + 1
    lams = 2.0 ** np.linspace(int(s["lmin"]), int(s["lmax"]), count)
    tol = float(s["tol"])
    zero = abs(measure_fourier(spec, cut, np.zeros(n), tol))
    vals = _pmap(lambda lam: float(decay_profile(spec, cut, [w], [lam], tol)[0, 0]), lams, int(s["threads"]))
    rows = [{"lambda": 0.0, "abs_value": zero}] + [{"lambda": l, "abs_value": v} for l, v in zip(lams, vals)]
    fit = loglog_slope(lams, vals)
    summary = {"command": "fourier-decay", "spec": spec.to_json(), "direction": w.tolist(),
               "integral_eta": zero, "slope": fit.slope, "r2": fit.r2,
               "lambda_range": [float(lams[0]), float(lams[-1])]}
    _emit(s, "fourier_decay", summary, {"fourier_decay.csv": csv_text(rows, ["lambda", "abs_value"])})


# maximal norm


def _test_function(kind: str, box: MeasuredBox, res, rng) -> GridFunction:
    if kind == "indicator":
        half = 0.25 * np.asarray(box.sides)
        mid = 0.5 * (np.asarray(box.lower) + np.asarray(box.upper))
        return GridFunction.sample(box, res, lambda x: np.all(np.abs(x - mid) <= half, axis=-1).astype(float))
    if kind == "bump":
        mid = 0.5 * (np.asarray(box.lower) + np.asarray(box.upper))
        rad = 0.25 * min(box.sides)
        return GridFunction.sample(box, res, lambda x: np.exp(-np.sum(((x - mid) / rad) ** 2, axis=-1)))
    if kind == "random":
        return GridFunction(box, rng.random(tuple(res)))
    raise ConfigError(f"unknown test function {kind!r}")


def _box(text, n: int) -> MeasuredBox:
    v = _floats(text)
    if len(v) == 2:
        v = [v[0]] * n + [v[1]] * n
    if len(v) != 2 * n:
        raise ConfigError(f"box needs 2 or {2 * n} numbers")
    try:
        return MeasuredBox(tuple(v[:n]), tuple(v[n:]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@cli.command("maximal-norm")
@click.option("--family", type=FAMILY_CHOICE, default=None)
@click.option("--d", type=int, default=None)
@click.option("--m", type=int, default=None)
@click.option("--c", type=float, default=None)
@click.option("--phi", default=None)
@click.option("--support-radius", type=float, default=None)
@click.option("--pairs", default=None, help="Exponent pairs 'p,q;p,q'.")
@click.option("--data", type=click.Choice(["indicator", "bump", "random"]), default=None)
@click.option("--input", "input_path", type=click.Path(dir_okay=False), default=None,
              help="GridFunction binary file used instead of --data.")
@click.option("--box", default=None, help="Data box 'lo,hi' or per-axis lower then upper.")
@click.option("--resolution", type=int, default=None)
@click.option("--eval-box", default=None)
@click.option("--eval-resolution", type=int, default=None)
@click.option("--times", type=int, default=None, help="Dense samples of t in [1, 2].")
@click.option("--nodes", type=int, default=None)
@common_options
def maximal_norm(**flags):
    """``||sup_{1<=t<=2} |A_t f| ||_q / ||f||_p`` over a list of exponent pairs."""
    s = resolve(flags, {"family": "homogeneous", "d": 2, "m": 1, "c": 0.0, "phi": "1",
                        "support_radius": 0.5, "pairs": "2,2;2,3;3/2,3", "data": "indicator",
                        "input_path": None, "box": "-1,1", "resolution": 64, "eval_box": "-2,2",
                        "eval_resolution": 48, "times": 65, "nodes": 256})
    spec = _spec(s)
    cut = Cutoff.for_spec(spec)
    n = spec.ambient_dim
    rng = np.random.default_rng(int(s["seed"]))
    if s["input_path"]:
        try:
            f = GridFunction.load(s["input_path"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load {s['input_path']}: {exc}") from exc
        if f.n != n:
            raise ConfigError("input grid dimension does not match the surface")
    else:
        f = _test_function(s["data"], _box(s["box"], n), (int(s["resolution"]),) * n, rng)
    pairs = _pairs(s["pairs"])
    ts = TimeSampling.dense(int(s["times"]))
    ebox = _box(s["eval_box"], n)
    mf = maximal_on_grid(spec, cut, f, ts, ebox, (int(s["eval_resolution"]),) * n, int(s["nodes"]))
    rows = []
    for p, q in pairs:
        den = lp_norm(f, p)
        if den == 0:
            raise NumericalError("f has zero L^p norm")
        num = lp_norm(mf, q)
        rows.append({"p": p, "q": q, "max_norm": num, "f_norm": den, "ratio": num / den})
    summary = {"command": "maximal-norm", "spec": spec.to_json(), "data": s["data"],
               "times": int(s["times"]), "ratios": [[r["p"], r["q"], r["ratio"]] for r in rows]}
    _emit(s, "maximal_norm", summary,
          {"maximal_norm.csv": csv_text(rows, ["p", "q", "max_norm", "f_norm", "ratio"])})


# counterexample scaling


@cli.command()
@click.option("--tag", "tags", multiple=True, type=click.Choice(TAGS), help="Family, repeatable.")
@click.option("--d", "ds", multiple=True, type=int, help="Type order, repeatable.")
@click.option("--p", type=float, default=None)
@click.option("--q", type=float, default=None)
@click.option("--kmin", type=int, default=None)
@click.option("--kmax", type=int, default=None, help="Largest k (S4/S5 are capped at 5).")
@click.option("--spacing", type=float, default=None, help="t_i spacing in units of the thin width.")
@click.option("--points", type=int, default=None, help="Sample points per axis in each domain.")
@click.option("--nodes", type=int, default=None)
@common_options
def scaling(**flags):
    """Counterexample sweep: lhs and rhs norms against k with fitted slopes."""
    s = resolve(flags, {"tags": ["S1"], "ds": [2], "p": 2.0, "q": 2.0, "kmin": 2, "kmax": 6,
                        "spacing": None, "points": 4, "nodes": 256})
    p, q = float(s["p"]), float(s["q"])
    if not (p >= 1 and q >= 1):
        raise ConfigError("p and q must be >= 1")
    jobs = []
    for tag in s["tags"]:
        if tag not in TAGS:
            raise ConfigError(f"unknown family {tag!r}")
        for d in s["ds"]:
            kmax = min(int(s["kmax"]), 5) if tag in ("S4", "S5") else int(s["kmax"])
            ks = list(range(int(s["kmin"]), kmax + 1))
            if len(ks) < 3:
                raise ConfigError(f"{tag} needs at least three k values, got {ks}")
            jobs.append((tag, int(d), ks))

    def run(job):
        tag, d, ks = job
        return measure_scaling(tag, d, p, q, ks, spacing=s["spacing"], points_per_axis=int(s["points"]),
                               nodes=int(s["nodes"]))

    try:
        results = _pmap(run, jobs, int(s["threads"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [r for res in results for r in res.rows()]
    summary = {"command": "scaling", "results": [res.summary() for res in results]}
    cols = ["tag", "d", "k", "p", "q", "lhs_norm", "rhs_norm"]
    _emit(s, "scaling", summary, {"scaling.csv": csv_text(rows, cols)})


# sparse


@cli.command()
@click.option("--p", type=float, default=None)
@click.option("--qp", type=float, default=None, help="The dual exponent q'.")
@click.option("--C", "C", type=float, default=None, help="Stopping constant.")
@click.option("--depth", type=int, default=None)
@click.option("--scale", type=int, default=None, help="Dyadic rescaling level j of the indicator pair.")
@click.option("--translate", default=None, help="Translation 'z1,z2' of the pair.")
@click.option("--resolution", type=int, default=None)
@click.option("--per-block", type=int, default=None)
@common_options
def sparse(**flags):
    """Sparse selection JSON and the ratio <M f, g> / max_s Lambda_s for the parabola model."""
    s = resolve(flags, {"p": 2.0, "qp": 2.0, "C": 10.0, "depth": 6, "scale": 0, "translate": "0,0",
                        "resolution": 32, "per_block": 64})
    p, qp, C = float(s["p"]), float(s["qp"]), float(s["C"])
    if not (p >= 1 and qp >= 1):
        raise ConfigError("exponents must be >= 1")
    if not C > 1 or C**-p + C**-qp > 0.25:
        raise ConfigError(f"C={C} too small for p={p}, q'={qp}: need C^-p + C^-q' <= 1/4")
    z = _floats(s["translate"])
    if len(z) != 2:
        raise ConfigError("--translate needs two numbers")
    j = int(s["scale"])
    spec, cut = parabola_model()
    f, g = indicator_pair(j, z, int(s["resolution"]))
    rep = verify_sparse_domination(spec, cut, f, g, p, qp, parabola_window(j), depth=int(s["depth"]),
                                   C=C, per_block=int(s["per_block"]))
    best = rep.collections[rep.best_shift]
    summary = {"command": "sparse", "pairing": rep.pairing, "ratio": rep.ratio,
               "best_shift": list(rep.best_shift),
               "forms": {",".join(k): v for k, v in sorted(rep.forms.items())},
               "cubes": len(best), "scale": j, "translate": z}
    _emit(s, "sparse", summary, extra={"sparse_selection.json": best.dumps() + "\n"})


# weights


@cli.command()
@click.option("--weight", type=click.Choice(WEIGHT_FAMILIES), default=None)
@click.option("--weight-file", type=click.Path(dir_okay=False), default=None,
              help="GridFunction binary with the weight values (on the data grid).")
@click.option("--gamma", type=float, default=None)
@click.option("--p", type=float, default=None)
@click.option("--q", type=float, default=None)
@click.option("--r", type=float, default=None)
@click.option("--kmin", type=int, default=None, help="Smallest cube scale in the characteristic window.")
@click.option("--kmax", type=int, default=None)
@click.option("--resolution", type=int, default=None)
@click.option("--data", type=click.Choice(["indicator", "bump", "random"]), default=None)
@click.option("--per-block", type=int, default=None)
@click.option("--nodes", type=int, default=None)
@common_options
def weights(**flags):
    """Characteristics of a weight on delta-cubes and the weighted maximal ratio."""
    s = resolve(flags, {"weight": "power", "weight_file": None, "gamma": 0.5, "p": 2.0, "q": 6.0,
                        "r": 3.0, "kmin": -3, "kmax": 0, "resolution": 32, "data": "indicator",
                        "per_block": 32, "nodes": 128})
    spec, cut = parabola_model()
    dil = spec.dilation
    box = MeasuredBox((-1.0, -1.0), (1.0, 1.0))
    res = (int(s["resolution"]),) * 2
    p, q, r = float(s["p"]), float(s["q"]), float(s["r"])
    if not 1 <= p < r < q:
        raise ConfigError("need 1 <= p < r < q")
    try:
        if s["weight_file"]:
            from .weights import Weight
            w = Weight(GridFunction.load(s["weight_file"]), dil)
            box, res = w.data.box, w.data.resolution
        else:
            w = named_weight(s["weight"], box, res, dil, float(s["gamma"]))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad weight: {exc}") from exc
    cubes = cube_family(w.data, dil, int(s["kmin"]), int(s["kmax"]))
    if not cubes:
        raise ConfigError("scale window contains no cube inside the weight's box")
    rng = np.random.default_rng(int(s["seed"]))
    f = _test_function(s["data"], box, res, rng)
    ks = parabola_window(0)
    mf = maximal_values(spec, cut, f, ks, int(s["per_block"]), int(s["nodes"]))
    ap_exp, rh_exp = r / p, float(conjugate(q / r))
    summary = {
        "command": "weights", "weight": s["weight_file"] or s["weight"], "p": p, "q": q, "r": r,
        "scale_window": [int(s["kmin"]), int(s["kmax"])], "cubes": len(cubes),
        "ap_exponent": ap_exp, "rh_exponent": rh_exp,
        "ap": ap_characteristic(w, ap_exp, cubes), "rh": rh_characteristic(w, rh_exp, cubes),
        "bound": characteristic_bound(w, p, q, r, cubes),
        "weighted_ratio": weighted_norm_ratio(spec, cut, f, w, r, ks, mf=mf),
        "unweighted_ratio": weighted_norm_ratio(spec, cut, f, None, r, ks, mf=mf),
    }
    rows = [{"quantity": k, "value": summary[k]}
            for k in ("ap", "rh", "bound", "weighted_ratio", "unweighted_ratio")]
    _emit(s, "weights", summary, {"weights.csv": csv_text(rows, ["quantity", "value"])})


# continuity


@cli.command()
@click.option("--family", type=FAMILY_CHOICE, default=None)
@click.option("--d", type=int, default=None)
@click.option("--m", type=int, default=None)
@click.option("--c", type=float, default=None)
@click.option("--phi", default=None)
@click.option("--support-radius", type=float, default=None)
@click.option("--q", type=float, default=None)
@click.option("--p", type=float, default=None)
@click.option("--direction", default=None, help="Direction of z, e.g. '0,1'.")
@click.option("--zmin", type=int, default=None, help="Smallest |z| exponent (base 2).")
@click.option("--zmax", type=int, default=None)
@click.option("--times", type=int, default=None, help="Dense t samples in [1,2]; 1 means t = 1 only.")
@click.option("--resolution", type=int, default=None)
@click.option("--eval-resolution", type=int, default=None)
@click.option("--nodes", type=int, default=None)
@common_options
def continuity(**flags):
    """Table of ``|z|`` against the maximal difference norm with the fitted slope."""
    s = resolve(flags, {"family": "finite", "d": 2, "m": 1, "c": 0.0, "phi": "1", "support_radius": 1.0,
                        "q": 2.0, "p": 2.0, "direction": "0,1", "zmin": -8, "zmax": -2, "times": 1,
                        "resolution": 256, "eval_resolution": 96, "nodes": 256})
    spec = _spec(s)
    if spec.param_dim != 1:
        raise ConfigError("continuity experiments are implemented for curves")
    cut = Cutoff.for_spec(spec)
    f, ebox = continuity_data(int(s["resolution"]))
    w = np.array(_floats(s["direction"]))
    if w.shape != (2,) or not np.any(w):
        raise ConfigError("direction must be a nonzero pair")
    w = w / np.linalg.norm(w)
    if int(s["zmax"]) <= int(s["zmin"]):
        raise ConfigError("need zmax > zmin")
    zs = 2.0 ** np.arange(int(s["zmin"]), int(s["zmax"]) + 1)
    times = int(s["times"])
    ts = TimeSampling.dense(1, 1.0, 1.0) if times == 1 else TimeSampling.dense(times)
    er = (int(s["eval_resolution"]),) * 2

    def one(z):
        return continuity_diff_norm(spec, cut, f, z * w, float(s["q"]), ts, ebox, er, float(s["p"]),
                                    int(s["nodes"]))

    vals = _pmap(one, zs, int(s["threads"]))
    zero = one(0.0)
    fit = loglog_slope(zs, vals)
    rows = [{"z": 0.0, "diff_norm": zero}] + [{"z": z, "diff_norm": v} for z, v in zip(zs, vals)]
    summary = {"command": "continuity", "spec": spec.to_json(), "direction": w.tolist(),
               "times": times, "slope": fit.slope, "r2": fit.r2, "zero_value": zero}
    _emit(s, "continuity", summary, {"continuity.csv": csv_text(rows, ["z", "diff_norm"])})


def continuity_data(resolution: int = 256) -> tuple[GridFunction, MeasuredBox]:
    """Indicator of the disc of radius ``1/sqrt2`` on ``[-2, 2]^2`` and the evaluation box."""
    box = MeasuredBox((-2.0, -2.0), (2.0, 2.0))
    f = GridFunction.sample(box, (resolution, resolution),
                            lambda x: (np.sum(x**2, axis=-1) <= 0.5).astype(float))
    return f, MeasuredBox((-3.0, -3.0), (3.0, 3.0))


def main(argv=None) -> int:
    """Entry point mapping failures to exit codes (2: configuration, 3: numerics)."""
    try:
        cli.main(args=argv, prog_name="curvmax", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code if isinstance(exc, (ConfigError, NumericalError)) else EXIT_CONFIG
    except (QuadratureError, SparsenessError, ZeroDivisionError, FloatingPointError,
            ArithmeticError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return EXIT_NUMERIC
    except (SpecError, ValueError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
