"""Command-line front end: tables, arcs, portraits, focal reports, Psi critical points, words.

Every option can also be given in a ``key = value`` file passed with
``--config``; command-line flags override the file.  Exit codes: 0 success,
1 numerical failure (with a report), 2 usage error.
"""

import argparse
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import export
from .errors import KeplerBilliardError, TableError
from .tables import Scene, StringSpec, WidthFourierSpec, make_ellipse, make_string_table, make_width_table

COMMANDS = ("table", "arc", "portrait", "focal", "psi", "shadow")

# key -> (type tag, default, help)
OPTIONS = {
    "table": ("str", "ellipse:a=2,b=1",
              "table spec: ellipse:a=A,b=B | width:a0=..,a3=.. | string:a0=..,a3=..,c=X,Y,l=L"),
    "ellipse": ("pair", None, "shortcut for an ellipse table: A,B"),
    "center": ("point", None, "attraction center X,Y (default: table-specific)"),
    "mu": ("float", 1.0, "attraction strength"),
    "h": ("float", 1000.0, "energy"),
    "seeds": ("int", 200, "number of portrait seeds"),
    "bounces": ("int", 500, "bounces per seed"),
    "rng_seed": ("int", 0, "random seed for portrait seeds"),
    "samples": ("int", 512, "rows of the table CSV"),
    "word": ("str", None, "symbolic word, e.g. TT' or mMM"),
    "p0": ("point", None, "arc start point X,Y relative to the center"),
    "p1": ("point", None, "arc end point X,Y relative to the center"),
    "class": ("str", "direct", "arc class: direct | indirect | ccw | cw"),
    "delta": ("float", 0.1, "admissibility parameter for word intervals"),
    "grid": ("int", 128, "grid size for the Psi critical point search"),
    "csv": ("str", None, "CSV output path"),
    "svg": ("str", None, "SVG output path"),
    "tol_focal": ("float", 1e-6, "relative variation of phi counted as focal"),
    "tol_energy": ("float", 1e-8, "energy residual accepted in portraits"),
    "tol_reflection": ("float", 1e-8, "reflection residual accepted for words"),
    "tol_replay": ("float", 1e-6, "map replay error accepted for words"),
}

REQUIRED = {"arc": ("p0", "p1"), "shadow": ("word",)}


class UsageError(Exception):
    def __init__(self, key, message):
        super().__init__(message)
        self.key = key


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)
    sources: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]


def _parse_value(key, text):
    tag = OPTIONS[key][0]
    text = text.strip()
    try:
        if tag == "float":
            return float(text)
        if tag == "int":
            return int(text)
        if tag in ("pair", "point"):
            parts = [float(x) for x in text.split(",")]
            if len(parts) != 2:
                raise ValueError("expected two comma-separated numbers")
            return complex(parts[0], parts[1]) if tag == "point" else tuple(parts)
        return text
    except ValueError as exc:
        raise UsageError(key, f"cannot parse {text!r}: {exc}") from None


def read_config_file(path):
    """Parse ``key = value`` lines; '#' starts a comment.  Keys may use - or _."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError("config", str(exc)) from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError("config", f"{path}:{n}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in OPTIONS:
            raise UsageError(key, f"{path}:{n}: unknown key {key!r}")
        if key in out:
            raise UsageError(key, f"{path}:{n}: key given twice")
        out[key] = value.strip()
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="keplerbilliards", description="Kepler billiards in convex tables.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="file of 'key = value' lines; flags override it")
    for key, (_, default, text) in OPTIONS.items():
        flag = "--" + key.replace("_", "-")
        p.add_argument(flag, dest=key, default=None, help=text if default is None else f"{text} (default: {default})")
    return p


def parse_config(argv, parser=None) -> RunConfig:
    parser = parser or build_parser()
    ns = parser.parse_args(argv)
    raw = read_config_file(ns.config) if ns.config else {}
    sources = {k: "config" for k in raw}
    for key in OPTIONS:
        v = getattr(ns, key)
        if v is not None:
            raw[key] = v
            sources[key] = "flag"
    if "ellipse" in raw and "table" in raw and sources.get("table") == sources.get("ellipse"):
        raise UsageError("ellipse", "give either --table or --ellipse, not both")
    values = {k: d for k, (_, d, _) in OPTIONS.items()}
    for key, text in raw.items():
        values[key] = _parse_value(key, text)
    if "ellipse" in raw and not (sources.get("table") == "flag" and sources.get("ellipse") == "config"):
        a, b = values["ellipse"]
        values["table"] = f"ellipse:a={a!r},b={b!r}"
    for key in REQUIRED.get(ns.command, ()):
        if values[key] is None:
            raise UsageError(key, f"'{ns.command}' requires --{key.replace('_', '-')}")
    for key in ("seeds", "bounces", "samples", "grid"):
        if values[key] < 1:
            raise UsageError(key, "must be positive")
    if values["class"].lower() not in ("direct", "indirect", "ccw", "cw"):
        raise UsageError("class", f"unknown arc class {values['class']!r}")
    for key in ("mu", "h"):
        if not values[key] > 0:
            raise UsageError(key, "must be positive")
    return RunConfig(ns.command, values, sources)


def parse_table_spec(text):
    """Build (table, default center) from e.g. ``string:a0=1,a3=0.333,c=3,0,l=6``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    params = {}
    last = None
    for tok in filter(None, (t.strip() for t in rest.split(","))):
        if "=" in tok:
            k, v = tok.split("=", 1)
            last = k.strip()
            params[last] = [v.strip()]
        elif last is not None:
            params[last].append(tok)
        else:
            raise UsageError("table", f"malformed table spec {text!r}")

    def num(k, default=None):
        if k not in params:
            if default is None:
                raise UsageError("table", f"{kind} table needs parameter {k!r}")
            return default
        if len(params[k]) != 1:
            raise UsageError("table", f"parameter {k!r} takes one number")
        return float(params[k][0])

    def coeffs():
        out = {}
        for k, v in params.items():
            if k.startswith("a") and k[1:].isdigit():
                if len(v) != 1:
                    raise UsageError("table", f"parameter {k!r} takes one number")
                out[int(k[1:])] = complex(v[0].replace("i", "j"))
        return out

    try:
        if kind == "ellipse":
            _check_keys(params, {"a", "b"})
            return make_ellipse(num("a"), num("b")), 0j
        if kind == "width":
            _check_keys(params, {k for k in params if k.startswith("a") and k[1:].isdigit()})
            table, _ = make_width_table(WidthFourierSpec(coeffs()))
            return table, 0j
        if kind == "string":
            _check_keys(params, {"c", "l"} | {k for k in params if k.startswith("a") and k[1:].isdigit()})
            if "c" not in params or len(params["c"]) != 2:
                raise UsageError("table", "string table needs c=X,Y")
            c = complex(float(params["c"][0]), float(params["c"][1]))
            table = make_string_table(StringSpec(WidthFourierSpec(coeffs()), c, num("l")))
            return table, c
    except TableError as exc:
        raise UsageError("table", str(exc)) from None
    raise UsageError("table", f"unknown table kind {kind!r}")


def _check_keys(params, allowed):
    for k in params:
        if k not in allowed:
            raise UsageError("table", f"unknown table parameter {k!r}")


def _scene(cfg, table, c_default):
    c = cfg["center"] if cfg["center"] is not None else c_default
    try:
        return Scene(table, c, cfg["mu"], cfg["h"])
    except (TableError, ValueError) as exc:
        raise UsageError("center", str(exc)) from None


def cmd_table(cfg, out):
    table, c = parse_table_spec(cfg["table"])
    print(f"table: {table.name}", file=out)
    print(f"length: {table.length:.12g}", file=out)
    print(f"diameter: {table.diameter:.12g}", file=out)
    print(f"curvature: [{table.min_curvature:.6g}, {table.max_curvature:.6g}]", file=out)
    if hasattr(table, "validity_margin"):
        print(f"validity margin: {table.validity_margin:.6g}", file=out)
    if cfg["csv"]:
        export.write_table_csv(cfg["csv"], table, cfg["samples"])
        print(f"wrote {cfg['samples']} rows to {cfg['csv']}", file=out)
    return 0


def cmd_arc(cfg, out):
    from .kepler_arc import jacobi_length, solve_arc

    arc = solve_arc(cfg["p0"], cfg["p1"], cfg["class"], cfg["h"], cfg["mu"])
    tau = np.linspace(0.0, arc.T, 401)
    z = arc.z(tau)
    v = arc.velocity(tau)
    energy = np.abs(0.5 * np.abs(v) ** 2 - arc.mu / np.abs(z) - arc.h).max() / arc.h
    endpoint = max(abs(z[0] - arc.p0), abs(z[-1] - arc.p1))
    rec = {
        "class": arc.cls.value, "T": arc.T, "time": arc.time(), "L": arc.L, "L_quad": jacobi_length(arc),
        "r_min": arc.r_min, "v0x": arc.v0.real, "v0y": arc.v0.imag, "v1x": arc.v1.real, "v1y": arc.v1.imag,
        "endpoint_residual": endpoint, "energy_residual": energy,
    }
    # scaled remainder of the high-energy expansion of the length
    sh = np.sqrt(arc.h)
    if arc.cls.value == "direct":
        rec["asymptotic_residual"] = sh * (arc.L - sh * abs(arc.p1 - arc.p0))
    elif arc.cls.value == "indirect":
        rec["asymptotic_residual"] = ((arc.L - sh * (abs(arc.p0) + abs(arc.p1)))
                                      / (arc.mu / sh * np.log(2 * arc.h / arc.mu)))
    for k, val in rec.items():
        print(f"{k}: {val if isinstance(val, str) else format(val, '.12g')}", file=out)
    if cfg["csv"]:
        export.write_rows(cfg["csv"], list(rec), [list(rec.values())])
    return 0


def cmd_portrait(cfg, out):
    from .kepler_billiard import KeplerBilliard, default_seeds, well_defined_check

    table, c = parse_table_spec(cfg["table"])
    scene = _scene(cfg, table, c)
    ok, r_guard, margin = well_defined_check(scene)
    if not ok:
        print(f"note: curvature test for a well-defined map not met (margin {margin:.4g})", file=out)
    kb = KeplerBilliard(scene)
    t0 = time.perf_counter()
    res = kb.portrait(default_seeds(kb, cfg["seeds"], cfg["rng_seed"]), cfg["bounces"])
    valid = res["valid"]
    E = res["energy_residual"][valid]
    R = res["min_r"][valid]
    stopped = int((~valid[-1]).sum())
    print(f"bounces: {int(valid[1:].sum())} in {time.perf_counter() - t0:.1f} s", file=out)
    print(f"max energy residual: {E.max():.3e}", file=out)
    print(f"min distance to center: {R.min():.3e}", file=out)
    print(f"seeds stopped early: {stopped}", file=out)
    if cfg["csv"]:
        export.write_portrait_csv(cfg["csv"], res["u"], res["alpha"], res["energy_residual"], res["min_r"], valid)
    if cfg["svg"]:
        export.portrait_svg(cfg["svg"], res["u"], res["alpha"], valid, title=table.name)
    passed = E.max() < cfg["tol_energy"] and R.min() > 0 and stopped == 0
    print("residuals: " + ("PASS" if passed else "FAIL"), file=out)
    return 0 if passed else 1


def cmd_focal(cfg, out):
    from .focal import chord_report, classify_kind, critical_points_psi, focal_test

    table, c = parse_table_spec(cfg["table"])
    c = cfg["center"] if cfg["center"] is not None else c
    v = focal_test(table, c, tol=cfg["tol_focal"])
    word = {"focal": "yes", "not focal": "no"}.get(v.status, v.status)
    print(f"focal: {word}, variation {v.variation:.3e}, value ~ {v.mean:.10g}", file=out)
    rep = classify_kind(table, c)
    print(f"kind: {rep.kind} (same-type reading: {rep.kind_same_type})", file=out)
    for p in rep.extrema:
        print(f"  distance {p.kind} at u = {p.u:.10g}", file=out)
    cs = critical_points_psi(table, c)
    if cs.focal_continuum:
        print(f"Psi critical set: continuum of maxima at level {cs.level:.10g}", file=out)
    else:
        for p in cs.points:
            print(f"  Psi critical ({p.xi:.8g}, {p.eta:.8g}) level {p.level:.10g} index {p.index:+d} {p.kind}",
                  file=out)
    rows = []
    for ch, det, P in chord_report(table, c):
        line = f"chord u = ({ch.u1:.8g}, {ch.u2:.8g}) d = {ch.d:.10g} hessian det = {det:.3e}"
        if P is not None:
            line += f" focal roots = {', '.join(f'{r:.10g}' for r in P.roots)}"
        print(line, file=out)
        rows.append((ch.u1, ch.u2, ch.d, ch.k1, ch.k2, det))
    if cfg["csv"]:
        export.write_rows(cfg["csv"], ("u1", "u2", "d", "k1", "k2", "hess_det"), rows)
    return 0


def cmd_psi(cfg, out):
    from .focal import critical_points_psi

    table, c = parse_table_spec(cfg["table"])
    c = cfg["center"] if cfg["center"] is not None else c
    cs = critical_points_psi(table, c, n_grid=cfg["grid"])
    if cs.focal_continuum:
        print(f"focal center: Psi has a continuum of maxima at level {cs.level:.10g}", file=out)
    rows = []
    for p in cs.points:
        print(f"xi = {p.xi:.10g} eta = {p.eta:.10g} level = {p.level:.10g} index = {p.index:+d} "
              f"kind = {p.kind}{' zero-area' if p.zero_area else ''}", file=out)
        rows.append((p.xi, p.eta, p.level, p.index, p.kind, int(p.zero_area), p.grad_norm))
    print(f"index sum: {cs.index_sum}", file=out)
    if cs.unresolved:
        print(f"unresolved cells: {len(cs.unresolved)}", file=out)
    if cfg["csv"]:
        export.write_rows(cfg["csv"], ("xi", "eta", "level", "index", "kind", "zero_area", "grad_norm"), rows)
    return 0 if not cs.unresolved else 1


def cmd_shadow(cfg, out):
    from .shadowing import SymbolWord, select_intervals, solve_word, verify_orbit

    try:
        word = SymbolWord.parse(cfg["word"])
    except ValueError as exc:
        raise UsageError("word", str(exc)) from None
    table, c = parse_table_spec(cfg["table"])
    scene = _scene(cfg, table, c)
    dom = select_intervals(table, scene.c, delta=cfg["delta"])
    print(f"intervals: {dom.kind} ({dom.note})", file=out)
    for k, (lo, hi) in dom.intervals.items():
        print(f"  {k}: [{lo:.10g}, {hi:.10g}]", file=out)
    orbit = solve_word(word, scene, dom)
    rep = verify_orbit(orbit, scene, dom, tol_reflection=cfg["tol_reflection"], tol_replay=cfg["tol_replay"])
    print(f"word: {word} period {orbit.period} (minimal {orbit.minimal_period})", file=out)
    print(f"reflection residual: {rep.max_reflection_residual:.3e}", file=out)
    print(f"replay error: {rep.replay_error:.3e} closure {rep.closure_error:.3e}", file=out)
    print(f"double-precision forward replay error: {rep.details['forward_replay_error_double']:.3e}", file=out)
    print(f"length check (closed form vs quadrature): {rep.length_discrepancy:.3e}", file=out)
    pos = table.position(orbit.u)
    rows = [(k, orbit.labels[k], orbit.classes[k].value, orbit.u[k], pos[k].real, pos[k].imag,
             orbit.residuals[k]) for k in range(orbit.period)]
    if cfg["csv"]:
        export.write_rows(cfg["csv"], ("bounce", "interval", "next_arc", "u", "x", "y", "residual"), rows)
    print("verification: " + ("PASS" if rep.passed else "FAIL"), file=out)
    return 0 if rep.passed else 1


HANDLERS = {"table": cmd_table, "arc": cmd_arc, "portrait": cmd_portrait, "focal": cmd_focal,
            "psi": cmd_psi, "shadow": cmd_shadow}


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        return HANDLERS[cfg.command](cfg, out)
    except UsageError as exc:
        print(f"error [{exc.key}]: {exc}", file=err)
        return 2
    except KeplerBilliardError as exc:
        print(f"failure [{cfg.command}]: {type(exc).__name__}: {exc}", file=err)
        return 1
    except OSError as exc:
        print(f"error [csv/svg]: {exc}", file=err)
        return 2


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = parse_config(argv, parser)
    except UsageError as exc:
        print(f"error [{exc.key}]: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
