"""Command-line experiment runner.

Each subcommand takes its parameters from flags, an optional JSON config file
(``--config``), or both; flags win over the file, and ``HOROFLOW_SEED`` wins
over the file's seed.  Exit codes: 0 pass, 1 assertion failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, psl2
from .errors import HoroflowError
from .ergodic import (
    EQUIDIST_DEFAULTS,
    Observable,
    SuspensionSpace,
    birkhoff_batch,
    config_hash,
    equidist_experiment,
    equidist_verdict,
    experiment_starts,
    haar_window_test,
    make_space,
    report_summary,
    report_to_csv,
    sample_orbit,
    BirkhoffReport,
    _describe,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
OUTPUT_KEYS = ("out", "json", "figure")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer"}
_posint = {"type": "integer", "minimum": 1}
_space = {"enum": ["suspension", "sol"]}
_flow = {"enum": ["geodesic", "hplus", "hminus", "vperp"]}
_obs = {
    "oneOf": [
        {"enum": ["torus_fourier", "leafwise_height", "sol_z_cosine", "constant"]},
        {
            "type": "object",
            "properties": {
                "kind": {"enum": ["torus_fourier", "leafwise_height", "sol_z_cosine", "constant"]},
                "m": {"type": "array", "items": _int},
                "c": _num,
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
    ]
}
_times = {"type": "array", "items": _pos, "minItems": 1}
_zfrac = {"type": ["array", "null"], "items": _num, "minItems": 1}

# subcommand -> {key: (schema, default, help)}
PARAMS: dict[str, dict] = {
    "check-identities": {
        "trials": (_posint, 1000, "random (t, s) pairs"),
        "states": (_posint, 100, "random states (Id is always included)"),
        "span": (_pos, 5.0, "t, s drawn from [-span, span]"),
        "tol": (_pos, 1e-11, "max allowed Frobenius residual"),
        "seed": (_int, 0, "random seed"),
    },
    "orbit": {
        "space": (_space, "suspension", "suspension or sol"),
        "flow": (_flow, "hplus", "flow name"),
        "time": (_pos, 50.0, "orbit length"),
        "dt": (_pos, 0.05, "sample spacing"),
        "start_index": ({"type": "integer", "minimum": 0}, 0, "which seeded start to use"),
        "seed": (_int, 0, "random seed"),
    },
    "birkhoff": {
        "space": (_space, "suspension", "suspension or sol"),
        "flow": (_flow, "hplus", "flow name"),
        "observable": (_obs, {"kind": "torus_fourier", "m": [1]}, "kind name or JSON object"),
        "T": (_pos, 2e3, "total time"),
        "dt": (_pos, 0.01, "step"),
        "checkpoints": (_times, [2e1, 2e2, 2e3], "times at which averages are reported"),
        "start_index": ({"type": "integer", "minimum": 0}, 0, "which seeded start to use"),
        "seed": (_int, 0, "random seed"),
    },
    "equidist": {
        "space": (_space, EQUIDIST_DEFAULTS["space"], "suspension or sol"),
        "flow": (_flow, EQUIDIST_DEFAULTS["flow"], "flow name"),
        "observable": (_obs, EQUIDIST_DEFAULTS["observable"], "kind name or JSON object"),
        "starts": (_posint, EQUIDIST_DEFAULTS["starts"], "number of seeded starts"),
        "start_z": (_zfrac, None, "sol only: fixed starts at these fractions of the z-period"),
        "T": (_pos, EQUIDIST_DEFAULTS["T"], "total time"),
        "dt": (_pos, EQUIDIST_DEFAULTS["dt"], "step"),
        "checkpoints": (_times, EQUIDIST_DEFAULTS["checkpoints"], "times at which averages are reported"),
        "seed": (_int, EQUIDIST_DEFAULTS["seed"], "random seed"),
    },
    "haar-window": {
        "eps": (_pos, 0.05, "Borel ball size"),
        "delta": (_pos, 0.1, "window length"),
        "c": (_num, 0.1, "window shift"),
        "n": ({"type": "integer", "minimum": 10_000}, 100_000, "Monte-Carlo samples"),
        "box": ({"enum": ["adaptive", "fixed"]}, "adaptive", "sampling box"),
        "seed": (_int, 0, "random seed"),
    },
    "sol-witness": {
        "T": (_pos, 2e2, "total time"),
        "dt": (_pos, 0.01, "step"),
        "seed": (_int, 0, "random seed (unused: starts are fixed)"),
    },
    "render": {
        "space": (_space, "suspension", "suspension or sol"),
        "flow": (_flow, "hplus", "flow name"),
        "time": (_pos, 50.0, "orbit length"),
        "dt": (_pos, 0.05, "sample spacing"),
        "start_index": ({"type": "integer", "minimum": 0}, 0, "which seeded start to use"),
        "size": (_posint, 512, "image size in pixels"),
        "seed": (_int, 0, "random seed"),
    },
}

FIGURE_COMMANDS = ("orbit", "birkhoff", "equidist")


class UsageError(Exception):
    pass


def _schema(cmd: str) -> dict:
    return {
        "type": "object",
        "properties": {k: s for k, (s, _, _) in PARAMS[cmd].items()},
        "additionalProperties": False,
    }


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def _json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _float_list(text: str):
    v = _json_arg(text)
    if isinstance(v, str):
        v = [float(x) for x in v.split(",") if x.strip()]
    return v if isinstance(v, list) else [v]


def _arg_type(schema: dict):
    if schema.get("type") == "integer":
        return int
    if schema.get("type") == "number":
        return float
    if schema is _times or schema is _zfrac:
        return _float_list
    if schema is _obs:
        return _json_arg
    return str


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="horoflow", description="Horocycle-flow experiments on foliated spaces.")
    p.add_argument("--version", action="version", version=f"horoflow {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    for cmd, params in PARAMS.items():
        sp = sub.add_parser(cmd, help=f"run {cmd}")
        sp.add_argument("--config", help="JSON config file with the parameters below")
        for key, (schema, default, text) in params.items():
            sp.add_argument(_flag(key), dest=key, type=_arg_type(schema), default=None,
                            help=f"{text} (default: {json.dumps(default)})")
        sp.add_argument("--out", help="main output file (default: stdout)")
        sp.add_argument("--json", help="JSON summary/provenance file")
        if cmd in FIGURE_COMMANDS:
            sp.add_argument("--figure", help="matplotlib figure file (e.g. .svg, .png)")
    return p


def resolve_config(cmd: str, args: argparse.Namespace, environ=None) -> dict:
    """Defaults < config file < HOROFLOW_SEED < explicit flags, validated by schema."""
    environ = os.environ if environ is None else environ
    cfg = {k: d for k, (_, d, _) in PARAMS[cmd].items()}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"--config: cannot read {args.config}: {e}") from None
        if not isinstance(data, dict):
            raise UsageError("--config: top level must be a JSON object")
        try:
            jsonschema.validate(data, _schema(cmd))
        except jsonschema.ValidationError as e:
            raise UsageError(f"--config: {_describe_error(e)}") from None
        cfg.update(data)
    if "HOROFLOW_SEED" in environ:
        try:
            cfg["seed"] = int(environ["HOROFLOW_SEED"])
        except ValueError:
            raise UsageError(f"HOROFLOW_SEED must be an integer, got {environ['HOROFLOW_SEED']!r}") from None
    for key in PARAMS[cmd]:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    try:
        jsonschema.validate(cfg, _schema(cmd))
    except jsonschema.ValidationError as e:
        raise UsageError(_describe_error(e)) from None
    return cfg


def _describe_error(e: jsonschema.ValidationError) -> str:
    if e.validator == "additionalProperties":
        return f"unknown key(s): {e.message}"
    key = next((p for p in e.absolute_path if isinstance(p, str)), None)
    return f"{_flag(key)}: {e.message}" if key else e.message


def provenance(cmd: str, cfg: dict) -> dict:
    return {
        "tool": "horoflow",
        "version": __version__,
        "command": cmd,
        "config": cfg,
        "seed": cfg.get("seed"),
        "config_sha256": config_hash({"command": cmd, **cfg}),
    }


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _header(prov: dict) -> str:
    return "provenance " + json.dumps(prov, sort_keys=True, separators=(",", ":"))


def _write(path, text: str, stdout):
    if path:
        Path(path).write_text(text)
    else:
        stdout.write(text)


def _observable(spec) -> Observable:
    return Observable.from_spec(spec)


# ---------------------------------------------------------------------------
# subcommands: each returns (exit_code, main_text, summary_dict)


def cmd_check_identities(cfg, prov):
    r = psl2.identity_suite(trials=cfg["trials"], states=cfg["states"], seed=cfg["seed"], span=cfg["span"])
    worst = max(r["max_residual_hplus"], r["max_residual_hminus"])
    ok = worst <= cfg["tol"]
    out = {"provenance": prov, **r, "tol": cfg["tol"], "passed": bool(ok)}
    return (EXIT_PASS if ok else EXIT_FAIL), _dump(out), out


def _single_start(space, cfg):
    n = cfg["start_index"] + 1
    st = experiment_starts(space, {"starts": n, "seed": cfg["seed"], "start_z": None})
    if isinstance(space, SuspensionSpace):
        return st[0][n - 1:n], st[1][n - 1:n]
    return st[n - 1:n]


def _orbit_rows(space, flow, T, dt, st):
    orb = sample_orbit(space, st, flow, T, dt)
    t = dt * np.arange(len(orb[0]) if isinstance(orb, tuple) else len(orb))
    return t, orb


def cmd_orbit(cfg, prov, figure=None):
    space = make_space(cfg["space"])
    st = _single_start(space, cfg)
    t, orb = _orbit_rows(space, cfg["flow"], cfg["time"], cfg["dt"], st)
    buf = io.StringIO()
    buf.write(f"# {_header(prov)}\n")
    if isinstance(space, SuspensionSpace):
        U, theta = orb
        x, y, th = psl2.iwasawa_arr(U)
        k = theta.shape[1]
        buf.write(",".join(["t", "a", "b", "c", "d", "base_re", "base_im", "theta_k"]
                           + [f"torus_{j}" for j in range(k)]) + "\n")
        for i in range(len(t)):
            row = [t[i], *U[i].ravel(), x[i], y[i], th[i], *theta[i]]
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        points = [complex(a, b) for a, b in zip(x, y)]
    else:
        buf.write("t,x,y,z\n")
        for i in range(len(t)):
            buf.write(",".join(f"{v:.17g}" for v in (t[i], *orb[i])) + "\n")
        points = [complex(a, math.exp(z)) for a, _, z in orb]
    if figure:
        from .fuchsian import boundary_polygon
        from .plotting import plot_orbit

        bd = boundary_polygon(space.group) if isinstance(space, SuspensionSpace) else None
        plot_orbit(points, figure, boundary=bd, title=f"{cfg['space']}: {cfg['flow']} orbit")
    summary = {"provenance": prov, "samples": len(t)}
    return EXIT_PASS, buf.getvalue(), summary


def cmd_birkhoff(cfg, prov, figure=None):
    space = make_space(cfg["space"])
    obs = _observable(cfg["observable"])
    st = _single_start(space, cfg)
    avg = birkhoff_batch(space, st, cfg["flow"], [obs], cfg["T"], cfg["dt"], cfg["checkpoints"])[0]
    rep = BirkhoffReport(space.name, cfg["flow"], obs.name, [_describe(space, st, 0)],
                         [float(c) for c in cfg["checkpoints"]], avg, np.zeros(avg.shape[1]), obs.reference(space))
    if figure:
        from .plotting import plot_birkhoff

        plot_birkhoff(rep, figure)
    summary = {"provenance": prov, "averages": [float(v) for v in avg[0]], "times": rep.times,
               "reference": rep.reference, "start": rep.starts[0]}
    return EXIT_PASS, report_to_csv(rep, _header(prov)), summary


def cmd_equidist(cfg, prov, figure=None):
    rep = equidist_experiment(cfg)
    if figure:
        from .plotting import plot_birkhoff

        plot_birkhoff(rep, figure)
    summary = {"provenance": prov, **report_summary(rep)}
    ok = summary["verdict"]["passed"]
    return (EXIT_PASS if ok else EXIT_FAIL), report_to_csv(rep, _header(prov)), summary


def cmd_haar_window(cfg, prov):
    r = haar_window_test(cfg["eps"], cfg["delta"], cfg["c"], cfg["n"], cfg["seed"], cfg["box"])
    out = {"provenance": prov, **r.to_dict()}
    return (EXIT_PASS if r.passed else EXIT_FAIL), _dump(out), out


def cmd_sol_witness(cfg, prov):
    run = {"space": "sol", "flow": "hplus", "observable": {"kind": "sol_z_cosine"}, "starts": 2,
           "start_z": [0.0, 0.25], "T": cfg["T"], "dt": cfg["dt"], "checkpoints": [cfg["T"]], "seed": cfg["seed"]}
    rep = equidist_experiment(run)
    got = rep.averages[:, -1]
    ok = abs(got[0] - 1.0) <= 1e-12 and abs(got[1]) <= 1e-12
    summary = {"provenance": prov, "averages": [float(v) for v in got], "expected": [1.0, 0.0],
               "tol": 1e-12, "passed": bool(ok), "verdict": equidist_verdict(rep)}
    return (EXIT_PASS if ok else EXIT_FAIL), report_to_csv(rep, _header(prov)), summary


def cmd_render(cfg, prov):
    from .render import render_disk

    space = make_space(cfg["space"])
    st = _single_start(space, cfg)
    _, orb = _orbit_rows(space, cfg["flow"], cfg["time"], cfg["dt"], st)
    if isinstance(space, SuspensionSpace):
        x, y, _ = psl2.iwasawa_arr(orb[0])
        points = [complex(a, b) for a, b in zip(x, y)]
    else:
        points = [complex(a, math.exp(z)) for a, _, z in orb]
    svg = render_disk(points, {"size": cfg["size"]}, metadata=_header(prov))
    return EXIT_PASS, svg, {"provenance": prov, "points": len(points)}


COMMANDS = {
    "check-identities": cmd_check_identities,
    "orbit": cmd_orbit,
    "birkhoff": cmd_birkhoff,
    "equidist": cmd_equidist,
    "haar-window": cmd_haar_window,
    "sol-witness": cmd_sol_witness,
    "render": cmd_render,
}


def run(argv=None, stdout=None, stderr=None, environ=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(f"a subcommand is required: {' | '.join(PARAMS)}")
        cfg = resolve_config(args.command, args, environ)
    except UsageError as e:
        stderr.write(f"horoflow: error: {e}\n")
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)

    cmd = args.command
    prov = provenance(cmd, cfg)
    fn = COMMANDS[cmd]
    try:
        if cmd in FIGURE_COMMANDS:
            code, text, summary = fn(cfg, prov, figure=args.figure)
        else:
            code, text, summary = fn(cfg, prov)
    except HoroflowError as e:
        stderr.write(f"horoflow: error: {type(e).__name__}: {e}\n")
        return EXIT_USAGE

    _write(args.out, text, stdout)
    if args.json:
        Path(args.json).write_text(_dump(summary))
    elif args.out and not text.lstrip().startswith("{"):
        # CSV/SVG went to a file: the summary still goes somewhere visible
        stdout.write(_dump(summary))
    return code


def main():
    sys.exit(run())
