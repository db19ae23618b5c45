"""Command-line entry point: ``ldcapture <command> [options]``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags (flags win).

Exit codes: 0 success, 1 usage error, 2 numerical error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import fileio, render
from .dynamics import kepler_energy, to_mars_relative
from .edges import detect_edges, extract_separatrices, suggest_sigma
from .fileio import FileFormatError
from .model import (GridMismatchError, GridSpec, Label, NumericalError, ParameterError,
                    SynodicState, make_params)
from .propagate import IntegratorConfig, propagate_samples
from .reference import SAMPLE_ORBITS
from .survey import (SurveyRequest, capture_set, compute_label_field, generate_ic,
                     run_survey)
from .validate import validate

log = logging.getLogger("ldcapture")

EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 1, 2, 3

DEFAULTS = {
    "n": 100, "eps": 6e-4, "f0": 0.0, "fb": 0.0, "ff": 0.0, "e0": 0.9, "gamma": 0.5,
    "mu": 3.226201e-7, "ep": 0.093418, "ap": 1.523688, "radius_km": 3397.0,
    "soi_factor": 170.0, "au_km": 1.495978707e8,
    "rtol": 1e-9, "atol": 1e-12, "workers": None, "d": 2.0, "df": 2 * math.pi / 1000,
    "sigma": None, "raw": False, "verbose": False,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="key = value settings file")
    p.add_argument("--workers", type=int, default=S, help="parallel workers (env LDCAPTURE_WORKERS)")
    p.add_argument("--mu", type=float, default=S)
    p.add_argument("--ep", type=float, default=S, help="primaries' eccentricity")
    p.add_argument("--ap", type=float, default=S, help="primaries' semi-major axis [AU]")
    p.add_argument("--radius-km", type=float, default=S)
    p.add_argument("--soi-factor", type=float, default=S)
    p.add_argument("--au-km", type=float, default=S)
    p.add_argument("--rtol", type=float, default=S)
    p.add_argument("--atol", type=float, default=S)
    p.add_argument("-v", "--verbose", action="store_true", default=S)


def _grid(p):
    S = argparse.SUPPRESS
    p.add_argument("--n", type=int, default=S, help="points per side")
    p.add_argument("--eps", type=float, default=S, help="grid half-width")
    p.add_argument("--f0", type=float, default=S, help="initial true anomaly")
    p.add_argument("--e0", type=float, default=S, help="initial osculating eccentricity")
    p.add_argument("--gamma", type=float, default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="ldcapture", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("field", help="descriptor field over the grid")
    _common(p), _grid(p)
    p.add_argument("--fb", type=float, default=S, help="backward extent (<= 0)")
    p.add_argument("--ff", type=float, default=S, help="forward extent (>= 0)")
    p.add_argument("--out", required=True)
    p.add_argument("--out-back", default=S)
    p.add_argument("--out-fwd", default=S)
    p.add_argument("--labels-back", default=S, help="also write backward labels")
    p.add_argument("--labels-fwd", default=S, help="also write forward labels")
    p.add_argument("--csv", default=S)
    p.add_argument("--png", default=S)
    p.add_argument("--pgm", default=S)

    p = sub.add_parser("classify", help="stability labels over the grid")
    _common(p), _grid(p)
    p.add_argument("--fb", type=float, default=S, help="backward extent (< 0)")
    p.add_argument("--ff", type=float, default=S, help="forward extent (> 0)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("capture", help="capture mask from backward/forward labels")
    _common(p)
    p.add_argument("--back", required=True)
    p.add_argument("--fwd", required=True)
    p.add_argument("--out", default=S)
    p.add_argument("--ic", default=S, help="report the mask at a sample orbit's pixel")

    p = sub.add_parser("edges", help="separatrices from a field file")
    _common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--sigma", type=float, default=S)
    p.add_argument("--raw", action="store_true", default=S, help="do not normalize first")
    p.add_argument("--out", default=S)

    p = sub.add_parser("validate", help="edge/boundary agreement report")
    _common(p)
    p.add_argument("--edges", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--d", type=float, default=S, help="pixel tolerance")
    p.add_argument("--json", default=S)

    p = sub.add_parser("orbit", help="sampled trajectory of one initial condition")
    _common(p)
    p.add_argument("--ic", required=True, help="sample orbit name (a-l) or 'X,Y' offset")
    p.add_argument("--f0", type=float, default=S)
    p.add_argument("--e0", type=float, default=S)
    p.add_argument("--gamma", type=float, default=S)
    p.add_argument("--fb", type=float, default=S)
    p.add_argument("--ff", type=float, default=S)
    p.add_argument("--df", type=float, default=S, help="output sampling in anomaly")
    p.add_argument("--out", default=S)

    p = sub.add_parser("render", help="raster image from stored files")
    _common(p)
    p.add_argument("--field", default=S)
    p.add_argument("--labels", default=S)
    p.add_argument("--edges", action="append", default=S, help="edge file drawn in black")
    p.add_argument("--edges-back", default=S, help="backward edges, drawn blue")
    p.add_argument("--edges-fwd", default=S, help="forward edges, drawn gray")
    p.add_argument("--capture", default=S)
    p.add_argument("--out", required=True)
    return parser


def _read_config(path) -> dict:
    cp = configparser.ConfigParser()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    cp.read_string("[settings]\n" + text)
    return {k.replace("-", "_"): v for k, v in cp["settings"].items()}


def resolve(args: argparse.Namespace) -> dict:
    given = vars(args)
    opts = dict(DEFAULTS)
    if "config" in given:
        for key, raw in _read_config(given["config"]).items():
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r}")
            try:
                if key in ("n", "workers"):
                    opts[key] = int(raw)
                elif key in ("raw", "verbose"):
                    opts[key] = raw.strip().lower() in ("1", "true", "yes", "on")
                else:
                    opts[key] = float(raw)
            except ValueError as exc:
                raise UsageError(f"config key {key!r}: {exc}") from exc
    opts.update(given)
    return opts


def _params(o):
    return make_params(o["mu"], o["ep"], o["ap"], o["radius_km"], o["soi_factor"], o["au_km"])


def _config(o):
    return IntegratorConfig(rel_tol=o["rtol"], abs_tol=o["atol"])


def _request(o, fb, ff):
    return SurveyRequest(GridSpec(o["eps"], o["n"]), o["f0"], fb, ff, o["e0"], o["gamma"])


def cmd_field(o):
    params = _params(o)
    req = _request(o, o["fb"], o["ff"])
    if req.fB == 0.0 and req.fF == 0.0:
        log.warning("both extents are zero; the field is identically zero")
    res = run_survey(req, _config(o), params, o["workers"])
    fileio.write_field(o["out"], res.total, params)
    if "out_back" in o:
        fileio.write_field(o["out_back"], res.backward, params)
    if "out_fwd" in o:
        fileio.write_field(o["out_fwd"], res.forward, params)
    for key, lf in (("labels_back", res.labels_backward), ("labels_fwd", res.labels_forward)):
        if key in o:
            if lf is None:
                raise UsageError(f"--{key.replace('_', '-')} needs a non-zero extent")
            fileio.write_labels(o[key], lf, params, req.gamma)
    if "csv" in o:
        fileio.write_csv(o["csv"], res.total.values, req.grid)
    for key in ("png", "pgm"):
        if key in o:
            render.save_image(o[key], render.field_gray(res.total.values))
    v = res.total.values
    print(f"field n={req.grid.n} fB={req.fB!r} fF={req.fF!r}: "
          f"min={np.nanmin(v):.6g} max={np.nanmax(v):.6g} -> {o['out']}")


def cmd_classify(o):
    params = _params(o)
    fb, ff = o["fb"], o["ff"]
    if (fb != 0.0) == (ff != 0.0):
        raise UsageError("give exactly one non-zero extent: --fb (< 0) or --ff (> 0)")
    req = _request(o, fb, ff)
    lf = compute_label_field(req, "backward" if fb else "forward", _config(o), params, o["workers"])
    fileio.write_labels(o["out"], lf, params, req.gamma)
    counts = np.bincount(lf.labels.ravel(), minlength=len(Label))
    print(" ".join(f"{lab.name}={counts[lab]}" for lab in Label) + f" -> {o['out']}")


def cmd_capture(o):
    params = _params(o)
    lb = fileio.read_labels(o["back"])
    lf = fileio.read_labels(o["fwd"])
    mask = capture_set(lb, lf)
    if "out" in o:
        fileio.write_mask(o["out"], lb.spec, mask, params, f0=lb.f0,
                          fB=lb.ff - lb.f0, fF=lf.ff - lf.f0)
    print(f"capture points: {int(mask.sum())} of {mask.size}")
    if "ic" in o:
        X, Y = _offset(o["ic"])
        i, j = lb.spec.index_of(X, Y)
        print(f"ic {o['ic']} at pixel ({i}, {j}): {'capture' if mask[i, j] else 'not capture'}")
    return mask


def cmd_edges(o):
    params = _params(o)
    fld = fileio.read_field(o["input"])
    sigma = o["sigma"]
    if sigma is None:
        sigma = suggest_sigma(fld.fF if fld.fF else fld.fB)
    em = detect_edges(fld, sigma) if o["raw"] else extract_separatrices(fld, sigma)
    out = o.get("out", str(Path(o["input"]).with_suffix("")) + ".edges.bcf")
    fileio.write_edges(out, em, params, f0=fld.f0, fB=fld.fB, fF=fld.fF, gamma=fld.gamma)
    print(f"edges sigma={sigma!r}: {int(em.mask.sum())} pixels -> {out}")


def cmd_validate(o):
    em = fileio.read_edges(o["edges"])
    lf = fileio.read_labels(o["labels"])
    report = validate(em, lf, o["d"])
    ov = report["overall"]
    med = ov["median_distance"]
    print(f"precision={ov['precision']:.4f} recall={ov['recall']:.4f} "
          f"median_distance={'n/a' if med is None else med} d={report['d']} "
          f"disk_recall={report['disk_recall']:.4f}")
    if "json" in o:
        fileio.atomic_write(o["json"], (json.dumps(report, indent=2, sort_keys=True) + "\n").encode())
    return report


def _offset(ic: str):
    if ic in SAMPLE_ORBITS:
        return SAMPLE_ORBITS[ic].offset
    try:
        X, Y = (float(s) for s in ic.split(","))
    except ValueError as exc:
        raise UsageError(f"--ic {ic!r}: expected a sample name {sorted(SAMPLE_ORBITS)} or 'X,Y'") from exc
    return X, Y


def cmd_orbit(o):
    params = _params(o)
    cfg = _config(o)
    state0 = generate_ic(_offset(o["ic"]), o["f0"], o["e0"], params)
    rows = []
    summary = {}
    for leg, extent in (("backward", o["fb"]), ("forward", o["ff"])):
        if extent == 0.0:
            continue
        outcome, fs, states = propagate_samples(state0, state0.f + extent, o["df"], cfg,
                                                params, o["gamma"])
        energies = []
        for f, s in zip(fs, states):
            syn = SynodicState.from_array(f, s)
            rel = to_mars_relative(syn, state0.f, params)
            H = kepler_energy(rel, params)
            energies.append(H)
            rows.append((leg, f, *s, rel.X, rel.Y, rel.VX, rel.VY, H,
                         math.hypot(rel.X, rel.Y)))
        rel_end = to_mars_relative(outcome.state_end, state0.f, params)
        summary[leg] = {
            "terminal": outcome.terminal.name, "f_end": outcome.f_end,
            "f_escape": outcome.f_escape, "ld": outcome.ld,
            "r_end": math.hypot(rel_end.X, rel_end.Y), "H_max": max(energies),
        }
        print(f"{leg}: {outcome.terminal.name} at f={outcome.f_end:.6f} "
              f"r_end={summary[leg]['r_end']:.6e} H_max={summary[leg]['H_max']:.6e} "
              f"escape={'none' if outcome.f_escape is None else f'{outcome.f_escape:.6f}'}")
    if "out" in o:
        head = "leg,f,x,y,xp,yp,M,X,Y,VX,VY,H,r"
        lines = [head] + [",".join([r[0]] + [repr(float(v)) for v in r[1:]]) for r in rows]
        fileio.atomic_write(o["out"], ("\n".join(lines) + "\n").encode())
    return summary


def cmd_render(o):
    base_field = labels = None
    spec = None
    if "labels" in o:
        lf = fileio.read_labels(o["labels"])
        labels, spec = lf.labels, lf.spec
    elif "field" in o:
        fld = fileio.read_field(o["field"])
        base_field, spec = fld.values, fld.spec
    else:
        raise UsageError("render needs --labels or --field as the base layer")
    layers = []
    for path in o.get("edges", []):
        layers.append(_same(spec, fileio.read_edges(path)).mask)
    if "edges_fwd" in o:
        layers.append((_same(spec, fileio.read_edges(o["edges_fwd"])).mask, render.FORWARD_EDGE_COLOR))
    if "edges_back" in o:
        layers.append((_same(spec, fileio.read_edges(o["edges_back"])).mask, render.BACKWARD_EDGE_COLOR))
    capture = None
    if "capture" in o:
        cspec, capture = fileio.read_mask(o["capture"])
        if cspec != spec:
            raise GridMismatchError(f"capture grid {cspec} vs {spec}")
    pixels = render.compose(base_field, labels, layers, capture)
    render.save_image(o["out"], pixels)
    print(f"image -> {o['out']}")


def _same(spec, em):
    if em.spec != spec:
        raise GridMismatchError(f"edge grid {em.spec} vs {spec}")
    return em


COMMANDS = {
    "field": cmd_field, "classify": cmd_classify, "capture": cmd_capture, "edges": cmd_edges,
    "validate": cmd_validate, "orbit": cmd_orbit, "render": cmd_render,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        o = resolve(args)
        logging.basicConfig(level=logging.INFO if o["verbose"] else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[o["command"]](o)
    except (UsageError, ParameterError, GridMismatchError, configparser.Error) as exc:
        print(f"ldcapture: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, ArithmeticError) as exc:
        print(f"ldcapture: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, FileFormatError) as exc:
        print(f"ldcapture: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
