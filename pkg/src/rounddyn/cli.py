"""Command-line interface.

Subcommands: orbit-error, variational, ensemble, scan, section.  A plain
``key=value`` config file can seed any flag (``--config``); explicit flags
override it.  Exit codes: 0 success, 2 usage error, 3 numeric/domain error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .ensemble import (EnsembleSpec, Noise, Roundoff, fit_power_law,
                       run_ensemble)
from .fileio import fmt, read_config, write_series_csv, write_variance_csv
from .indicators import (global_error_translation, megno, mlce,
                         orbit_divergence, reversibility_error, sali)
from .maps import NotInvertibleError, TorusTranslation, make_map
from .precision import RangeOverflowError, spec_from_name
from .scan import (AxisSpec, GridSpec, extract_section, grid_scan, read_scan,
                   spec_name, write_outputs)

_NUMERIC_ERRORS = (ValueError, ZeroDivisionError, ArithmeticError,
                   NotInvertibleError, RangeOverflowError)


def _parse_params(items) -> dict:
    out = {}
    for item in items or ():
        for part in item.split(","):
            if not part:
                continue
            if "=" not in part:
                raise ValueError(f"malformed --param {part!r}, expected k=v")
            k, v = part.split("=", 1)
            out[k.strip()] = float(v)
    return out


def _parse_x0(text) -> list:
    return [float(t) for t in text.split(",")]


def _parse_window(text):
    lo, hi = text.split(":")
    return float(lo), float(hi)


def _parse_region(text):
    pairs = []
    for part in text.split(","):
        lo, hi = part.split(":")
        pairs.append((float(lo), float(hi)))
    return tuple(pairs)


def _parse_grid(text):
    axes = []
    for part in text.split(","):
        axes.append(AxisSpec.decode(part))
    if len(axes) != 2:
        raise ValueError("--grid expects exactly two axes")
    return tuple(axes)


def _make_map(args):
    params = _parse_params(args.param)
    if args.map == "bernoulli" and "q" in params:
        params["q"] = int(params["q"])
    return make_map(args.map, **params)


def _series_meta(args, m, kind, **extra):
    meta = {"format": "rounddyn-series", "version": __version__,
            "kind": kind, "map": args.map, "params": m.params()}
    meta.update(extra)
    return meta


def _sample_ns(n, count):
    if count is None or count >= n:
        return None
    return np.unique(np.rint(np.geomspace(1, n, count)).astype(int))


def _cmd_orbit_error(args):
    m = _make_map(args)
    ns = _sample_ns(args.n, args.samples)
    if args.indicator == "rev":
        series = reversibility_error(m, _parse_x0(args.x0), args.n,
                                     spec=args.spec, norm=args.norm, ns=ns)
        extra = {}
    elif args.indicator == "div":
        series = orbit_divergence(m, _parse_x0(args.x0), args.n,
                                  spec_low=args.spec, spec_high=args.ref_spec,
                                  norm=args.norm, ns=ns)
        extra = {}
    else:  # global
        if not isinstance(m, TorusTranslation):
            raise ValueError("--indicator global requires --map translation")
        series = global_error_translation(m.omega, _parse_x0(args.x0)[0],
                                          args.n, spec=args.spec, ns=ns)
        extra = {"fluctuation": series.extras["fluctuation"]}
    meta = _series_meta(args, m, series.kind, spec=args.spec,
                        ref_spec=args.ref_spec, norm=args.norm, n=args.n)
    write_series_csv(args.out, series.ns, series.values, meta,
                     extra_columns=extra)
    return 0


def _cmd_variational(args):
    m = _make_map(args)
    x0 = _parse_x0(args.x0)
    if args.indicator == "mlce":
        series = mlce(m, x0, n_steps=args.n)
        extra = {}
    elif args.indicator == "megno":
        raw, series = megno(m, x0, n_steps=args.n)
        extra = {"megno_raw": raw.values}
    else:
        series = sali(m, x0, n_steps=args.n)
        extra = {}
    meta = _series_meta(args, m, series.kind, n=args.n)
    write_series_csv(args.out, series.ns, series.values, meta,
                     extra_columns=extra)
    return 0


def _cmd_ensemble(args):
    m = _make_map(args)
    ens = EnsembleSpec(_parse_region(args.region), args.count, args.seed)
    if args.mode == "roundoff":
        mode = Roundoff(args.spec)
    else:
        if args.amplitude is None:
            raise ValueError("--mode noise requires --amplitude")
        mode = Noise(args.amplitude)
    ns = _sample_ns(args.n, args.samples)
    series = run_ensemble(m, ens, mode, args.n, ns=ns)
    window = _parse_window(args.fit_window) if args.fit_window else \
        (max(1, args.n // 10), args.n)
    fits = []
    for name in series.coord_names:
        try:
            fits.append((name, fit_power_law(series, name, window)))
        except ValueError:
            pass  # zero variances inside the window: nothing to fit
    meta = {"format": "rounddyn-ensemble", "version": __version__,
            "map": args.map, "params": m.params(), "mode": args.mode,
            "spec": args.spec, "amplitude": args.amplitude or 0.0,
            "count": args.count, "seed": args.seed, "n": args.n,
            "region": args.region}
    write_variance_csv(args.out, series, meta, fits)
    return 0


def _cmd_scan(args):
    m = _make_map(args)
    fixed = _parse_params([args.fixed] if args.fixed else [])
    grid = GridSpec(_parse_grid(args.grid), fixed, args.n, args.indicator,
                    spec=spec_from_name(args.spec),
                    ref_spec=spec_from_name(args.ref_spec),
                    norm=args.norm)
    result = grid_scan(m, grid, workers=args.workers)
    paths = write_outputs(result, args.out)
    print(f"wrote {paths['csv']} {paths['pgm']} {paths['json']} "
          f"({result.meta['wall_time_s']} s)")
    return 0


def _cmd_section(args):
    result = read_scan(getattr(args, "in"))
    profile = extract_section(result, args.axis, args.value)
    lines = [f"# section axis={profile.axis} value={fmt(profile.value)}",
             "coordinate,value"]
    for c, v in zip(profile.coordinates, profile.values):
        lines.append(f"{fmt(c)},{fmt(v)}")
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def _add_map_flags(p):
    p.add_argument("--map", required=True,
                   help="map family (translation, rotation, bernoulli, "
                        "standard, skew, froeschle4d)")
    p.add_argument("--param", action="append", default=None,
                   metavar="k=v", help="map parameter, repeatable")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="rounddyn",
        description="Round-off and variational chaos indicators for maps.")
    top.add_argument("--version", action="version", version=__version__)
    top.add_argument("--config", help="key=value file providing flag defaults")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("orbit-error",
                       help="reversibility error, orbit divergence or "
                            "global translation error along one orbit")
    _add_map_flags(p)
    p.add_argument("--x0", required=True, help="initial state, comma separated")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--indicator", choices=("rev", "div", "global"),
                   required=True)
    p.add_argument("--spec", default="single")
    p.add_argument("--ref-spec", default="double")
    p.add_argument("--norm", choices=("full", "action"), default="full")
    p.add_argument("--samples", type=int, default=None,
                   help="log-spaced sample count (default: every n)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_orbit_error)

    p = sub.add_parser("variational", help="mLCE, MEGNO or SALI along one orbit")
    _add_map_flags(p)
    p.add_argument("--x0", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--indicator", choices=("mlce", "megno", "sali"),
                   required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_variational)

    p = sub.add_parser("ensemble",
                       help="variance growth of an ensemble under round-off "
                            "or uniform noise")
    _add_map_flags(p)
    p.add_argument("--region", required=True,
                   help="lo:hi per coordinate, comma separated")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--mode", choices=("roundoff", "noise"), required=True)
    p.add_argument("--amplitude", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--fit-window", default=None, metavar="lo:hi")
    p.add_argument("--spec", default="single",
                   help="precision for roundoff mode")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("scan", help="indicator value over a grid of seeds")
    _add_map_flags(p)
    p.add_argument("--grid", required=True,
                   metavar="axis:min:max:res,axis:min:max:res")
    p.add_argument("--fixed", default=None, metavar="k=v,...")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--indicator", choices=("rev", "div", "mlce", "megno",
                                           "sali"), required=True)
    p.add_argument("--spec", default="single")
    p.add_argument("--ref-spec", default="double")
    p.add_argument("--norm", choices=("full", "action"), default="full")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("section", help="extract one grid line from a scan")
    p.add_argument("--in", required=True, dest="in", metavar="prefix.csv")
    p.add_argument("--axis", required=True)
    p.add_argument("--value", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_section)
    return top


def _apply_config(parser, argv):
    """Seed subcommand defaults from --config before the real parse."""
    if "--config" not in argv:
        return
    i = argv.index("--config")
    cfg = read_config(argv[i + 1])
    for action in parser._subparsers._group_actions[0].choices.values():
        defaults = {}
        dests = {a.dest: a for a in action._actions}
        for key, val in cfg.items():
            dest = key.replace("-", "_")
            if dest in dests:
                a = dests[dest]
                if a.type is not None:
                    val = a.type(val)
                if isinstance(a, argparse._AppendAction):
                    val = [val]
                defaults[dest] = val
        action.set_defaults(**defaults)
        # config-provided values satisfy "required"
        for a in action._actions:
            if a.dest in defaults:
                a.required = False


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except _NUMERIC_ERRORS as exc:
        print(f"rounddyn: error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"rounddyn: i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
