"""Command-line entry point: ``synthgrid {ingest,fit,generate,report,compare}``.

Exit codes: 0 success, 2 bad input, 3 numerical failure, 4 graph-state error.
Every flag can also come from a JSON file given with ``--config``; flags on
the command line win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

import numpy as np

from . import generator, ingest, metrics, mixture
from .graph import read_graph_csv, write_graph_csv

log = logging.getLogger("synthgrid")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_GRAPH = 0, 2, 3, 4


class InputError(Exception):
    pass


# defaults applied after merging the config file; flags themselves default to None
DEFAULTS = {
    "seed": 0,
    "snap_km": ingest.DEFAULT_SNAP_KM,
    "restarts": 5,
    "min_degree": 2,
    "k_kl": 10,
    "apl": "auto",
    "largest_component": False,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synthgrid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with default values for any flag")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output path or prefix")

    def graph_input(p):
        p.add_argument("--region", help="file of POLYGON((lon lat, ...)) rings")
        p.add_argument("--snap-km", type=float, dest="snap_km")
        p.add_argument("--largest-component", action="store_const", const=True,
                       dest="largest_component")

    p = sub.add_parser("ingest", help="lines CSV -> graph CSVs")
    p.add_argument("lines")
    common(p)
    graph_input(p)

    p = sub.add_parser("fit", help="fit a position mixture and save it as JSON")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--lines", help="lines CSV (id,voltage_class,wkt)")
    src.add_argument("--graph", help="prefix of an existing nodes.csv/edges.csv pair")
    p.add_argument("--c-min", type=int, dest="c_min")
    p.add_argument("--c-max", type=int, dest="c_max")
    p.add_argument("--restarts", type=int)
    common(p)
    graph_input(p)

    p = sub.add_parser("generate", help="generate a synthetic grid from a model")
    p.add_argument("model")
    p.add_argument("--preset", choices=sorted(generator.PRESETS))
    for name in ("kappa", "alpha", "beta", "gamma", "eta"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--nn", type=int)
    p.add_argument("--mode", choices=["large", "small"])
    p.add_argument("--n", type=int, dest="n_target")
    p.add_argument("--m", type=int, dest="m_target")
    common(p)

    for name, help_ in (("report", "structural metrics of a graph"),
                        ("compare", "similarity of a graph to a reference")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("graph")
        if name == "compare":
            p.add_argument("reference")
        else:
            p.add_argument("--reference")
        p.add_argument("--min-degree", type=int, dest="min_degree")
        p.add_argument("--k-kl", type=int, dest="k_kl")
        p.add_argument("--apl", help="exact | sampled | sampled:<k> | auto")
        p.add_argument("--largest-component", action="store_const", const=True,
                       dest="largest_component")
        common(p)
    return parser


def _merge_config(args: argparse.Namespace) -> dict:
    opts = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError("config file must hold a JSON object")
        opts.update({k.replace("-", "_"): v for k, v in loaded.items()})
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    for key, value in DEFAULTS.items():
        opts.setdefault(key, value)
    return opts


def _load_graph(opts: dict, lines_path: Optional[str] = None, graph_prefix: Optional[str] = None):
    if lines_path is not None:
        g = ingest.build_graph(ingest.read_lines_csv(lines_path), opts["snap_km"])
    else:
        g = read_graph_csv(graph_prefix)
    if opts.get("region"):
        g = ingest.clip_region(g, ingest.read_region(opts["region"]))
    if opts.get("largest_component"):
        g = ingest.largest_component(g)
    return g


def _write_json(obj, path: Optional[str]) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_ingest(opts: dict) -> int:
    if not opts.get("out"):
        raise InputError("ingest needs --out PREFIX")
    g = _load_graph(opts, lines_path=opts["lines"])
    nodes, edges = write_graph_csv(g, opts["out"])
    print(f"{g.n} nodes, {g.m} edges -> {nodes}, {edges}")
    return EXIT_OK


def cmd_fit(opts: dict) -> int:
    if not opts.get("out"):
        raise InputError("fit needs --out MODEL.json")
    if not (opts.get("lines") or opts.get("graph")):
        raise InputError("fit needs --lines FILE or --graph PREFIX")
    g = _load_graph(opts, lines_path=opts.get("lines"), graph_prefix=opts.get("graph"))
    if g.n == 0:
        raise InputError("no nodes to fit")
    lo, hi = mixture.default_c_range(g.n)
    lo, hi = opts.get("c_min", lo), opts.get("c_max", hi)
    if hi > g.n:
        hi = g.n
    cfg = mixture.EmConfig(restarts=opts["restarts"])
    log.info("fit config: %s", json.dumps({"n_fit": g.n, "c_range": [lo, hi],
                                           "seed": opts["seed"], "restarts": cfg.restarts}))
    model, table = mixture.select_model(g.pos, (lo, hi), seed=opts["seed"], cfg=cfg,
                                        projection_center=g.projection_center,
                                        return_table=True)
    print("c\tloglik\tbic")
    for c, ll, b in table:
        print(f"{c}\t{ll:.6f}\t{b:.6f}")
    print(f"selected c = {model.c}")
    model.save(opts["out"])
    return EXIT_OK


def params_from_opts(opts: dict) -> generator.GenParams:
    fields = ("kappa", "alpha", "beta", "gamma", "eta", "nn", "mode", "n_target", "m_target")
    chosen = {k: opts[k] for k in fields if opts.get(k) is not None}
    chosen["seed"] = opts["seed"]
    if opts.get("preset"):
        return generator.preset_params(opts["preset"], **chosen)
    missing = [k for k in ("n_target", "m_target") if k not in chosen]
    if missing:
        raise InputError("generate needs --n and --m (or --preset)")
    return generator.GenParams(**chosen)


def cmd_generate(opts: dict) -> int:
    if not opts.get("out"):
        raise InputError("generate needs --out PREFIX")
    try:
        model = mixture.GmmModel.load(opts["model"])
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read model {opts['model']}: {exc}") from None
    try:
        params = params_from_opts(opts)
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid parameters: {exc}") from None
    log.info("generate config: %s", json.dumps({
        "params": params.to_dict(), "stage_seeds": generator.stage_seeds(params.seed),
        "model": opts["model"], "c": model.c}))
    g = generator.gnlg(model, params)
    nodes, edges = write_graph_csv(g, opts["out"])
    print(f"{g.n} nodes, {g.m} edges -> {nodes}, {edges}")
    return EXIT_OK


def _report(opts: dict, graph_prefix: str, reference_prefix: Optional[str]):
    g = _load_graph(opts, graph_prefix=graph_prefix)
    ref = None
    if reference_prefix:
        ref = read_graph_csv(reference_prefix)
        if opts.get("largest_component"):
            ref = ingest.largest_component(ref)
    log.info("report config: %s", json.dumps({k: opts[k] for k in ("min_degree", "k_kl", "apl", "seed")}))
    return metrics.structural_report(
        g, ref, min_degree=opts["min_degree"], k_kl=opts["k_kl"], apl_mode=opts["apl"],
        seed=opts["seed"], reference_id=reference_prefix,
    )


def cmd_report(opts: dict) -> int:
    report = _report(opts, opts["graph"], opts.get("reference"))
    _write_json(report.to_dict(), opts.get("out"))
    return EXIT_OK


def cmd_compare(opts: dict) -> int:
    cand = _report(opts, opts["graph"], opts["reference"])
    ref = _report(opts, opts["reference"], None)
    out = {
        "reference_id": opts["reference"],
        "graph_id": opts["graph"],
        "d_ks": cand.d_ks,
        "d_kl": cand.d_kl,
        "reference": {k: getattr(ref, k) for k in ("n", "m", "L", "C", "zeta")},
        "graph": {k: getattr(cand, k) for k in ("n", "m", "L", "C", "zeta")},
        "options": cand.options,
    }
    _write_json(out, opts.get("out"))
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "fit": cmd_fit,
    "generate": cmd_generate,
    "report": cmd_report,
    "compare": cmd_compare,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        opts = _merge_config(args)
        return COMMANDS[args.command](opts)
    except metrics.GraphDisconnectedError as exc:
        log.error("%s; rerun with --largest-component or --apl sampled", exc)
        return EXIT_GRAPH
    except (mixture.DegenerateDataError, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (InputError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
