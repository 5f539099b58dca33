"""Command-line driver.

Each subcommand builds the same request model the HTTP service consumes,
then runs the handler in-process (default) or posts it to a server given
with --server.  Sweep results are written as CSV, optimizer results as
JSON, and every file output gets a manifest sidecar from which the run can
be repeated byte-for-byte.

Exit codes: 0 success, 2 bad arguments or config, 3 infeasible model,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any

from pydantic import ValidationError

from . import __version__
from .continuum import BroadcastDied, InfeasibleError
from .service import (
    FesRequest,
    FesResponse,
    MrttRequest,
    MrttResponse,
    OptimizeRequest,
    OptimizeResponse,
    PsbRequest,
    PsbResponse,
    RingsRequest,
    RingsResponse,
    UnitsRequest,
    UnitsResponse,
    run_fes,
    run_mrtt,
    run_optimize,
    run_psb,
    run_rings,
    run_units,
)
from .varthresh import NoFeasibleSolutionError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4


def _fmt(value: Any) -> str:
    """Locale-independent cell formatting; floats keep full precision."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _jsonable(obj: Any) -> Any:
    """Replace non-finite floats with strings so payloads are strict JSON."""
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _parse_grid(text: str) -> list[float]:
    """Parse 'start:stop:count' as a linear grid or 'a,b,c' as a list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:count or a comma list, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("grid count must be >= 1")
        if count == 1:
            return [start]
        step = (stop - start) / (count - 1)
        return [start + i * step for i in range(count)]
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_epsilon_arg(text: str):
    values = [v.strip() for v in text.split(",") if v.strip()]
    parsed = [v if v.lower() in ("inf", "infinity") else float(v) for v in values]
    if len(parsed) == 1:
        return parsed[0]
    return parsed


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SystemExit(_fail(f"config error: cannot read {path}: {exc}", EXIT_CONFIG))
    except json.JSONDecodeError as exc:
        raise SystemExit(
            _fail(f"config error: {path} line {exc.lineno}: {exc.msg}", EXIT_CONFIG)
        )
    if not isinstance(data, dict):
        raise SystemExit(_fail(f"config error: {path}: top level must be an object", EXIT_CONFIG))
    # A manifest sidecar is itself a valid config: unwrap its request.
    if "request" in data and "subcommand" in data:
        return data["request"]
    return data


def _fail(message: str, code: int) -> int:
    print(message, file=sys.stderr)
    return code


def _deep_update(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_update(out[key], value)
        else:
            out[key] = value
    return out


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_manifest(out: str | None, subcommand: str, seed: int, request_model) -> None:
    if out is None:
        return
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "seed": seed,
        "request": _jsonable(request_model.model_dump()),
        "outputs": [out],
    }
    with open(out + ".manifest.json", "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _csv(rows: list[list[Any]]) -> str:
    return "".join(",".join(_fmt(cell) for cell in row) + "\n" for row in rows)


def _post(server: str, endpoint: str, request_model, response_cls):
    import httpx

    payload = _jsonable(request_model.model_dump())
    resp = httpx.post(server.rstrip("/") + endpoint, json=payload, timeout=None)
    if resp.status_code == 422:
        raise InfeasibleError(str(resp.json().get("detail", resp.text)))
    if resp.status_code >= 400:
        raise ValueError(f"server rejected request ({resp.status_code}): {resp.text}")
    return response_cls.model_validate(resp.json())


def _run(args, endpoint: str, request_model, response_cls, handler, **handler_kwargs):
    if args.server:
        return _post(args.server, endpoint, request_model, response_cls)
    return handler(request_model, **handler_kwargs)


def _cmd_rings(args) -> int:
    config = _load_config(args.config)
    overrides: dict = {"params": {}}
    for flag, field in [
        ("relay_power_density", "relay_power_density"),
        ("decode_threshold", "decode_threshold"),
        ("source_power", "source_power"),
    ]:
        value = getattr(args, flag)
        if value is not None:
            overrides["params"][field] = value
    if args.epsilon is not None:
        overrides["params"]["epsilon"] = _parse_epsilon_arg(args.epsilon)
    if args.levels is not None:
        overrides["levels"] = args.levels
    req = RingsRequest.model_validate(_deep_update(config, overrides))
    resp = _run(args, "/rings", req, RingsResponse, run_rings)
    rows: list[list[Any]] = [["level", "r_b", "r_d"]]
    for ring in resp.rings:
        rows.append([ring.level, ring.r_b, ring.r_d])
    if resp.died_at is not None:
        rows.append(["died_at", resp.died_at, ""])
    _write_text(args.out, _csv(rows))
    _write_manifest(args.out, "rings", args.seed or 0, req)
    return EXIT_OK


def _cmd_mrtt(args) -> int:
    config = _load_config(args.config)
    overrides: dict = {}
    if args.dr_grid is not None:
        overrides["dr_grid"] = _parse_grid(args.dr_grid)
    req = MrttRequest.model_validate(_deep_update(config, overrides))
    resp = _run(args, "/mrtt", req, MrttResponse, run_mrtt)
    for dr in resp.skipped:
        print(f"warning: DR={dr} infeasible, skipped", file=sys.stderr)
    rows: list[list[Any]] = [["dr", "mrtt_db"]]
    rows += [[p.dr, p.mrtt_db] for p in resp.points]
    _write_text(args.out, _csv(rows))
    _write_manifest(args.out, "mrtt", args.seed or 0, req)
    return EXIT_OK


def _cmd_fes(args) -> int:
    config = _load_config(args.config)
    overrides: dict = {}
    if args.dr_grid is not None:
        overrides["dr_grid"] = _parse_grid(args.dr_grid)
    if args.level_counts is not None:
        overrides["level_counts"] = [int(v) for v in args.level_counts.split(",") if v.strip()]
    if args.epsilon is not None:
        overrides["epsilon"] = "min" if args.epsilon == "min" else float(args.epsilon)
    req = FesRequest.model_validate(_deep_update(config, overrides))
    resp = _run(args, "/fes", req, FesResponse, run_fes)
    for dr in resp.skipped:
        print(f"warning: DR={dr} infeasible, skipped", file=sys.stderr)
    rows: list[list[Any]] = [["dr", "levels", "fes"]]
    rows += [[p.dr, p.levels, p.fes] for p in resp.points]
    _write_text(args.out, _csv(rows))
    _write_manifest(args.out, "fes", args.seed or 0, req)
    return EXIT_OK


def _cmd_optimize(args) -> int:
    config = _load_config(args.config)
    overrides: dict = {"params": {}, "constraint": {}, "optimizer": {}}
    for flag, section, field in [
        ("relay_power_density", "params", "relay_power_density"),
        ("decode_threshold", "params", "decode_threshold"),
        ("source_power", "params", "source_power"),
        ("kind", "constraint", "kind"),
        ("levels", "constraint", "levels"),
        ("network_radius", "constraint", "network_radius"),
        ("population_size", "optimizer", "population_size"),
        ("generations", "optimizer", "generations"),
    ]:
        value = getattr(args, flag)
        if value is not None:
            overrides[section][field] = value
    if args.seed is not None:
        overrides["optimizer"]["rng_seed"] = args.seed
    overrides = {k: v for k, v in overrides.items() if v}
    req = OptimizeRequest.model_validate(_deep_update(config, overrides))
    resp = _run(args, "/optimize", req, OptimizeResponse, run_optimize, threads=args.threads)
    document = json.dumps(_jsonable(resp.model_dump()), indent=2, sort_keys=True) + "\n"
    _write_text(args.out, document)
    _write_manifest(args.out, "optimize", req.optimizer.rng_seed, req)
    return EXIT_OK


def _cmd_psb(args) -> int:
    config = _load_config(args.config)
    overrides: dict = {"base": {}}
    for flag, field in [
        ("density", "density"),
        ("node_count", "node_count"),
        ("area_radius", "area_radius"),
        ("relay_power_density", "relay_power_density"),
        ("decode_threshold", "decode_threshold"),
        ("source_power", "source_power"),
        ("max_levels", "max_levels"),
    ]:
        value = getattr(args, flag)
        if value is not None:
            overrides["base"][field] = value
    if args.rtt_grid_db is not None:
        overrides["rtt_grid_db"] = _parse_grid(args.rtt_grid_db)
    if args.variants is not None:
        overrides["variants"] = _parse_grid(args.variants)
    if args.variant_kind is not None:
        overrides["variant_kind"] = args.variant_kind
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    overrides = {k: v for k, v in overrides.items() if v != {}}
    req = PsbRequest.model_validate(_deep_update(config, overrides))
    resp = _run(args, "/psb", req, PsbResponse, run_psb, threads=args.threads)
    rows: list[list[Any]] = [["rtt_db", "variant", "psb", "halfwidth", "trials", "seed"]]
    rows += [[r.rtt_db, r.variant, r.psb, r.halfwidth, r.trials, r.seed] for r in resp.rows]
    _write_text(args.out, _csv(rows))
    _write_manifest(args.out, "psb", req.seed, req)
    return EXIT_OK


def _cmd_units(args) -> int:
    config = _load_config(args.config)
    overrides: dict = {}
    if args.pt_dbm is not None or args.sens_dbm is not None or args.density_per_m2 is not None:
        missing = [
            name
            for name, value in [
                ("--pt-dbm", args.pt_dbm),
                ("--sens-dbm", args.sens_dbm),
                ("--density-per-m2", args.density_per_m2),
            ]
            if value is None
        ]
        if missing:
            raise ValueError(f"custom link budget needs {', '.join(missing)}")
        overrides["rows"] = [
            {
                "label": "custom",
                "tx_power_dBm": args.pt_dbm,
                "rx_sensitivity_dBm": args.sens_dbm,
                "node_density_per_m2": args.density_per_m2,
            }
        ]
    if args.link_constant is not None:
        overrides["link_constant"] = args.link_constant
    req = UnitsRequest.model_validate(_deep_update(config, overrides))
    resp = _run(args, "/units", req, UnitsResponse, run_units)
    rows: list[list[Any]] = [["example", "pt_dbm", "density_per_m2", "sens_dbm", "d_nn_m", "dr"]]
    rows += [
        [r.example, r.pt_dbm, r.density_per_m2, r.sens_dbm, r.d_nn_m, r.dr] for r in resp.rows
    ]
    _write_text(args.out, _csv(rows))
    _write_manifest(args.out, "units", args.seed or 0, req)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def _add_global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Register the shared flags; subparsers suppress defaults so that a
    value parsed before the subcommand is not clobbered afterwards."""

    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(None), help="master RNG seed")
    parser.add_argument("--out", default=default(None), help="output file (default stdout)")
    parser.add_argument("--config", default=default(None), help="JSON config file")
    parser.add_argument(
        "--threads", type=int, default=default(1), help="worker threads, 0 = auto (default 1)"
    )
    parser.add_argument(
        "--server", default=default(None), help="base URL of a running service; run remotely"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olasim",
        description="Opportunistic Large Array broadcast analytics and simulation",
    )
    parser.add_argument("--version", action="version", version=f"olasim {__version__}")
    _add_global_flags(parser, suppress=False)
    globals_parent = argparse.ArgumentParser(add_help=False)
    _add_global_flags(globals_parent, suppress=True)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_params_flags(p):
        p.add_argument("--relay-power-density", dest="relay_power_density", type=float)
        p.add_argument("--decode-threshold", dest="decode_threshold", type=float)
        p.add_argument("--source-power", dest="source_power", type=float)

    p_rings = sub.add_parser("rings", parents=[globals_parent], help="per-level boundary radii of one broadcast")
    add_params_flags(p_rings)
    p_rings.add_argument("--epsilon", help="offset schedule: number, comma list, or 'inf'")
    p_rings.add_argument("--levels", type=int)
    p_rings.set_defaults(func=_cmd_rings)

    p_mrtt = sub.add_parser("mrtt", parents=[globals_parent], help="minimum sustaining threshold vs decoding ratio")
    p_mrtt.add_argument("--dr-grid", dest="dr_grid", help="comma list or start:stop:count")
    p_mrtt.set_defaults(func=_cmd_mrtt)

    p_fes = sub.add_parser("fes", parents=[globals_parent], help="energy saved vs decoding ratio and level count")
    p_fes.add_argument("--dr-grid", dest="dr_grid", help="comma list or start:stop:count")
    p_fes.add_argument("--level-counts", dest="level_counts", help="comma list of ints")
    p_fes.add_argument("--epsilon", help="'min' or a fixed offset value")
    p_fes.set_defaults(func=_cmd_fes)

    p_opt = sub.add_parser("optimize", parents=[globals_parent], help="search for a minimum-energy offset schedule")
    add_params_flags(p_opt)
    p_opt.add_argument("--kind", choices=["type1", "type2"])
    p_opt.add_argument("--levels", type=int)
    p_opt.add_argument("--network-radius", dest="network_radius", type=float)
    p_opt.add_argument("--population-size", dest="population_size", type=int)
    p_opt.add_argument("--generations", type=int)
    p_opt.set_defaults(func=_cmd_optimize)

    p_psb = sub.add_parser("psb", parents=[globals_parent], help="probability of successful broadcast sweep")
    add_params_flags(p_psb)
    p_psb.add_argument("--rtt-grid-db", dest="rtt_grid_db", help="comma list or start:stop:count")
    p_psb.add_argument("--variants", help="comma list (densities or finger counts)")
    p_psb.add_argument("--variant-kind", dest="variant_kind", choices=["density", "diversity"])
    p_psb.add_argument("--trials", type=int)
    p_psb.add_argument("--density", type=float)
    p_psb.add_argument("--node-count", dest="node_count", type=int)
    p_psb.add_argument("--area-radius", dest="area_radius", type=float)
    p_psb.add_argument("--max-levels", dest="max_levels", type=int)
    p_psb.set_defaults(func=_cmd_psb)

    p_units = sub.add_parser("units", parents=[globals_parent], help="physical link budgets to normalized quantities")
    p_units.add_argument("--pt-dbm", dest="pt_dbm", type=float)
    p_units.add_argument("--sens-dbm", dest="sens_dbm", type=float)
    p_units.add_argument("--density-per-m2", dest="density_per_m2", type=float)
    p_units.add_argument(
        "--link-constant", dest="link_constant", choices=["rounded_2p4ghz", "exact"]
    )
    p_units.set_defaults(func=_cmd_units)

    p_serve = sub.add_parser("serve", parents=[globals_parent], help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        lines = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
        return _fail(f"config error: {lines}", EXIT_CONFIG)
    except (InfeasibleError, NoFeasibleSolutionError, BroadcastDied) as exc:
        return _fail(f"infeasible: {exc}", EXIT_INFEASIBLE)
    except ValueError as exc:
        return _fail(f"config error: {exc}", EXIT_CONFIG)
    except OSError as exc:
        return _fail(f"i/o error: {exc}", EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
