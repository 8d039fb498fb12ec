"""Command-line interface.

The CLI is a thin client over the service handlers: by default every
command executes in-process, and ``--server URL`` sends the same request
to a running edgeq HTTP service instead.

Subcommands: analytic, simulate, sweep, capacity, trace, serve.
Exit codes: 0 success, 2 configuration error, 3 instability error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import typing

import pydantic

from .errors import ConfigError, InstabilityError, NoPositiveRootError
from .runner import points_csv, simulate_report, trace_report, write_report
from .scenario import load_config_dict, scenario_from_dict, scenario_to_dict
from .service import handlers
from .simulator import write_samples_csv
from .workload import load_trace_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INSTABILITY = 3
EXIT_IO = 4


def _comma_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_model_args(parser: argparse.ArgumentParser, model) -> None:
    """Derive CLI flags from a pydantic request model's fields."""
    for name, field in model.model_fields.items():
        flag = "--" + (field.alias or name).replace("_", "-")
        ann = field.annotation
        kwargs: dict = {"dest": name, "required": field.is_required()}
        if not field.is_required():
            kwargs["default"] = field.default
        origin = typing.get_origin(ann)
        if origin is typing.Literal:
            kwargs["choices"] = typing.get_args(ann)
        elif origin in (list, tuple):
            kwargs["type"] = _comma_floats
            kwargs["metavar"] = "X,Y,..."
        elif ann is int:
            kwargs["type"] = int
        elif ann is float:
            kwargs["type"] = float
        else:
            kwargs["type"] = str
        parser.add_argument(flag, **kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgeq",
        description="Edge-vs-cloud queueing analysis, simulation sweeps, and capacity planning.",
    )
    parser.add_argument("--server", help="base URL of a running edgeq service (default: in-process)")
    parser.add_argument("--seed", type=int, help="override the scenario seed")
    parser.add_argument("--out", help="output file path")
    parser.add_argument("--format", choices=("json", "csv"), default="json", dest="fmt")
    parser.add_argument("--quiet", action="store_true", help="suppress informational output")
    sub = parser.add_subparsers(dest="command", required=True)

    analytic = sub.add_parser("analytic", help="closed-form queueing queries")
    aq = analytic.add_subparsers(dest="query", required=True)
    for path, (model, _) in handlers.ANALYTIC_ROUTES.items():
        qp = aq.add_parser(path.split("/", 1)[1])
        qp.set_defaults(route=path)
        _add_model_args(qp, model)

    capacity = sub.add_parser("capacity", help="capacity-planning calculators")
    cq = capacity.add_subparsers(dest="query", required=True)
    for path, (model, _) in handlers.CAPACITY_ROUTES.items():
        qp = cq.add_parser(path.split("/", 1)[1])
        qp.set_defaults(route=path)
        _add_model_args(qp, model)

    simulate = sub.add_parser("simulate", help="run one scenario point and write a report")
    simulate.add_argument("config")
    simulate.add_argument("--samples", help="prefix for raw per-request sample CSVs")

    sweep = sub.add_parser("sweep", help="run a rate sweep with crossover detection")
    sweep.add_argument("config")

    trace = sub.add_parser("trace", help="replay a per-minute trace against edge and cloud")
    trace.add_argument("trace_csv")
    trace.add_argument("--config", required=True)
    trace.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override a scenario key",
    )

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _dispatch(ns, route: str, payload: dict) -> dict:
    """Run a request in-process or against a remote service."""
    if ns.server:
        import httpx

        url = ns.server.rstrip("/") + "/v1/" + route
        resp = httpx.post(url, json=payload, timeout=600.0)
        if resp.status_code >= 400:
            body = {}
            try:
                body = resp.json()
            except ValueError:
                pass
            kind = body.get("error", "")
            message = body.get("message", resp.text)
            if kind == "InstabilityError":
                raise InstabilityError(message)
            raise ConfigError(message)
        return resp.json()
    model, handler = handlers.ALL_ROUTES[route]
    try:
        request = model.model_validate(payload)
    except pydantic.ValidationError as exc:
        raise ConfigError(str(exc)) from None
    return handler(request)


def _print_analytic(resp: dict, ns) -> None:
    if ns.out:
        with open(ns.out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(resp, indent=2, sort_keys=True) + "\n")
    if ns.fmt == "csv":
        print("name,value")
        for key, val in resp["values"].items():
            print(f"{key},{val:.10g}" if isinstance(val, float) else f"{key},{val}")
        return
    if not ns.quiet:
        print(f"query: {resp['query']}")
        for key, val in resp["inputs"].items():
            print(f"  {key} = {val}")
        print("result:")
    for key, val in resp["values"].items():
        unit = resp["units"].get(key, "")
        if ns.quiet:
            print(f"{key} {val:.10g}" if isinstance(val, float) else f"{key} {val}")
        else:
            shown = f"{val:.10g}" if isinstance(val, float) else str(val)
            suffix = f" [{unit}]" if unit else ""
            print(f"  {key} = {shown}{suffix}")


def _scenario_payload(config_path: str, overrides=()) -> dict:
    data = dict(load_config_dict(config_path))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        data[key.strip()] = val.strip()
    # resolve locally: config errors carry key paths even in remote mode,
    # and the payload goes out with canonical types
    return scenario_to_dict(scenario_from_dict(data))


def _emit_report(report: dict, ns, default_out: str) -> None:
    out = ns.out or default_out
    if ns.fmt == "csv":
        text = points_csv(report)
        with open(out + ".tmp", "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(out + ".tmp", out)
    else:
        write_report(report, out)
    if not ns.quiet:
        print(f"report written to {out}")
        cross = report.get("crossover", {})
        if "mean_rate" in cross:
            print(f"mean crossover rate: {cross['mean_rate']:g} req/s")
        if "p95_rate" in cross:
            print(f"p95 crossover rate: {cross['p95_rate']:g} req/s")
        if not cross:
            print("no crossover detected in sweep range")
        ana = report.get("analytic", {})
        if ana.get("cutoff_paper") is not None:
            print(
                f"analytic cutoff utilization: paper={ana['cutoff_paper']:g} "
                f"exact={ana['cutoff_exact']:g}"
            )


def _run_simulate(ns) -> int:
    payload = {"scenario": _scenario_payload(ns.config), "seed": ns.seed}
    if ns.server or not ns.samples:
        report = _dispatch(ns, "simulate", payload)
        _emit_report(report, ns, "edgeq-report.json")
        return EXIT_OK
    # in-process with raw-sample export
    sc = scenario_from_dict(payload["scenario"])
    report, last = simulate_report(sc, ns.seed)
    _emit_report(report, ns, "edgeq-report.json")
    write_samples_csv(f"{ns.samples}_edge.csv", last.edge_result.stations)
    write_samples_csv(f"{ns.samples}_cloud.csv", last.cloud_result.stations)
    if not ns.quiet:
        print(f"raw samples written to {ns.samples}_edge.csv and {ns.samples}_cloud.csv")
    return EXIT_OK


def _run_sweep(ns) -> int:
    payload = {"scenario": _scenario_payload(ns.config), "seed": ns.seed}
    report = _dispatch(ns, "sweep", payload)
    _emit_report(report, ns, "edgeq-sweep.json")
    return EXIT_OK


def _run_trace(ns) -> int:
    scenario = _scenario_payload(ns.config, ns.overrides)
    if ns.server:
        with open(ns.trace_csv, "r", encoding="utf-8") as fh:
            text = fh.read()
        report = _dispatch(ns, "trace", {"scenario": scenario, "trace_csv": text, "seed": ns.seed})
    else:
        table = load_trace_csv(ns.trace_csv)
        report = trace_report(scenario_from_dict(scenario), table, ns.seed)
    out = ns.out or "edgeq-trace.json"
    if ns.fmt == "csv":
        lines = ["minute,station,count,mean_ms"]
        for window in report["windows"]:
            for name, cell in sorted(window["stations"].items()):
                mean = f"{cell['mean_ms']:g}" if "mean_ms" in cell else ""
                lines.append(f"{window['minute']},{name},{cell['count']},{mean}")
        text = "\n".join(lines) + "\n"
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        write_report(report, out)
    if not ns.quiet:
        print(f"trace report written to {out}")
    return EXIT_OK


def _run_serve(ns) -> int:
    import uvicorn

    uvicorn.run("edgeq.service.app:app", host=ns.host, port=ns.port)
    return EXIT_OK


def run(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    if ns.command in ("analytic", "capacity"):
        model, _ = handlers.ALL_ROUTES[ns.route]
        payload = {name: getattr(ns, name) for name in model.model_fields if getattr(ns, name) is not None}
        resp = _dispatch(ns, ns.route, payload)
        _print_analytic(resp, ns)
        return EXIT_OK
    if ns.command == "simulate":
        return _run_simulate(ns)
    if ns.command == "sweep":
        return _run_sweep(ns)
    if ns.command == "trace":
        return _run_trace(ns)
    if ns.command == "serve":
        return _run_serve(ns)
    raise ConfigError(f"unknown command {ns.command!r}")


def main(argv=None) -> int:
    try:
        return run(argv)
    except (ConfigError, NoPositiveRootError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InstabilityError as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
