"""Operator CLI: drives a running control plane, plus offline impact analysis.

Exit codes: 0 success, 1 validation or refused command, 2 server/transport
failure, 3 negative certification (``ism certify --expect-ideal``).

In ``--json`` mode server-backed commands print the HTTP response body
verbatim and offline commands serialize with the same encoder the server
uses, so output is byte-identical either way.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .api import to_json
from .errors import PorticoError
from .ism.certify import certify_report, scope_report
from .ism.model import ChangeContext, ModuleId, ServiceId, load_model

EXIT_VALIDATION = 1
EXIT_TRANSPORT = 2
EXIT_NOT_IDEAL = 3


class Cli:
    def __init__(self, server: str, as_json: bool):
        self.server = server.rstrip("/")
        self.as_json = as_json

    def client(self) -> httpx.Client:
        return httpx.Client(base_url=self.server, timeout=30.0)

    def request(self, method: str, path: str, **kwargs) -> httpx.Response:
        try:
            with self.client() as client:
                response = client.request(method, path, **kwargs)
        except httpx.HTTPError as e:
            click.echo(f"transport error: {e}", err=True)
            sys.exit(EXIT_TRANSPORT)
        if response.status_code >= 400:
            try:
                err = response.json()
                message = f"{err.get('code')}: {err.get('message')}"
            except ValueError:
                message = response.text
            click.echo(message, err=True)
            sys.exit(EXIT_VALIDATION)
        return response

    def emit(self, response: httpx.Response, human) -> None:
        if self.as_json:
            click.echo(response.text)
        else:
            human(response.json())


pass_cli = click.make_pass_decorator(Cli)


@click.group()
@click.option("--server", "-s", envvar="PORTICO_SERVER", default="http://127.0.0.1:8800",
              show_default=True, help="Control plane address.")
@click.option("--json", "as_json", is_flag=True, help="Print raw API payloads.")
@click.pass_context
def main(ctx: click.Context, server: str, as_json: bool) -> None:
    """Steer a component container."""
    ctx.obj = Cli(server, as_json)


@main.command()
@pass_cli
def status(cli: Cli) -> None:
    """Container snapshot: instances, connections, recent events."""
    response = cli.request("GET", "/api/status")

    def human(snap: dict) -> None:
        click.echo(f"app: {snap['app']}")
        for inst in snap["instances"]:
            click.echo(
                f"  {inst['instance']:<20} {inst['component']}@{inst['version']} "
                f"{inst['state']} in_flight={inst['in_flight']}"
            )
        for conn in snap["connections"]:
            adapter = f" [{conn['adapter']}]" if conn["adapter"] else ""
            click.echo(f"  {conn['connection']:<20} {conn['from']} -> {conn['to']}{adapter}")

    cli.emit(response, human)


@main.command()
@click.option("--root", type=click.Path(), default=None,
              help="Deploy directory (defaults to the server's).")
@pass_cli
def scan(cli: Cli, root: str | None) -> None:
    """Scan the deploy directory and apply the delta."""
    body = {"root": root} if root else {}
    response = cli.request("POST", "/api/scan", json=body)
    cli.emit(response, _print_events)


@main.command()
@click.argument("pkg", type=click.Path(exists=True, dir_okay=False))
@pass_cli
def load(cli: Cli, pkg: str) -> None:
    """Upload a component package."""
    response = cli.request("POST", "/api/components", content=Path(pkg).read_bytes())
    cli.emit(response, _print_events)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@pass_cli
def instantiate(cli: Cli, config: str) -> None:
    """Create an instance from a config file."""
    response = cli.request("POST", "/api/instances", json=json.loads(Path(config).read_text()))
    cli.emit(response, _print_events)


@main.command()
@click.argument("instance")
@pass_cli
def unload(cli: Cli, instance: str) -> None:
    """Drain and release an instance."""
    response = cli.request("DELETE", f"/api/instances/{instance}")
    cli.emit(response, _print_events)


@main.command()
@click.argument("source", metavar="FROM")
@click.argument("target", metavar="TO")
@click.option("--id", "connection_id", default=None,
              help="Connection id (default: <instance>-<port> of FROM).")
@click.option("--adapter", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Inline adapter script file.")
@click.option("--param", "params", multiple=True, metavar="K=V",
              help="Adapter parameter (repeatable).")
@pass_cli
def link(cli: Cli, source: str, target: str, connection_id: str | None,
         adapter: str | None, params: tuple[str, ...]) -> None:
    """Connect FROM (instance:port) to TO (instance:port)."""
    if connection_id is None:
        connection_id = source.replace(":", "-")
    body: dict = {"connection": connection_id, "from": source, "to": target}
    if adapter is not None:
        body["adapter"] = {
            "script": Path(adapter).read_text(),
            "parameters": _parse_params(params),
        }
    response = cli.request("POST", "/api/connections", json=body)
    cli.emit(response, _print_events)


@main.command()
@click.argument("connection")
@pass_cli
def unlink(cli: Cli, connection: str) -> None:
    """Drop a connection."""
    response = cli.request("DELETE", f"/api/connections/{connection}")
    cli.emit(response, _print_events)


@main.command()
@click.argument("instance")
@click.argument("component", metavar="COMPONENT@VERSION")
@click.option("--rebind", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Rebind plan file ({\"connections\": [...]}).")
@pass_cli
def swap(cli: Cli, instance: str, component: str, rebind: str | None) -> None:
    """Hot-swap an instance to another component version."""
    body: dict = {"component": component}
    if rebind is not None:
        plan = json.loads(Path(rebind).read_text())
        body["rebind"] = plan["connections"] if isinstance(plan, dict) else plan
    response = cli.request("POST", f"/api/instances/{instance}/swap", json=body)
    cli.emit(response, _print_events)


@main.command()
@click.option("--cursor", type=int, default=0, show_default=True)
@click.option("--follow", is_flag=True, help="Tail the stream until interrupted.")
@pass_cli
def events(cli: Cli, cursor: int, follow: bool) -> None:
    """Print lifecycle events after CURSOR."""
    if not follow:
        response = cli.request("GET", f"/api/events?cursor={cursor}")
        cli.emit(response, lambda batch: _print_events({"events": batch}))
        return
    try:
        with cli.client() as client:
            with client.stream("GET", f"/api/events?cursor={cursor}&follow=true",
                               timeout=None) as response:
                for line in response.iter_lines():
                    if not line:
                        continue
                    if cli.as_json:
                        click.echo(line)
                        continue
                    record = json.loads(line)
                    if "control" in record:
                        continue
                    _print_event(record)
    except httpx.HTTPError as e:
        click.echo(f"transport error: {e}", err=True)
        sys.exit(EXIT_TRANSPORT)
    except KeyboardInterrupt:
        pass


# ------------------------------------------------------------- impact analysis

@main.group()
def ism() -> None:
    """Offline impact analysis over model files (no server needed)."""


@ism.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--context", "context_arg", default="s", show_default=True,
              help="Comma-separated change contexts (s,r,o).")
@click.option("--change", "changes", multiple=True, required=True,
              help="Changed service id app.module.service (repeatable).")
@click.pass_obj
def scope(cli: Cli, model_path: str, context_arg: str, changes: tuple[str, ...]) -> None:
    """Impact scope of a change set."""
    report = _offline(lambda: scope_report(
        load_model(model_path),
        [ChangeContext.parse(c) for c in context_arg.split(",") if c],
        [ServiceId.parse(c) for c in changes],
    ))
    if cli.as_json:
        click.echo(to_json(report))
        return
    click.echo(f"contexts: {', '.join(report['contexts'])}")
    click.echo(f"services: {', '.join(report['services'])}")
    click.echo(f"modules: {', '.join(report['modules'])}")
    click.echo(f"applications: {', '.join(report['applications'])}")


@ism.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--module", "module_arg", default=None,
              help="Also certify pairwise complete independence for app.module.")
@click.option("--expect-ideal", is_flag=True,
              help="Exit 3 unless every application certifies ideal.")
@click.pass_obj
def certify(cli: Cli, model_path: str, module_arg: str | None, expect_ideal: bool) -> None:
    """Certify module independence and ideal-system status."""
    report = _offline(lambda: certify_report(
        load_model(model_path),
        ModuleId.parse(module_arg) if module_arg else None,
    ))
    if cli.as_json:
        click.echo(to_json(report))
    else:
        click.echo(f"contexts examined: {', '.join(report['contexts']) or '(none registered)'}")
        for app in report["applications"]:
            click.echo(f"ideal: {_bool(app['ideal'])} ({app['name']})")
        for mod in report["modules"]:
            click.echo(f"  absolute: {_bool(mod['absolutely_independent'])} {mod['id']}")
        for pair in report.get("pairs", []):
            per_context = " ".join(
                f"{ctx}:{_bool(v)}" for ctx, v in sorted(pair["independent"].items())
            )
            click.echo(
                f"  complete: {_bool(pair['completely_independent'])} "
                f"{pair['module']} vs {pair['other']}"
                + (f" (independent {per_context})" if per_context else "")
            )
    if expect_ideal and not all(a["ideal"] for a in report["applications"]):
        sys.exit(EXIT_NOT_IDEAL)


# ---------------------------------------------------------------------- serve

@main.command()
@click.option("--root", type=click.Path(exists=True, file_okay=False), required=True,
              help="Deploy directory to scan and serve.")
@click.option("--bind", default="127.0.0.1:8800", show_default=True)
@click.option("--app-name", default="app", show_default=True)
@click.option("--autoscan/--no-autoscan", default=True, show_default=True)
@click.option("--scan-interval", type=float, default=2.0, show_default=True)
@click.option("--console", "console_dir", type=click.Path(file_okay=False), default=None,
              help="Static console bundle to serve at /console/.")
def serve(root: str, bind: str, app_name: str, autoscan: bool,
          scan_interval: float, console_dir: str | None) -> None:
    """Boot a container from ROOT and serve the control plane."""
    from .api import serve as api_serve
    from .runtime.container import Container

    host, _, port = bind.partition(":")
    try:
        container = Container(app_name=app_name, root=root, scan_interval=scan_interval)
        container.scan_and_apply()
        if autoscan:
            container.start_autoscan()
        server = api_serve(container, host=host, port=int(port or 8800),
                           console_dir=console_dir)
    except PorticoError as e:
        click.echo(f"{e.code}: {e}", err=True)
        sys.exit(EXIT_VALIDATION if e.code != "BindFailure" else EXIT_TRANSPORT)
    click.echo(f"serving {app_name} from {root} at {server.base_url}")
    try:
        while True:
            import time

            time.sleep(3600)
    except KeyboardInterrupt:
        server.stop()
        container.stop_autoscan()


# -------------------------------------------------------------------- helpers

def _offline(fn):
    try:
        return fn()
    except PorticoError as e:
        click.echo(f"{e.code}: {e}", err=True)
        sys.exit(EXIT_VALIDATION)


def _parse_params(params: tuple[str, ...]) -> dict:
    out = {}
    for item in params:
        key, sep, value = item.partition("=")
        if not sep:
            click.echo(f"bad --param (expected K=V): {item}", err=True)
            sys.exit(EXIT_VALIDATION)
        out[key] = value
    return out


def _bool(value: bool) -> str:
    return "true" if value else "false"


def _print_event(record: dict) -> None:
    click.echo(f"[{record['seq']}] {record['action']:<14} {record['subject']} "
               f"{json.dumps(record['detail']) if record['detail'] else ''}".rstrip())


def _print_events(payload: dict) -> None:
    for record in payload.get("events", []):
        _print_event(record)


if __name__ == "__main__":
    main()
