"""Command-line interface.

Every subcommand is a thin client of the HTTP service: by default an
in-process instance of the app, or a remote one via --server. Files are
always written locally by the CLI, never by the service.
"""
from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np


class ServiceClient:
    """Minimal JSON-over-HTTP client; in-process unless a server URL is given."""

    def __init__(self, server: str | None):
        if server is None:
            from fastapi.testclient import TestClient

            from .service.app import create_app

            self._client = TestClient(create_app())
        else:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=None)

    def post(self, path: str, payload) -> dict:
        response = self._client.post(path, json=payload)
        return self._handle(response)

    def get(self, path: str) -> dict:
        return self._handle(self._client.get(path))

    @staticmethod
    def _handle(response):
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise click.ClickException(f"[{response.status_code}] {detail}")
        return response.json()


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL; default runs the service in-process.")
@click.pass_context
def main(ctx, server):
    """Kernel Bayes inference tools: trajectories, benchmarks, oracle checks."""
    ctx.obj = {"server": server}


def _client(ctx) -> ServiceClient:
    return ServiceClient(ctx.obj["server"])


@main.command()
@click.option("--length", type=int, required=True, help="Trajectory length.")
@click.option("--seed", type=int, required=True)
@click.option("--theta1", type=float, default=None,
              help="Pin the first angle instead of sampling it.")
@click.option("--step", type=float, default=0.4, show_default=True)
@click.option("--process-noise", type=float, default=0.04, show_default=True)
@click.option("--observation-noise", type=float, default=0.04, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Trajectory CSV destination.")
@click.pass_context
def generate(ctx, length, seed, theta1, step, process_noise, observation_noise, out):
    """Sample a toy trajectory and write it as CSV."""
    from .experiments.dynamics import ToyTrajectory
    from .experiments.reporting import write_trajectory_csv

    payload = {
        "length": length, "seed": seed, "step": step,
        "process_noise": process_noise, "observation_noise": observation_noise,
        "theta1": theta1,
    }
    doc = _client(ctx).post("/experiments/generate", payload)
    trajectory = ToyTrajectory(
        thetas=np.array(doc["thetas"]),
        states=np.array(doc["states"]),
        observations=np.array(doc["observations"]),
    )
    write_trajectory_csv(out, trajectory)
    click.echo(f"wrote {length} steps to {out}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Experiment config JSON.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True,
              help="Directory for summary.json, steps.csv, per_step_mse.csv.")
@click.pass_context
def benchmark(ctx, config_path, out_dir):
    """Run the filtering benchmark described by a config file."""
    from .errors import InputError
    from .experiments.config import load_experiment_config
    from .experiments.reporting import (
        write_per_step_mse_csv,
        write_steps_csv,
        write_summary_json,
    )

    try:
        config = load_experiment_config(config_path)
    except InputError as err:
        raise click.ClickException(str(err)) from err
    result = _client(ctx).post("/experiments/benchmark", config.model_dump())
    out = Path(out_dir)
    write_summary_json(out / "summary.json", result["summary"])
    write_steps_csv(out / "steps.csv", result["rows"])
    write_per_step_mse_csv(out / "per_step_mse.csv", result["per_step_mse"])
    for algorithm, stats in result["summary"]["algorithms"].items():
        click.echo(
            f"{algorithm}: total_mse={stats['total_mse']:.6f} "
            f"wall_ms={stats['wall_ms']:.1f} failures={stats['failures']}"
        )
    click.echo(f"wrote summary.json, steps.csv, per_step_mse.csv to {out}")


@main.command("oracle-check")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Oracle-check config JSON (defaults built in).")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Optional report JSON destination.")
@click.pass_context
def oracle_check(ctx, config_path, out):
    """Convergence checks against exact discrete Bayes; exits 1 on failure."""
    from .errors import InputError
    from .experiments.config import load_oracle_config
    from .experiments.reporting import write_report_json

    try:
        config = load_oracle_config(config_path if config_path else {})
    except InputError as err:
        raise click.ClickException(str(err)) from err
    report = _client(ctx).post("/experiments/oracle-check", config.model_dump())
    if out:
        write_report_json(out, report)
    beta = report["beta"]
    click.echo(f"beta-sum medians: {beta['medians']} passed={beta['passed']}")
    if "beta_negative_control" in report:
        control = report["beta_negative_control"]
        click.echo(
            f"negative control (lam={control['lam']}): median={control['median']:.4f} "
            f"flagged={control['flagged']}"
        )
    posterior = report["posterior"]
    click.echo(
        f"posterior medians: {posterior['medians']} passed={posterior['passed']}"
    )
    click.echo("PASS" if report["passed"] else "FAIL")
    if not report["passed"]:
        raise SystemExit(1)


@main.command("decode-demo")
@click.option("--embedding", "embedding_path",
              type=click.Path(exists=True, dir_okay=False), required=True,
              help="Embedding JSON document.")
@click.option("--init", "init_str", default=None, metavar="X,Y",
              help="Starting point (comma-separated); default is the weighted mean.")
@click.pass_context
def decode_demo(ctx, embedding_path, init_str):
    """Decode an embedding document to a point via mean-shift."""
    doc = json.loads(Path(embedding_path).read_text())
    init = None
    if init_str is not None:
        init = [float(v) for v in init_str.split(",")]
    result = _client(ctx).post("/decode", {"embedding": doc, "init": init})
    click.echo(json.dumps(result, indent=2))


@main.command()
@click.option("--n", type=int, default=500, show_default=True,
              help="Sample size for the reference fit.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--lambda-scale", type=float, default=1.0, show_default=True)
@click.pass_context
def diagnostics(ctx, n, seed, lambda_scale):
    """Print fit metadata for a thresholded regressor on the reference setup."""
    result = _client(ctx).post(
        "/posterior/diagnostics",
        {"n": n, "seed": seed, "lambda_scale": lambda_scale},
    )
    click.echo(json.dumps(result, indent=2))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
