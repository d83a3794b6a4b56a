"""Command-line entry points.

Every command takes --config pointing at a run-config JSON (gen-synthetic
excepted) and finishes by echoing the files it wrote. Exit codes: 0 on
success, 2 for anything the user can fix (bad paths, malformed files,
infeasible constraints), 3 for internal failures.
"""

from __future__ import annotations

import dataclasses
import socket
import sys
from pathlib import Path

import click

from . import plotting, reports, serialize
from .config import RunConfig, load_config
from .data import (
    GENERATORS,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    save_dataset,
    save_schema,
)
from .errors import ConstraintError, InputError, ScomError
from .intervention import (
    ORACLES,
    ORDERS,
    InterventionPlan,
    intervention_sweep,
    save_sweep_csv,
    save_sweep_json,
)
from .model import ensure_compatible, load_checkpoint, save_checkpoint, train
from .selection import METHODS, LEVELS, SelectionRequest, load_trace, save_trace, select
from .service import create_app


@click.group()
def cli():
    """Train, query and explain concept-based label predictors."""


def _load_model_and_data(cfg: RunConfig):
    dataset = load_dataset(cfg.schema_path, cfg.data_path)
    model = load_checkpoint(cfg.checkpoint_path)
    ensure_compatible(model, dataset)
    return model, dataset


def _resolve_group_names(schema, names) -> frozenset:
    indices = set()
    for chunk in names:
        for name in chunk.split(","):
            name = name.strip()
            if name:
                indices.add(schema.group_index(name))
    return frozenset(indices)


def _parse_ks(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InputError(f"--ks must be comma-separated integers, got {text!r}") from None


def _provenance(cfg: RunConfig, **extra) -> dict:
    return {
        "config_hash": cfg.config_hash,
        "seeds": {"train": cfg.train.seed, "selection": cfg.selection.seed},
        **extra,
    }


@cli.command("gen-synthetic")
@click.option("--generator", type=click.Choice(GENERATORS), required=True)
@click.option("--n", type=int, default=2000, show_default=True,
              help="Number of instances.")
@click.option("--noise", type=float, default=0.0, show_default=True,
              help="Observation flip probability.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-schema", type=click.Path(), default="schema.json",
              show_default=True)
@click.option("--out-data", type=click.Path(), default="data.csv", show_default=True)
def gen_synthetic(generator, n, noise, seed, out_schema, out_data):
    """Write one of the built-in synthetic datasets to disk."""
    dataset = generate_synthetic(
        SyntheticSpec(generator=generator, n_instances=n, noise=noise, seed=seed))
    save_schema(dataset.schema, out_schema)
    save_dataset(dataset, out_data)
    click.echo(f"wrote {out_schema}")
    click.echo(f"wrote {out_data}")


@cli.command("train")
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--out", type=click.Path(), default=None,
              help="Checkpoint path (default: config's checkpoint).")
@click.option("--epochs", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--seed", type=int, default=None)
def train_cmd(config_path, out, epochs, learning_rate, batch_size, seed):
    """Fit the output model and write its checkpoint plus a loss log."""
    cfg = load_config(config_path)
    tc = cfg.train
    overrides = {"epochs": epochs, "learning_rate": learning_rate,
                 "batch_size": batch_size, "seed": seed}
    tc = dataclasses.replace(
        tc, **{k: v for k, v in overrides.items() if v is not None})
    dataset = load_dataset(cfg.schema_path, cfg.data_path)

    log_rows: list[tuple[int, float, float | None]] = []
    model = train(dataset, tc,
                  on_epoch=lambda e, tl, vl: log_rows.append((e, tl, vl)))

    ckpt_path = Path(out) if out is not None else cfg.checkpoint_path
    ckpt_path.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, ckpt_path)
    log_path = ckpt_path.with_name(ckpt_path.stem + "_train_log.csv")
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_loss,val_loss\n")
        for epoch, train_loss, val_loss in log_rows:
            val = "" if val_loss is None else serialize.format_float(val_loss)
            fh.write(f"{epoch},{serialize.format_float(train_loss)},{val}\n")
    click.echo(f"wrote {ckpt_path}")
    click.echo(f"wrote {log_path}")


@cli.command("select")
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--method", type=click.Choice(METHODS), default=None,
              help="Default: config's selection.method.")
@click.option("--level", type=click.Choice(LEVELS), default=None)
@click.option("--k", type=int, default=None,
              help="Also print the size-k set (the trace always covers all sizes).")
@click.option("--instance", type=int, default=None,
              help="Row index, required at instance level.")
@click.option("--lock", multiple=True, help="Group name(s) that must stay selected.")
@click.option("--exclude", multiple=True, help="Group name(s) that must never appear.")
@click.option("--seed", type=int, default=None,
              help="Seed for the random method (default: config's selection.seed).")
@click.option("--out", type=click.Path(), default=None,
              help="Trace path (default: <report_dir>/trace_<method>_<level>.json).")
def select_cmd(config_path, method, level, k, instance, lock, exclude, seed, out):
    """Run concept-set selection and write the full trace."""
    cfg = load_config(config_path)
    model, dataset = _load_model_and_data(cfg)
    schema = model.schema
    method = method or cfg.selection.method
    level = level or cfg.selection.level
    if k is None:
        k = cfg.selection.k
    locked = _resolve_group_names(schema, lock)
    excluded = _resolve_group_names(schema, exclude)

    available = schema.n_groups - len(excluded)
    if k is not None:
        if not len(locked) <= k <= available:
            raise ConstraintError(
                f"k={k} infeasible: must satisfy {len(locked)} <= k <= {available}")
        if method == "random" and k < 1:
            raise ConstraintError("random selection needs k >= 1")

    request = SelectionRequest(
        method=method, level=level, k=None,
        instance_index=instance if level == "instance" else None,
        locked_in=locked, excluded=excluded,
        seed=seed if seed is not None else cfg.selection.seed,
    )
    trace = select(model, dataset, request)

    out_path = Path(out) if out is not None else (
        cfg.report_dir / f"trace_{method}_{level}.json")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_trace(trace, out_path)
    click.echo(f"wrote {out_path}")
    if k is not None:
        selected = trace.set_at_size(k)
        click.echo(serialize.dumps({
            "k": k,
            "selected": list(selected),
            "selected_names": [schema.groups[g].name for g in selected],
        }))


@cli.command("report")
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--trace", "trace_paths", multiple=True, type=click.Path())
@click.option("--selections", "selection_paths", multiple=True, type=click.Path())
@click.option("--ks", default=None, help="Comma-separated set sizes (default: 1..n).")
@click.option("--split", default="test", show_default=True)
@click.option("--out-dir", type=click.Path(), default=None,
              help="Default: config's report_dir.")
def report_cmd(config_path, trace_paths, selection_paths, ks, split, out_dir):
    """Tabulate accuracy per (method, k) and plot it."""
    if not trace_paths and not selection_paths:
        raise InputError("report needs at least one --trace or --selections file")
    cfg = load_config(config_path)
    model, dataset = _load_model_and_data(cfg)
    fingerprint = model.schema.fingerprint()

    traces = []
    for path in trace_paths:
        trace = load_trace(path)
        if trace.schema_fingerprint not in (None, fingerprint):
            raise InputError(
                f"trace {path} was produced against a different schema")
        traces.append(trace)
    external = [
        (Path(path).name,
         reports.load_selection_file(path, model.schema, dataset.n_rows))
        for path in selection_paths
    ]

    rows = reports.accuracy_table(
        model, dataset, traces, ks=_parse_ks(ks),
        external=external or None, split=split)

    out = Path(out_dir) if out_dir is not None else cfg.report_dir
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path, png_path = (
        out / "report.csv", out / "report.json", out / "accuracy_vs_k.png")
    reports.save_report_csv(rows, csv_path)
    reports.save_report_json(rows, _provenance(cfg, split=split), json_path)
    plotting.accuracy_vs_k_figure(rows, png_path)
    for path in (csv_path, json_path, png_path):
        click.echo(f"wrote {path}")


@cli.command("intervene-sweep")
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--trace", "trace_path", type=click.Path(), required=True)
@click.option("--oracle", type=click.Choice(ORACLES), default="class_level",
              show_default=True)
@click.option("--order", type=click.Choice(ORDERS), default="random", show_default=True)
@click.option("--fix-order", multiple=True,
              help="Group name(s) in intervention order (with --order user).")
@click.option("--ks", default=None,
              help="Comma-separated set sizes (default: every size in the trace).")
@click.option("--seeds", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=None,
              help="Base seed for intervention orders (default: config's selection.seed).")
@click.option("--max-interventions", type=int, default=None)
@click.option("--split", default="test", show_default=True)
@click.option("--out-dir", type=click.Path(), default=None)
def intervene_sweep_cmd(config_path, trace_path, oracle, order, fix_order, ks,
                        seeds, seed, max_interventions, split, out_dir):
    """Sweep accuracy against the number of oracle interventions."""
    cfg = load_config(config_path)
    model, dataset = _load_model_and_data(cfg)
    trace = load_trace(trace_path)
    if trace.schema_fingerprint not in (None, model.schema.fingerprint()):
        raise InputError(f"trace {trace_path} was produced against a different schema")

    indices = None
    if order == "user":
        resolved = []
        for chunk in fix_order:
            for name in chunk.split(","):
                if name.strip():
                    resolved.append(model.schema.group_index(name.strip()))
        indices = tuple(resolved)
    plan = InterventionPlan(
        oracle=oracle, order=order, indices=indices,
        seed=seed if seed is not None else cfg.selection.seed,
        max_interventions=max_interventions,
    )
    k_list = _parse_ks(ks)
    if k_list is None:
        k_list = [k for k in trace.sizes() if k >= 1]

    report = intervention_sweep(model, dataset, trace, k_list, plan, seeds, split)

    out = Path(out_dir) if out_dir is not None else cfg.report_dir
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path, png_path = (
        out / "sweep.csv", out / "sweep.json", out / "sweep.png")
    save_sweep_csv(report, csv_path)
    save_sweep_json(report, json_path,
                    provenance=_provenance(cfg, split=split, sweep_seeds=seeds))
    plotting.sweep_figure(report, png_path)
    for path in (csv_path, json_path, png_path):
        click.echo(f"wrote {path}")


@cli.command("eval-selections")
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--selections", "selection_paths", multiple=True, type=click.Path(),
              required=True)
@click.option("--out-dir", type=click.Path(), default=None)
def eval_selections_cmd(config_path, selection_paths, out_dir):
    """Score externally supplied per-instance concept selections."""
    cfg = load_config(config_path)
    model, dataset = _load_model_and_data(cfg)

    results = []
    for path in selection_paths:
        file_rows = reports.load_selection_file(path, model.schema, dataset.n_rows)
        results.append((Path(path).name,
                        reports.evaluate_selection_rows(model, dataset, file_rows)))

    out = Path(out_dir) if out_dir is not None else cfg.report_dir
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / "eval_selections.csv", out / "eval_selections.json"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("file,k,n_instances,accuracy,stderr,"
                 "mean_entropy_nats,mean_entropy_bits\n")
        for name, rows in results:
            for r in rows:
                fh.write(f"{name},{r['k']},{r['n_instances']},"
                         f"{serialize.format_float(r['accuracy'])},"
                         f"{serialize.format_float(r['stderr'])},"
                         f"{serialize.format_float(r['mean_entropy_nats'])},"
                         f"{serialize.format_float(r['mean_entropy_bits'])}\n")
    serialize.dump_path({
        "format_version": 1,
        "provenance": _provenance(cfg),
        "files": [{"file": name, "rows": rows} for name, rows in results],
    }, json_path)
    click.echo(f"wrote {csv_path}")
    click.echo(f"wrote {json_path}")


@cli.command("serve")
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--host", default=None, help="Default: config's service.host.")
@click.option("--port", type=int, default=None, help="Default: config's service.port.")
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Static bundle to serve at /.")
def serve_cmd(config_path, host, port, ui_dir):
    """Serve the model over JSON/HTTP until terminated."""
    import uvicorn

    cfg = load_config(config_path)
    model, dataset = _load_model_and_data(cfg)
    host = host if host is not None else cfg.host
    port = port if port is not None else cfg.port
    if ui_dir is not None and not Path(ui_dir).is_dir():
        raise InputError(f"--ui-dir is not a directory: {ui_dir}")

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise InputError(f"cannot bind {host}:{port}: {exc}") from None
    finally:
        probe.close()

    app = create_app(model, dataset, ui_dir=ui_dir)
    click.echo(f"serving on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except ScomError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except Exception as exc:  # internal bug: anything not user-addressable
        click.echo(f"internal error: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
