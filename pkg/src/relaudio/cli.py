"""Command line entry points.

Training, feature extraction, and report generation run locally; the
analysis endpoints are served by `relaudio serve` and reachable through
the `relaudio client` group, which is a thin wrapper over the HTTP API.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import httpx
import numpy as np

from . import client as client_mod
from .data import (SyntheticSpec, generate_synthetic, load_dataset, load_manifest,
                   save_dataset)
from .experts import ExpertConfig, TrainConfig, train_expert
from .features import (log_compress, mel_spectrogram, pad_center, read_wav, resample,
                       save_features, load_features)
from .fusion import FusionClassifier, FusionMode, experiment_report
from .modelio import (load_convnet, load_expert_directory, load_relnet,
                      save_convnet, save_expert, save_relnet)
from .plots import plot_profiles
from .relevance import ExpertSet, export_profile, read_profile, relevance_profile
from .relnet import train_convnet, train_relnet


@click.group(context_settings={"auto_envvar_prefix": "RELAUDIO"})
def main():
    """Segment-relevance toolkit for weakly-labelled audio."""


@main.command()
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--classes", default=4, show_default=True)
@click.option("--bags", default=50, show_default=True, help="bags per class")
@click.option("--segments", default=20, show_default=True, help="segments per bag")
@click.option("--events", default=2, show_default=True, help="event segments per bag")
@click.option("--noise", default=0.3, show_default=True)
@click.option("--seed", default=0, show_default=True)
def synth(out, classes, bags, segments, events, noise, seed):
    """Generate the synthetic event dataset with ground-truth masks."""
    spec = SyntheticSpec(num_classes=classes, bags_per_class=bags,
                         segments_per_bag=segments, events_per_bag=events,
                         noise_level=noise, seed=seed)
    dataset = generate_synthetic(spec)
    save_dataset(dataset, spec.class_names, out)
    click.echo(f"wrote {len(dataset)} bags to {out}")


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--audio-root", type=click.Path(path_type=Path), default=Path("."),
              show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--pad-to", type=int, default=None,
              help="optionally pad every clip to this many frames")
def features(manifest_path, audio_root, out, pad_to):
    """Extract log-compressed Mel features from the WAV clips in a manifest."""
    manifest = load_manifest(manifest_path)
    out.mkdir(parents=True, exist_ok=True)
    for record in manifest.records:
        clip = resample(read_wav(audio_root / record.path))
        spec = log_compress(mel_spectrogram(clip))
        if pad_to is not None:
            spec = pad_center(spec, pad_to)
        save_features(spec, out / f"{Path(record.path).stem}.mel")
    click.echo(f"extracted features for {len(manifest.records)} clips into {out}")


def _train_options(fn):
    fn = click.option("--batch-size", default=100, show_default=True)(fn)
    fn = click.option("--patience", default=50, show_default=True)(fn)
    fn = click.option("--min-delta", default=0.05, show_default=True)(fn)
    fn = click.option("--max-epochs", default=1000, show_default=True)(fn)
    fn = click.option("--seed", default=0, show_default=True)(fn)
    fn = click.option("--pad-to", type=int, default=None,
                      help="train on clips zero-padded to this frame count")(fn)
    return fn


@main.command("train-experts")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--hidden-units", default=100, show_default=True)
@_train_options
def train_experts(data, out, hidden_units, batch_size, patience, min_delta,
                  max_epochs, seed, pad_to):
    """Train one one-vs-all expert per class in the dataset."""
    bags, class_names = load_dataset(data)
    out.mkdir(parents=True, exist_ok=True)
    train_config = TrainConfig(batch_size=batch_size, patience=patience,
                               min_delta=min_delta, max_epochs=max_epochs, seed=seed)
    for class_id, name in enumerate(class_names):
        config = ExpertConfig(hidden_units=hidden_units, seed=seed + class_id)
        model = train_expert(bags, class_id, config, train_config,
                             class_name=name, pad_to=pad_to)
        path = out / f"{name}.expert"
        save_expert(model, path)
        click.echo(f"{name}: best epoch {model.metadata.best_epoch} "
                   f"(val loss {model.metadata.best_val_loss:.4f}) -> {path}")


@main.command("train-relnet")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--experts", "experts_dir", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@_train_options
def train_relnet_cmd(data, experts_dir, out, batch_size, patience, min_delta,
                     max_epochs, seed, pad_to):
    """Stage-2: train the classifier branch against frozen experts."""
    bags, _ = load_dataset(data)
    by_checksum = load_expert_directory(experts_dir)
    entries = sorted(by_checksum.items(), key=lambda kv: kv[1].class_id)
    experts = ExpertSet([model for _, model in entries])
    checksums = {model.class_id: checksum for checksum, model in entries}
    train_config = TrainConfig(batch_size=batch_size, patience=patience,
                               min_delta=min_delta, max_epochs=max_epochs, seed=seed)
    model = train_relnet(bags, experts, train_config, pad_to=pad_to)
    save_relnet(model, out, checksums)
    click.echo(f"relnet: best epoch {model.metadata.best_epoch} "
               f"(val loss {model.metadata.best_val_loss:.4f}) -> {out}")


@main.command("train-convnet")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--hidden-units", default=100, show_default=True)
@_train_options
def train_convnet_cmd(data, out, hidden_units, batch_size, patience, min_delta,
                      max_epochs, seed, pad_to):
    """Train the unweighted baseline classifier."""
    bags, class_names = load_dataset(data)
    train_config = TrainConfig(batch_size=batch_size, patience=patience,
                               min_delta=min_delta, max_epochs=max_epochs, seed=seed)
    model = train_convnet(bags, class_names, ExpertConfig(hidden_units=hidden_units),
                          train_config, pad_to=pad_to)
    save_convnet(model, out)
    click.echo(f"convnet: best epoch {model.metadata.best_epoch} "
               f"(val loss {model.metadata.best_val_loss:.4f}) -> {out}")


@main.command()
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--models", "models_dir", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--pad-to", default=300, show_default=True)
@click.option("--metric", type=click.Choice(["map", "recall"]), default="map",
              show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--report", "report_path", type=click.Path(path_type=Path), default=None)
def evaluate(data, models_dir, pad_to, metric, seed, report_path):
    """Evaluate all trained models, padded and unpadded, on a dataset."""
    bags, class_names = load_dataset(data)
    by_checksum = load_expert_directory(models_dir)
    models = {}
    if len(by_checksum) >= 2:
        entries = sorted(by_checksum.values(), key=lambda m: m.class_id)
        experts = ExpertSet(entries)
        for mode in FusionMode:
            models[mode.value] = FusionClassifier(experts, mode)
    for file in sorted(Path(models_dir).glob("*.relnet")):
        models[f"RELNET:{file.stem}"] = load_relnet(file, by_checksum)
    for file in sorted(Path(models_dir).glob("*.convnet")):
        models[f"CONVNET:{file.stem}"] = load_convnet(file)
    if not models:
        raise click.ClickException(f"no usable models found in {models_dir}")
    report = experiment_report(bags, models, pad_to=pad_to, seed=seed, metric=metric,
                               config={"data": str(data), "models_dir": str(models_dir)})
    click.echo(report.table())
    if report_path is not None:
        report.save(report_path)
        click.echo(f"report written to {report_path}")


@main.command()
@click.argument("features_file", type=click.Path(exists=True, path_type=Path))
@click.argument("expert_files", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--literal", is_flag=True,
              help="apply the entropy to raw columns without normalization")
@click.option("--plot", "plot_path", type=click.Path(path_type=Path), default=None)
def relevance(features_file, expert_files, out, literal, plot_path):
    """Export a relevance profile for one clip under a chosen expert set."""
    from .modelio import load_expert
    spec = load_features(features_file)
    experts = ExpertSet([load_expert(f) for f in expert_files])
    profile = relevance_profile(spec, experts, literal=literal)
    export_profile(profile, out)
    click.echo(f"profile with {len(profile.r_max)} segments -> {out}")
    if plot_path is not None:
        plot_profiles([read_profile(out)], labels=[out.stem],
                      spectrogram=spec, out_path=plot_path)
        click.echo(f"plot -> {plot_path}")


@main.command()
@click.argument("profiles", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--spectrogram", "spectrogram_file",
              type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--title", default=None)
def plot(profiles, out, spectrogram_file, title):
    """Render one or more exported profiles to SVG or PNG."""
    spec = load_features(spectrogram_file) if spectrogram_file else None
    plot_profiles([read_profile(p) for p in profiles],
                  labels=[Path(p).stem for p in profiles],
                  spectrogram=spec, title=title, out_path=out)
    click.echo(f"plot -> {out}")


@main.command()
@click.option("--models-dir", type=click.Path(exists=True, path_type=Path),
              required=True, envvar="RELAUDIO_MODELS_DIR")
@click.option("--features-dir", type=click.Path(exists=True, path_type=Path),
              required=True, envvar="RELAUDIO_FEATURES_DIR")
@click.option("--manifest", "manifest_path", type=click.Path(path_type=Path),
              default=None, envvar="RELAUDIO_MANIFEST")
@click.option("--port", default=8000, show_default=True, envvar="RELAUDIO_PORT")
@click.option("--host", default="127.0.0.1", show_default=True, envvar="RELAUDIO_HOST")
def serve(models_dir, features_dir, manifest_path, port, host):
    """Start the read-only analysis service."""
    import uvicorn

    from .service import create_app

    app = create_app(models_dir, features_dir, manifest_path)
    click.echo(f"serving {len(app.state.catalog.clips)} clips, "
               f"{len(app.state.catalog.experts)} experts on {host}:{port}")
    uvicorn.run(app, host=host, port=port)


@main.group()
@click.option("--server", default="http://127.0.0.1:8000", show_default=True)
@click.pass_context
def client(ctx, server):
    """Query a running analysis service."""
    ctx.obj = httpx.Client(base_url=server, timeout=30.0)


@client.command("experts")
@click.pass_obj
def client_experts(http):
    for e in client_mod.list_experts(http):
        click.echo(f"{e['id']:<24} class={e['class_name']} "
                   f"best_epoch={e['best_epoch']}")


@client.command("clips")
@click.pass_obj
def client_clips(http):
    for c in client_mod.list_clips(http):
        click.echo(f"{c['id']:<24} label={c['label']} "
                   f"duration={c['duration_seconds']:.2f}s")


@client.command("relevance")
@click.argument("clip_id")
@click.argument("expert_ids", nargs=-1, required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@click.pass_obj
def client_relevance(http, clip_id, expert_ids, out):
    body = client_mod.compute_relevance(http, clip_id, list(expert_ids))
    lines = ["segment,start_seconds,r_max,top_expert"]
    lines += [f"{s['index']},{s['start_seconds']:.6f},{s['r_max']:.8f},{s['top_expert']}"
              for s in body["segments"]]
    text = "\n".join(lines) + "\n"
    if out is not None:
        out.write_text(text)
        click.echo(f"profile -> {out}")
    else:
        click.echo(text, nl=False)


@client.command("classify")
@click.argument("clip_id")
@click.option("--relnet", "relnet_id", default=None)
@click.option("--fusion", "fusion_mode", default=None,
              type=click.Choice([m.value for m in FusionMode]))
@click.option("--experts", "expert_ids", multiple=True)
@click.pass_obj
def client_classify(http, clip_id, relnet_id, fusion_mode, expert_ids):
    body = client_mod.classify(http, clip_id, relnet_id, fusion_mode,
                               list(expert_ids))
    click.echo(f"model: {body['model']}")
    for r in body["ranking"]:
        click.echo(f"  {r['class_name']:<16} {r['score']:.6f}")
    click.echo("top3: " + ", ".join(body["top3"]))


if __name__ == "__main__":
    sys.exit(main())
