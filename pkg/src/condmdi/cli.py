"""Command-line interface, a thin layer over the core package.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__


def _fail(message: str):
    raise click.ClickException(message)


@click.group()
@click.version_option(__version__, message=f"condmdi {__version__} (python {sys.version.split()[0]})")
def main():
    """Motion in-betweening: train, sample, evaluate, serve."""


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--preset", default=None, type=click.Choice(["paper", "desk"]))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--iterations", default=None, type=int,
              help="Override the preset's iteration count.")
def train(data, preset, seed, out, iterations):
    """Train a denoiser on a corpus directory."""
    from dataclasses import replace

    from .corpus import ingest_corpus, to_training_examples
    from .layout import canonical_layout
    from .presets import get_preset
    from .schedule import cosine_schedule
    from .training import TrainingError, train_loop

    layout = canonical_layout()
    try:
        manifest = ingest_corpus(data, layout)
        p = get_preset(preset, layout.total_width)
        cfg = replace(p.train, seed=seed)
        if iterations is not None:
            cfg = replace(cfg, iterations=iterations)
        examples = to_training_examples(manifest, p.max_frames)
        fps = manifest.sequences[0].fps
        result = train_loop(examples, layout, cosine_schedule(p.num_steps),
                            p.denoiser, cfg, manifest.stats, fps, out)
    except (TrainingError, Exception) as e:
        if isinstance(e, click.ClickException):
            raise
        _fail(str(e))
    click.echo(f"trained {cfg.iterations} iterations in {result.wall_seconds:.1f}s; "
               f"checkpoints: {', '.join(str(x) for x in result.checkpoint_paths)}")


@main.command()
@click.option("--ckpt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--prompt", default=None)
@click.option("--keyframes", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Keyframe JSON document.")
@click.option("--strategy", default="cond", show_default=True)
@click.option("--w", default=2.5, show_default=True, type=float)
@click.option("--wr", default=20.0, show_default=True, type=float)
@click.option("--C", "--c", "stop_step", default=1, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--length", default=None, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def sample(ckpt, prompt, keyframes, strategy, w, wr, stop_step, seed, length, out):
    """Generate one motion sequence and write it as MSEQ1."""
    import numpy as np

    from .checkpoint import load_checkpoint
    from .keyframes import parse_keyframes
    from .masks import ObservationSpec
    from .mseq import write_mseq, write_sidecar
    from .sampling import SamplerConfig, sample_batch

    try:
        loaded = load_checkpoint(ckpt)
        N = loaded.config.max_frames
        length = length or N
        if not 1 <= length <= N:
            _fail(f"length {length} outside [1, {N}]")
        if keyframes:
            doc = json.loads(Path(keyframes).read_text())
            small = parse_keyframes(doc, loaded.layout, length)
            mask = np.zeros((N, loaded.layout.total_width), dtype=np.float32)
            sig = np.zeros_like(mask)
            mask[:length] = small.mask
            sig[:length] = small.signal
            obs = ObservationSpec.from_values(sig, mask)
        else:
            obs = ObservationSpec.none(N, loaded.layout.total_width)
        cfg = SamplerConfig(strategy=strategy, cfg_weight=w,
                            reconstruction_weight=wr, stop_step=stop_step,
                            seed=seed)
        res = sample_batch(cfg, [prompt], [obs], [length], loaded)
        write_mseq(out, res.sequences[0])
        write_sidecar(out, prompt or "", loaded.layout.skeleton.name)
    except click.ClickException:
        raise
    except Exception as e:
        _fail(str(e))
    click.echo(f"wrote {out} ({res.denoiser_evals} denoiser evals, "
               f"{res.wall_ms:.0f} ms)")


@main.command("eval")
@click.option("--ckpt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--scheme", default="randomK=5", show_default=True,
              help="randomK=5 | everyT=20 | root | vr | joint:<name,...>")
@click.option("--strategy", default="cond", show_default=True)
@click.option("--w", default=2.5, show_default=True, type=float)
@click.option("--wr", default=20.0, show_default=True, type=float)
@click.option("--C", "--c", "stop_step", default=1, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--limit", default=None, type=int, help="Evaluate at most this many clips.")
@click.option("--report", required=True, type=click.Path(dir_okay=False))
def eval_cmd(ckpt, data, scheme, strategy, w, wr, stop_step, seed, limit, report):
    """Evaluate a checkpoint over a keyframing scheme; write a JSON report."""
    from .checkpoint import load_checkpoint
    from .corpus import ingest_corpus
    from .evaluation import ToyFeatureExtractor, evaluate_scheme, scheme_from_name
    from .motion import pad_or_trim
    from .sampling import SamplerConfig

    try:
        loaded = load_checkpoint(ckpt)
        manifest = ingest_corpus(data, loaded.layout)
        clips = [(pad_or_trim(s, loaded.config.max_frames), e.prompt)
                 for s, e in zip(manifest.sequences, manifest.entries)]
        if limit:
            clips = clips[:limit]
        cfg = SamplerConfig(strategy=strategy, cfg_weight=w,
                            reconstruction_weight=wr, stop_step=stop_step,
                            seed=seed)
        rep = evaluate_scheme(loaded, clips, scheme_from_name(scheme, loaded.layout),
                              cfg, ToyFeatureExtractor(loaded.layout), seed=seed)
        rep.save(report)
    except click.ClickException:
        raise
    except Exception as e:
        _fail(str(e))
    click.echo(rep.to_json())


@main.command()
@click.option("--to", "target", required=True, type=click.Choice(["global", "relative"]))
@click.argument("src", type=click.Path(exists=True, dir_okay=False))
@click.argument("dst", type=click.Path(dir_okay=False))
def convert(target, src, dst):
    """Convert an MSEQ1 file between root-coordinate conventions."""
    from .layout import canonical_layout
    from .motion import global_to_relative, relative_to_global
    from .mseq import read_mseq, write_mseq

    try:
        seq = read_mseq(src, canonical_layout())
        out = relative_to_global(seq) if target == "global" else global_to_relative(seq)
        write_mseq(dst, out)
    except Exception as e:
        _fail(str(e))
    click.echo(f"wrote {dst}")


@main.command()
@click.option("--ckpt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8077, show_default=True, type=int)
@click.option("--workers", default=None, type=int, help="Sampler worker pool size.")
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False),
              help="Static UI bundle to mount under /ui.")
def serve(ckpt, host, port, workers, ui_dir):
    """Run the HTTP generation service."""
    import uvicorn

    from .service import create_app

    try:
        app = create_app(ckpt, max_workers=workers, ui_dir=ui_dir)
    except Exception as e:
        _fail(str(e))
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command("schedule-dump")
@click.option("--t", "-T", "num_steps", default=1000, show_default=True, type=int)
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Write CSV here instead of stdout.")
def schedule_dump(num_steps, out):
    """Dump the cosine schedule as CSV (t, beta, alpha_bar, sigma)."""
    from .schedule import ScheduleError, cosine_schedule

    try:
        csv_text = cosine_schedule(num_steps).dump_csv()
    except ScheduleError as e:
        _fail(str(e))
    if out:
        Path(out).write_text(csv_text)
        click.echo(f"wrote {out}")
    else:
        click.echo(csv_text, nl=False)


@main.command()
@click.option("--kind", default=None,
              type=click.Choice(["sine-walk", "figure-eight", "jump"]),
              help="Restrict to one clip family (default: mix of all).")
@click.option("--count", default=60, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--frames", default=48, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def synth(kind, count, seed, frames, out):
    """Generate the bundled synthetic corpus."""
    from .corpus import SYNTH_KINDS, synth_corpus

    try:
        kinds = (kind,) if kind else SYNTH_KINDS
        paths = synth_corpus(out, kinds=kinds, count=count, seed=seed,
                             num_frames=frames)
    except Exception as e:
        _fail(str(e))
    click.echo(f"wrote {len(paths)} clips to {out}")


if __name__ == "__main__":
    main()
