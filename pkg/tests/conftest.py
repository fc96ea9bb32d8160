import numpy as np
import pytest
import torch


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion at the end of the run."""
    reports = []
    for status in ("passed", "failed"):
        for rep in terminalreporter.stats.get(status, []):
            if getattr(rep, "when", "call") == "call" and \
                    "test_acceptance" in rep.nodeid:
                reports.append((rep.nodeid.split("::", 1)[1], status.upper()))
    if reports:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, status in sorted(reports):
            terminalreporter.write_line(f"{status:6s} {name}")

from condmdi.checkpoint import load_checkpoint
from condmdi.corpus import ingest_corpus, synth_corpus, to_training_examples
from condmdi.denoiser import DenoiserConfig
from condmdi.layout import canonical_layout
from condmdi.motion import Convention, MotionSequence
from condmdi.schedule import cosine_schedule
from condmdi.training import TrainConfig, train_loop

torch.set_num_threads(1)


@pytest.fixture(scope="session")
def layout():
    return canonical_layout()


def random_relative(layout, rng, num_frames=32, valid=None, scale=0.3):
    """Random relative-root sequence; the last valid frame's root-delta
    channels are zero (a frame has no successor)."""
    valid = valid or num_frames
    data = np.zeros((num_frames, layout.total_width), dtype=np.float32)
    data[:valid] = rng.normal(0.0, scale, (valid, layout.total_width))
    data[valid - 1, 0:3] = 0.0
    return MotionSequence(data=data, fps=20.0, valid_length=valid,
                          convention=Convention.RELATIVE_ROOT, layout=layout)


def random_global(layout, rng, num_frames=32, valid=None, scale=0.3):
    valid = valid or num_frames
    data = np.zeros((num_frames, layout.total_width), dtype=np.float32)
    data[:valid] = rng.normal(0.0, scale, (valid, layout.total_width))
    return MotionSequence(data=data, fps=20.0, valid_length=valid,
                          convention=Convention.GLOBAL_ROOT, layout=layout)


TINY_FRAMES = 16


@pytest.fixture(scope="session")
def tiny_denoiser_config(layout):
    return DenoiserConfig(feature_width=layout.total_width, base_channels=16,
                          channel_multipliers=(2,), groups=4, embed_width=16,
                          max_frames=TINY_FRAMES, kernel_size=3)


@pytest.fixture(scope="session")
def tiny_corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("tiny_corpus")
    synth_corpus(d, count=12, seed=21, num_frames=TINY_FRAMES, min_valid=10)
    return d


@pytest.fixture(scope="session")
def tiny_checkpoint(tiny_corpus_dir, tiny_denoiser_config, layout,
                    tmp_path_factory):
    """A briefly trained masked-input model for wiring-level tests."""
    out = tmp_path_factory.mktemp("tiny_run")
    manifest = ingest_corpus(tiny_corpus_dir, layout)
    examples = to_training_examples(manifest, TINY_FRAMES)
    schedule = cosine_schedule(20)
    cfg = TrainConfig(iterations=20, batch_size=4, seed=3, checkpoint_interval=0)
    result = train_loop(examples, layout, schedule, tiny_denoiser_config, cfg,
                        manifest.stats, 20.0, out)
    return load_checkpoint(result.checkpoint_paths[-1])


@pytest.fixture(scope="session")
def tiny_plain_checkpoint(tiny_corpus_dir, tiny_denoiser_config, layout,
                          tmp_path_factory):
    """Same corpus, plain-input (no mask channels) model."""
    from dataclasses import replace

    out = tmp_path_factory.mktemp("tiny_plain_run")
    manifest = ingest_corpus(tiny_corpus_dir, layout)
    examples = to_training_examples(manifest, TINY_FRAMES)
    schedule = cosine_schedule(20)
    cfg = TrainConfig(iterations=20, batch_size=4, seed=3, checkpoint_interval=0)
    dcfg = replace(tiny_denoiser_config, input_mode="plain")
    result = train_loop(examples, layout, schedule, dcfg, cfg,
                        manifest.stats, 20.0, out)
    return load_checkpoint(result.checkpoint_paths[-1])
