import struct

import numpy as np
import pytest

from coughtriage.demo import make_demo_dataset
from coughtriage.features import DEFAULT_PARAMS
from coughtriage.manifest import load_manifest
from coughtriage.pipeline import extract_feature_table


def make_wav_bytes(samples, sample_rate=16000, bits=16, channels=1,
                   fmt_tag=None, magic=b"RIFF", form=b"WAVE"):
    """Hand-assembled canonical RIFF/WAVE blob (44-byte header + data)."""
    if bits == 16:
        payload = np.asarray(samples, dtype="<i2").tobytes()
        fmt_tag = 1 if fmt_tag is None else fmt_tag
    elif bits == 32:
        payload = np.asarray(samples, dtype="<f4").tobytes()
        fmt_tag = 3 if fmt_tag is None else fmt_tag
    else:
        raise ValueError(bits)
    block_align = channels * bits // 8
    header = b"".join([
        magic,
        struct.pack("<I", 36 + len(payload)),
        form,
        b"fmt ",
        struct.pack("<I", 16),
        struct.pack("<HHIIHH", fmt_tag, channels, sample_rate,
                    sample_rate * block_align, block_align, bits),
        b"data",
        struct.pack("<I", len(payload)),
    ])
    return header + payload


@pytest.fixture(scope="session")
def wav_builder():
    return make_wav_bytes


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    """Bundled 8-patient synthetic demo dataset, generated once per session."""
    root = tmp_path_factory.mktemp("demo")
    make_demo_dataset(root, n_patients=8, coughs_per_patient=5, seed=0)
    return root


@pytest.fixture(scope="session")
def demo_table(demo_dir):
    """Extracted feature table for the demo dataset (shared, read-only)."""
    manifest = load_manifest(demo_dir / "manifest.csv")
    table, failures = extract_feature_table(manifest, DEFAULT_PARAMS)
    assert not failures
    return manifest, table
