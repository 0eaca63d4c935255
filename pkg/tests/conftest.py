import numpy as np
import pytest

from vqlab.clips import Clip, ClipFormat


def make_clip(
    width=64,
    height=32,
    fps=30.0,
    bit_depth=8,
    chroma="420",
    frames=4,
    seed=0,
) -> Clip:
    """Random clip with full-range samples, deterministic in the seed."""
    fmt = ClipFormat(width, height, fps, bit_depth, chroma, frames)
    rng = np.random.default_rng(seed)
    cw, ch = fmt.chroma_size
    y = rng.integers(0, fmt.max_code + 1, size=(frames, height, width), dtype=np.uint16)
    u = rng.integers(0, fmt.max_code + 1, size=(frames, ch, cw), dtype=np.uint16)
    v = rng.integers(0, fmt.max_code + 1, size=(frames, ch, cw), dtype=np.uint16)
    return Clip(fmt, y.astype(fmt.dtype), u.astype(fmt.dtype), v.astype(fmt.dtype))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
