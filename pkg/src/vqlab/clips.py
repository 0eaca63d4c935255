"""Raw planar YUV clips and the signal operators applied to them.

A clip is a stack of planar YUV frames held in numpy arrays. Files on disk
are frame-sequential Y, U, V planes (the common raw .yuv layout) described
by a JSON sidecar. 10-bit samples occupy the low bits of 16-bit
little-endian words.

The operators here are the building blocks of a space-time subsampling
pipeline: center-crop / chroma conformance, separable Lanczos spatial
resampling, frame-drop temporal halving and linear-interpolation temporal
doubling. All of them are pure functions: identical inputs produce
bit-identical outputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import CorruptInputError, FormatError, UnsupportedRatioError

CHROMA_420 = "420"
CHROMA_422 = "422"

_SUPPORTED_BIT_DEPTHS = (8, 10)
_SUPPORTED_CHROMA = (CHROMA_420, CHROMA_422)


@dataclass(frozen=True)
class ClipFormat:
    """Geometry and sampling description of a raw clip."""

    width: int
    height: int
    fps: float
    bit_depth: int
    chroma: str
    frame_count: int

    def __post_init__(self):
        if self.width % 2 or self.height % 2:
            raise FormatError(f"dimensions must be even, got {self.width}x{self.height}")
        if self.bit_depth not in _SUPPORTED_BIT_DEPTHS:
            raise FormatError(f"unsupported bit depth {self.bit_depth}")
        if self.chroma not in _SUPPORTED_CHROMA:
            raise FormatError(f"unsupported chroma scheme {self.chroma!r}")
        if self.frame_count < 1:
            raise FormatError("frame_count must be >= 1")
        if self.fps <= 0:
            raise FormatError("fps must be positive")

    @property
    def max_code(self) -> int:
        return (1 << self.bit_depth) - 1

    @property
    def dtype(self) -> np.dtype:
        return np.dtype("<u2") if self.bit_depth > 8 else np.dtype("u1")

    @property
    def chroma_size(self) -> tuple[int, int]:
        """(width, height) of one chroma plane."""
        if self.chroma == CHROMA_420:
            return self.width // 2, self.height // 2
        return self.width // 2, self.height

    @property
    def bytes_per_frame(self) -> int:
        cw, ch = self.chroma_size
        samples = self.width * self.height + 2 * cw * ch
        return samples * self.dtype.itemsize

    @property
    def duration(self) -> float:
        return self.frame_count / self.fps

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "fps": self.fps,
            "bit_depth": self.bit_depth,
            "chroma": self.chroma,
            "frame_count": self.frame_count,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ClipFormat":
        try:
            return cls(
                width=int(obj["width"]),
                height=int(obj["height"]),
                fps=float(obj["fps"]),
                bit_depth=int(obj["bit_depth"]),
                chroma=str(obj["chroma"]),
                frame_count=int(obj["frame_count"]),
            )
        except KeyError as exc:
            raise FormatError(f"sidecar missing field {exc}") from exc


@dataclass(frozen=True)
class Clip:
    """Planar video: luma ``y`` is (frames, H, W), chroma ``u``/``v`` follow the sampling scheme."""

    format: ClipFormat
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        f = self.format
        cw, ch = f.chroma_size
        if self.y.shape != (f.frame_count, f.height, f.width):
            raise FormatError(f"luma shape {self.y.shape} inconsistent with format")
        for name, plane in (("u", self.u), ("v", self.v)):
            if plane.shape != (f.frame_count, ch, cw):
                raise FormatError(f"chroma plane {name} shape {plane.shape} inconsistent with format")
        for plane in (self.y, self.u, self.v):
            if plane.dtype != f.dtype:
                raise FormatError(f"plane dtype {plane.dtype} does not match bit depth {f.bit_depth}")
            if plane.size and int(plane.max()) > f.max_code:
                raise FormatError(f"sample value {int(plane.max())} exceeds {f.bit_depth}-bit range")

    def planes(self):
        return self.y, self.u, self.v


def blank_clip(fmt: ClipFormat, luma: int = 0, chroma: int | None = None) -> Clip:
    """Uniform clip, chroma defaulting to the mid code (achromatic)."""
    if chroma is None:
        chroma = 1 << (fmt.bit_depth - 1)
    cw, ch = fmt.chroma_size
    y = np.full((fmt.frame_count, fmt.height, fmt.width), luma, dtype=fmt.dtype)
    u = np.full((fmt.frame_count, ch, cw), chroma, dtype=fmt.dtype)
    v = np.full((fmt.frame_count, ch, cw), chroma, dtype=fmt.dtype)
    return Clip(fmt, y, u, v)


def read_sidecar(path: str | Path) -> ClipFormat:
    with open(path) as fh:
        return ClipFormat.from_json(json.load(fh))


def read_clip(path: str | Path, sidecar: str | Path | ClipFormat) -> Clip:
    """Read a raw planar YUV file described by a JSON sidecar (or explicit format)."""
    fmt = sidecar if isinstance(sidecar, ClipFormat) else read_sidecar(sidecar)
    expected = fmt.bytes_per_frame * fmt.frame_count
    actual = Path(path).stat().st_size
    if actual != expected:
        raise CorruptInputError(
            f"{path}: expected {expected} bytes "
            f"({fmt.frame_count} frames x {fmt.bytes_per_frame} B), found {actual}"
        )
    data = np.fromfile(path, dtype=fmt.dtype)
    cw, ch = fmt.chroma_size
    ysz = fmt.width * fmt.height
    csz = cw * ch
    per_frame = data.reshape(fmt.frame_count, ysz + 2 * csz)
    y = per_frame[:, :ysz].reshape(fmt.frame_count, fmt.height, fmt.width)
    u = per_frame[:, ysz : ysz + csz].reshape(fmt.frame_count, ch, cw)
    v = per_frame[:, ysz + csz :].reshape(fmt.frame_count, ch, cw)
    if int(per_frame.max()) > fmt.max_code:
        raise CorruptInputError(
            f"{path}: sample value {int(per_frame.max())} exceeds {fmt.bit_depth}-bit range"
        )
    return Clip(fmt, y.copy(), u.copy(), v.copy())


def write_clip(clip: Clip, path: str | Path, sidecar: str | Path | None = None) -> None:
    """Write frame-sequential Y,U,V planes; optionally emit the JSON sidecar."""
    with open(path, "wb") as fh:
        for t in range(clip.format.frame_count):
            fh.write(clip.y[t].tobytes())
            fh.write(clip.u[t].tobytes())
            fh.write(clip.v[t].tobytes())
    if sidecar is not None:
        with open(sidecar, "w") as fh:
            json.dump(clip.format.to_json(), fh, indent=2)
            fh.write("\n")


def _avg_rows(plane: np.ndarray) -> np.ndarray:
    # vertical 2-tap mean with round-half-up, in a wide dtype
    a = plane[:, 0::2, :].astype(np.uint32)
    b = plane[:, 1::2, :].astype(np.uint32)
    return ((a + b + 1) >> 1).astype(plane.dtype)


def conform_source(clip: Clip, target: ClipFormat) -> Clip:
    """Center-crop to the target raster and convert 4:2:2 chroma to 4:2:0.

    Bit depth, frame rate and frame count are never altered here; crop
    offsets are forced even so chroma planes stay aligned.
    """
    src = clip.format
    if target.width > src.width or target.height > src.height:
        raise FormatError(
            f"conformance cannot upscale {src.width}x{src.height} to {target.width}x{target.height}"
        )
    if target.bit_depth != src.bit_depth:
        raise FormatError("conformance does not change bit depth")
    if target.frame_count != src.frame_count or target.fps != src.fps:
        raise FormatError("conformance does not change frame rate or frame count")
    if target.chroma != CHROMA_420:
        raise FormatError("conformance target must be 4:2:0")

    if src == target:
        return clip

    ox = ((src.width - target.width) // 2) & ~1
    oy = ((src.height - target.height) // 2) & ~1
    y = clip.y[:, oy : oy + target.height, ox : ox + target.width]

    cx = ox // 2
    if src.chroma == CHROMA_420:
        cy = oy // 2
        cw, ch = target.chroma_size
        u = clip.u[:, cy : cy + ch, cx : cx + cw]
        v = clip.v[:, cy : cy + ch, cx : cx + cw]
    else:
        cw, _ = target.chroma_size
        u = _avg_rows(clip.u[:, oy : oy + target.height, cx : cx + cw])
        v = _avg_rows(clip.v[:, oy : oy + target.height, cx : cx + cw])
    return Clip(target, np.ascontiguousarray(y), np.ascontiguousarray(u), np.ascontiguousarray(v))


@dataclass(frozen=True)
class ResampleSpec:
    """Spatial resampling target; ``kernel_taps`` is the Lanczos lobe count."""

    target_width: int
    target_height: int
    kernel_taps: int = 3

    def __post_init__(self):
        if self.target_width < 16 or self.target_height < 16:
            raise FormatError("resample targets must be >= 16 px")
        if self.target_width % 2 or self.target_height % 2:
            raise FormatError("resample targets must be even")
        if self.kernel_taps < 2:
            raise FormatError("kernel_taps must be >= 2")


def lanczos_matrix(src: int, dst: int, a: int) -> np.ndarray:
    """Dense (dst, src) resampling matrix for one axis.

    Output pixel centers are mapped into source coordinates with half-pixel
    alignment. When downscaling, the kernel is widened by the scale factor
    (anti-aliasing); edges are handled by clamping source indices. Every row
    sums to exactly 1, so constant signals are preserved.
    """
    scale = src / dst
    fscale = max(scale, 1.0)
    support = a * fscale
    mat = np.zeros((dst, src))
    for i in range(dst):
        center = (i + 0.5) * scale - 0.5
        lo = int(math.floor(center - support)) + 1
        hi = int(math.floor(center + support))
        taps = np.arange(lo, hi + 1)
        t = (center - taps) / fscale
        w = np.sinc(t) * np.sinc(t / a)
        w /= w.sum()
        np.add.at(mat[i], np.clip(taps, 0, src - 1), w)
    return mat


def resize_lanczos(clip: Clip, spec: ResampleSpec) -> Clip:
    """Separable Lanczos resampling of every plane of every frame.

    Chroma planes are scaled by the same ratio as luma. Arithmetic runs in
    float64 across both axes and is rounded (half-up) once at the end, then
    clamped to the code range.
    """
    src = clip.format
    a = spec.kernel_taps
    dst = ClipFormat(
        width=spec.target_width,
        height=spec.target_height,
        fps=src.fps,
        bit_depth=src.bit_depth,
        chroma=src.chroma,
        frame_count=src.frame_count,
    )
    if (dst.width, dst.height) == (src.width, src.height):
        return clip

    def _resize_plane(stack: np.ndarray, sw: int, sh: int, tw: int, th: int) -> np.ndarray:
        wh = lanczos_matrix(sw, tw, a)
        wv = lanczos_matrix(sh, th, a)
        out = np.empty((stack.shape[0], th, tw))
        for t in range(stack.shape[0]):
            out[t] = wv @ stack[t].astype(np.float64) @ wh.T
        out = np.clip(np.floor(out + 0.5), 0, src.max_code)
        return out.astype(src.dtype)

    scw, sch = src.chroma_size
    dcw, dch = dst.chroma_size
    y = _resize_plane(clip.y, src.width, src.height, dst.width, dst.height)
    u = _resize_plane(clip.u, scw, sch, dcw, dch)
    v = _resize_plane(clip.v, scw, sch, dcw, dch)
    return Clip(dst, y, u, v)


def temporal_downsample(clip: Clip) -> Clip:
    """Keep even-indexed frames and halve the frame rate; pixels untouched."""
    if clip.format.frame_count < 2:
        raise FormatError("temporal downsampling needs at least 2 frames")
    y = np.ascontiguousarray(clip.y[0::2])
    u = np.ascontiguousarray(clip.u[0::2])
    v = np.ascontiguousarray(clip.v[0::2])
    fmt = replace(clip.format, fps=clip.format.fps / 2, frame_count=y.shape[0])
    return Clip(fmt, y, u, v)


def _interleave_lfi(stack: np.ndarray) -> np.ndarray:
    n = stack.shape[0]
    out = np.empty((2 * n,) + stack.shape[1:], dtype=stack.dtype)
    out[0::2] = stack
    wide = stack.astype(np.uint32)
    out[1:-1:2] = ((wide[:-1] + wide[1:] + 1) >> 1).astype(stack.dtype)
    out[-1] = stack[-1]
    return out


def temporal_upsample_lfi(clip: Clip, target_fps: float) -> Clip:
    """Double the frame rate by pixelwise linear blending of adjacent frames.

    Output frame 2k is input frame k; frame 2k+1 is the rounded (half-up)
    mean of input frames k and k+1. The last frame is repeated so the
    doubled clip keeps the source duration.
    """
    if abs(target_fps - 2 * clip.format.fps) > 1e-9:
        raise UnsupportedRatioError(
            f"only exact frame-rate doubling is supported ({clip.format.fps} -> {target_fps})"
        )
    y = _interleave_lfi(clip.y)
    u = _interleave_lfi(clip.u)
    v = _interleave_lfi(clip.v)
    fmt = replace(clip.format, fps=target_fps, frame_count=y.shape[0])
    return Clip(fmt, y, u, v)
