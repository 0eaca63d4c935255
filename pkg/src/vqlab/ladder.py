"""Per-content target bitrates and QP selection across space-time configurations.

A content is probed over a set of (spatial, temporal) configurations and
QP values, five target bitrates are spread geometrically over the
attainable range, and per configuration the QP closest to each target is
chosen. Stimuli are then rendered through the full chain:

    spatial downsample -> temporal downsample -> encode/decode
    -> temporal LFI upsample -> spatial Lanczos upsample

so every rendered stimulus is back at the display format.

Encoding is pluggable: a synthetic codec (exponential rate model plus
additive Gaussian noise, fully deterministic) for desk-scale experiments,
or an external encoder command template with the intra period pinned to
one second.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clips import Clip, ClipFormat, ResampleSpec, read_clip, resize_lanczos, temporal_downsample, temporal_upsample_lfi, write_clip
from .errors import DegenerateDataError, EncoderFailureError, FormatError

SPATIAL_DIVISORS = {"2160p": 1, "1080p": 2, "720p": 3, "540p": 4}
TEMPORAL_MODES = ("full", "half")

QP_MIN, QP_MAX = 0, 51
LADDER_LEVELS = 5


def _even(x: float) -> int:
    return max(2, int(x) // 2 * 2)


@dataclass(frozen=True)
class SpaceTimeConfig:
    spatial: str
    temporal: str

    def __post_init__(self):
        if self.spatial not in SPATIAL_DIVISORS:
            raise FormatError(f"unknown spatial level {self.spatial!r}")
        if self.temporal not in TEMPORAL_MODES:
            raise FormatError(f"unknown temporal mode {self.temporal!r}")

    @property
    def label(self) -> str:
        return f"{self.spatial}/{self.temporal}"

    @property
    def is_full_resolution(self) -> bool:
        return self.spatial == "2160p" and self.temporal == "full"

    def scaled_size(self, base_width: int, base_height: int) -> tuple[int, int]:
        """Subsampled raster for this config; dimensions floored to even."""
        d = SPATIAL_DIVISORS[self.spatial]
        return _even(base_width / d), _even(base_height / d)

    def pixel_rate(self, fmt: ClipFormat) -> float:
        w, h = self.scaled_size(fmt.width, fmt.height)
        fps = fmt.fps / 2 if self.temporal == "half" else fmt.fps
        return w * h * fps


ALL_CONFIGS = tuple(
    SpaceTimeConfig(s, t) for t in TEMPORAL_MODES for s in SPATIAL_DIVISORS
)
SPATIAL_ONLY_CONFIGS = tuple(c for c in ALL_CONFIGS if c.temporal == "full")


@dataclass(frozen=True)
class StimulusSpec:
    """Recipe for one rendered video."""

    stimulus_id: str
    content: str
    config: SpaceTimeConfig
    qp: int | None = None
    target_level: int | None = None
    is_reference: bool = False


@dataclass(frozen=True)
class RDSample:
    config: SpaceTimeConfig
    qp: int
    bitrate: float

    def __post_init__(self):
        if not QP_MIN <= self.qp <= QP_MAX:
            raise ValueError(f"qp {self.qp} outside [{QP_MIN}, {QP_MAX}]")
        if self.bitrate <= 0:
            raise ValueError("bitrate must be positive")


@dataclass(frozen=True)
class LadderSpec:
    content: str
    targets: tuple[float, float, float, float, float]  # strictly decreasing, level 1..5
    selections: dict = field(default_factory=dict)  # (level, config.label) -> RDSample


def _stable_seed(*parts) -> int:
    return zlib.crc32("|".join(str(p) for p in parts).encode())


class SyntheticCodec:
    """Deterministic stand-in for a real encoder.

    Rate model: bitrate halves every ``rate_halving_qp`` steps of QP and
    scales linearly with pixel rate relative to ``ref_pixel_rate`` (when
    given). Distortion model: additive zero-mean Gaussian noise whose
    standard deviation doubles every ``sigma_doubling_qp`` QP steps.
    """

    def __init__(
        self,
        r0_bps: float,
        qp0: int = 29,
        rate_halving_qp: float = 6.0,
        sigma0: float = 4.0,
        sigma_doubling_qp: float = 6.0,
        ref_pixel_rate: float | None = None,
    ):
        if rate_halving_qp <= 0 or sigma_doubling_qp <= 0:
            raise ValueError("halving/doubling constants must be positive")
        self.r0_bps = float(r0_bps)
        self.qp0 = int(qp0)
        self.rate_halving_qp = float(rate_halving_qp)
        self.sigma0 = float(sigma0)
        self.sigma_doubling_qp = float(sigma_doubling_qp)
        self.ref_pixel_rate = ref_pixel_rate

    def bitrate(self, fmt: ClipFormat, qp: int) -> float:
        scale = 1.0
        if self.ref_pixel_rate:
            scale = (fmt.width * fmt.height * fmt.fps) / self.ref_pixel_rate
        return self.r0_bps * scale * 2.0 ** (-(qp - self.qp0) / self.rate_halving_qp)

    def noise_sigma(self, qp: int) -> float:
        return self.sigma0 * 2.0 ** ((qp - self.qp0) / self.sigma_doubling_qp)

    def measure_bitrate(self, clip: Clip, qp: int) -> float:
        return self.bitrate(clip.format, qp)

    def encode(self, clip: Clip, qp: int, seed_tag: str = "") -> tuple[Clip, float]:
        sigma = self.noise_sigma(qp)
        rng = np.random.default_rng(_stable_seed("synthetic-codec", seed_tag, qp))
        fmt = clip.format

        def _noisy(plane: np.ndarray) -> np.ndarray:
            noise = rng.normal(0.0, sigma, size=plane.shape)
            out = np.clip(np.floor(plane.astype(np.float64) + noise + 0.5), 0, fmt.max_code)
            return out.astype(fmt.dtype)

        decoded = Clip(fmt, _noisy(clip.y), _noisy(clip.u), _noisy(clip.v))
        return decoded, self.bitrate(fmt, qp)


class CommandCodec:
    """External encoder/decoder driven by command templates.

    Templates receive ``{input}``, ``{output}``, ``{qp}``, ``{width}``,
    ``{height}``, ``{fps}`` and ``{intra_period}``; the intra period is
    pinned to one second of frames.
    """

    def __init__(self, encode_template: str, decode_template: str | None = None):
        self.encode_template = encode_template
        self.decode_template = decode_template

    def _run(self, template: str, **fields) -> None:
        cmd = [part.format(**fields) for part in shlex.split(template)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise EncoderFailureError(
                f"command {cmd[0]!r} exited {proc.returncode}",
                diagnostics=proc.stderr,
            )

    def _encode_file(self, clip: Clip, qp: int, workdir: Path) -> Path:
        raw = workdir / "in.yuv"
        write_clip(clip, raw)
        bitstream = workdir / "out.bin"
        fmt = clip.format
        self._run(
            self.encode_template,
            input=raw,
            output=bitstream,
            qp=qp,
            width=fmt.width,
            height=fmt.height,
            fps=fmt.fps,
            intra_period=max(1, round(fmt.fps)),
        )
        if not bitstream.exists():
            raise EncoderFailureError("encoder produced no output file")
        return bitstream

    def measure_bitrate(self, clip: Clip, qp: int) -> float:
        with tempfile.TemporaryDirectory() as tmp:
            bitstream = self._encode_file(clip, qp, Path(tmp))
            return bitstream.stat().st_size * 8.0 / clip.format.duration

    def encode(self, clip: Clip, qp: int, seed_tag: str = "") -> tuple[Clip, float]:
        if self.decode_template is None:
            raise EncoderFailureError("no decode template configured")
        with tempfile.TemporaryDirectory() as tmp:
            workdir = Path(tmp)
            bitstream = self._encode_file(clip, qp, workdir)
            bitrate = bitstream.stat().st_size * 8.0 / clip.format.duration
            decoded_raw = workdir / "dec.yuv"
            self._run(self.decode_template, input=bitstream, output=decoded_raw)
            decoded = read_clip(decoded_raw, clip.format)
            return decoded, bitrate


def subsample_for_config(clip: Clip, config: SpaceTimeConfig, kernel_taps: int = 3) -> Clip:
    out = clip
    w, h = config.scaled_size(clip.format.width, clip.format.height)
    if (w, h) != (clip.format.width, clip.format.height):
        out = resize_lanczos(out, ResampleSpec(w, h, kernel_taps))
    if config.temporal == "half":
        out = temporal_downsample(out)
    return out


def probe_rd(clip: Clip, config: SpaceTimeConfig, qps, driver) -> list[RDSample]:
    """Measure bitrate of the subsampled clip at each QP.

    Samples are returned sorted by QP with a monotone cleanup: any sample
    whose bitrate does not strictly decrease is dropped (first sample of a
    tie wins).
    """
    qps = list(qps)
    if not qps:
        raise ValueError("need at least one qp")
    for qp in qps:
        if not QP_MIN <= qp <= QP_MAX:
            raise ValueError(f"qp {qp} outside [{QP_MIN}, {QP_MAX}]")
    sub = subsample_for_config(clip, config)
    raw = [RDSample(config, qp, driver.measure_bitrate(sub, qp)) for qp in sorted(set(qps))]
    cleaned: list[RDSample] = []
    for s in raw:
        if not cleaned or s.bitrate < cleaned[-1].bitrate:
            cleaned.append(s)
    return cleaned


def select_targets(samples: list[RDSample]) -> tuple[float, ...]:
    """Five strictly decreasing target bitrates, geometrically spaced.

    Level 1 anchors at the full-resolution bitrate at the lowest probed QP,
    level 5 at the minimum attainable bitrate across all configurations.
    """
    if not samples:
        raise ValueError("no samples")
    configs = {s.config for s in samples}
    if len(configs) < 2:
        raise ValueError("need samples from at least 2 configurations")
    full = [s for s in samples if s.config.is_full_resolution]
    if not full:
        raise ValueError("need samples for the full-resolution configuration")
    r_max = max(full, key=lambda s: s.bitrate).bitrate
    r_min = min(s.bitrate for s in samples)
    if not np.isfinite(r_max) or not np.isfinite(r_min) or r_max <= r_min * (1 + 1e-9):
        raise DegenerateDataError("rate-distortion data is flat; cannot spread targets")
    ratio = (r_min / r_max) ** (1.0 / (LADDER_LEVELS - 1))
    return tuple(r_max * ratio**i for i in range(LADDER_LEVELS))


def solve_qp(samples: list[RDSample], target: float) -> int:
    """QP whose measured bitrate is closest to the target; ties go to the lower QP."""
    if len(samples) < 2:
        raise ValueError("need at least 2 samples")
    return min(samples, key=lambda s: (abs(s.bitrate - target), s.qp)).qp


def build_stimulus(
    source: Clip,
    spec: StimulusSpec,
    driver,
    media_path: str | None = None,
) -> tuple[Clip, dict]:
    """Render one stimulus back at the source display format.

    The reference spec bypasses every stage and returns the source
    unchanged. The manifest entry records all stage parameters and the
    achieved bitrate.
    """
    fmt = source.format
    achieved = None
    if spec.is_reference:
        out = source
    else:
        if spec.qp is None:
            raise ValueError(f"stimulus {spec.stimulus_id} has no resolved qp")
        work = subsample_for_config(source, spec.config)
        work, achieved = driver.encode(work, spec.qp, seed_tag=spec.stimulus_id)
        if spec.config.temporal == "half":
            work = temporal_upsample_lfi(work, fmt.fps)
        if (work.format.width, work.format.height) != (fmt.width, fmt.height):
            work = resize_lanczos(work, ResampleSpec(fmt.width, fmt.height))
        out = work
    if out.format != fmt:
        raise FormatError(
            f"stimulus {spec.stimulus_id} did not return to display format "
            f"({out.format} != {fmt})"
        )
    entry = {
        "stimulus_id": spec.stimulus_id,
        "content": spec.content,
        "spatial": spec.config.spatial,
        "temporal": spec.config.temporal,
        "qp": spec.qp,
        "target_level": spec.target_level,
        "achieved_bitrate": achieved,
        "is_reference": spec.is_reference,
        "media_path": media_path,
    }
    return out, entry


def build_ladder(
    clip: Clip,
    content: str,
    driver,
    configs=ALL_CONFIGS,
    probe_qps=(17, 23, 29, 35, 41, 47),
) -> tuple[LadderSpec, dict[str, list[RDSample]]]:
    """Probe all configurations, pick targets, and solve per-level QPs."""
    probes: dict[str, list[RDSample]] = {}
    all_samples: list[RDSample] = []
    for config in configs:
        samples = probe_rd(clip, config, probe_qps, driver)
        probes[config.label] = samples
        all_samples.extend(samples)
    targets = select_targets(all_samples)
    selections = {}
    for level, target in enumerate(targets, start=1):
        for config in configs:
            samples = probes[config.label]
            qp = solve_qp(samples, target)
            chosen = next(s for s in samples if s.qp == qp)
            selections[(level, config.label)] = chosen
    return LadderSpec(content=content, targets=targets, selections=selections), probes
