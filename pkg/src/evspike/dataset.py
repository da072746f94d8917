"""Dataset container, CSV interoperability, and the synthetic generator."""

import csv
import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .codec import FrameSequence

_MAGIC = b"EVSPDS01"


@dataclass
class Dataset:
    """A labelled collection of frame sequences sharing sensor geometry."""

    samples: list
    class_names: list
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.samples:
            raise ValueError("dataset must contain at least one sample")
        first = self.samples[0]
        for s in self.samples:
            if s.n_taxels != first.n_taxels:
                raise ValueError("inconsistent taxel counts across samples")
            if s.sampling_rate_hz != first.sampling_rate_hz:
                raise ValueError("inconsistent sampling rates across samples")
            if s.label >= len(self.class_names):
                raise ValueError(f"label {s.label} outside class list")

    def __len__(self):
        return len(self.samples)

    @property
    def n_taxels(self):
        return self.samples[0].n_taxels

    @property
    def sampling_rate_hz(self):
        return self.samples[0].sampling_rate_hz

    @property
    def n_classes(self):
        return len(self.class_names)

    @property
    def labels(self):
        return np.array([s.label for s in self.samples], dtype=np.int64)


def save_dataset(dataset, path):
    """Write the documented binary container.

    Header: magic, u16 version, f64 sampling rate, u16 n_taxels,
    u16 n_classes, length-prefixed utf-8 class names, u32 n_samples.
    Each sample record: u8 label, u16 n_taxels, u32 n_frames, then the
    row-major (taxel-major) 8-bit frames.
    """
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Hd", 1, dataset.sampling_rate_hz))
        fh.write(struct.pack("<HH", dataset.n_taxels, dataset.n_classes))
        for name in dataset.class_names:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(struct.pack("<I", len(dataset)))
        for s in dataset.samples:
            frames = np.ascontiguousarray(s.taxel_values, dtype=np.uint8)
            fh.write(struct.pack("<BHI", s.label, s.n_taxels, s.n_frames))
            fh.write(frames.tobytes())


def load_dataset(path, expected_sha256=None):
    """Read the binary container; validates structure and value ranges."""
    with open(path, "rb") as fh:
        blob = fh.read()
    digest = hashlib.sha256(blob).hexdigest()
    if expected_sha256 is not None and digest != expected_sha256:
        raise ValueError(f"{path}: checksum mismatch")
    if len(blob) < 8 or blob[:8] != _MAGIC:
        raise ValueError(f"{path}: not a dataset container")
    off = 8
    try:
        version, rate = struct.unpack_from("<Hd", blob, off)
        off += 10
        if version != 1:
            raise ValueError(f"{path}: unsupported container version {version}")
        n_taxels, n_classes = struct.unpack_from("<HH", blob, off)
        off += 4
        class_names = []
        for _ in range(n_classes):
            (ln,) = struct.unpack_from("<H", blob, off)
            off += 2
            class_names.append(blob[off : off + ln].decode("utf-8"))
            off += ln
        (n_samples,) = struct.unpack_from("<I", blob, off)
        off += 4
        samples = []
        for _ in range(n_samples):
            label, taxels, frames = struct.unpack_from("<BHI", blob, off)
            off += 7
            if taxels != n_taxels:
                raise ValueError(f"{path}: sample taxel count {taxels} != header {n_taxels}")
            size = taxels * frames
            data = np.frombuffer(blob, dtype=np.uint8, count=size, offset=off)
            off += size
            samples.append(
                FrameSequence(
                    taxel_values=data.reshape(taxels, frames).copy(),
                    sampling_rate_hz=rate,
                    label=label,
                )
            )
    except struct.error as exc:
        raise ValueError(f"{path}: truncated or malformed container") from exc
    if off != len(blob):
        raise ValueError(f"{path}: trailing bytes after last sample")
    return Dataset(
        samples=samples,
        class_names=class_names,
        provenance={"source": str(path), "sha256": digest},
    )


def load_sample_csv(path, sampling_rate_hz, label=0):
    """CSV adapter: one row per frame, columns are taxels."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            rows.append([float(v) for v in row])
    if not rows:
        raise ValueError(f"{path}: empty CSV sample")
    frames = np.array(rows, dtype=np.float64).T  # -> [n_taxels, n_frames]
    return FrameSequence(
        taxel_values=frames.round().astype(np.uint8),
        sampling_rate_hz=sampling_rate_hz,
        label=label,
    )


def write_sample_csv(seq, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for frame in seq.taxel_values.T:
            writer.writerow([int(v) for v in frame])


_TAXEL_OFFSETS = (0, 3, 7)


def _class_template(class_index, n_taxels, rng):
    """Deterministic per-class dot layout: active taxels plus bump timings.

    Classes c and c+1 use disjoint taxel sets for small c, which keeps
    low-class-count datasets linearly separable by spatial features alone.
    """
    taxels = [(class_index + off) % n_taxels for off in _TAXEL_OFFSETS]
    bumps = []
    for taxel in taxels:
        n_dots = 1 + int(rng.integers(0, 2))
        for _ in range(n_dots):
            center = float(rng.uniform(0.35, 1.1))
            width = float(rng.uniform(0.04, 0.07))
            amp = float(rng.uniform(0.75, 1.0))
            bumps.append((taxel, center, width, amp))
    return bumps


def synth_dataset(
    n_classes,
    n_repetitions,
    seed,
    n_taxels=12,
    sampling_rate_hz=40.0,
    duration_s=1.35,
    onset_jitter_s=0.03,
    amplitude=230.0,
    include_blank_class=False,
):
    """Seeded synthetic dataset mimicking a sliding-fingertip recording.

    Each class presses Gaussian bumps onto a class-specific taxel subset at
    class-specific times along a 1.35 s slide; repetitions jitter the onset
    (truncated Gaussian) and the bump amplitudes. Values are clipped to
    [0, 255] and rounded to the sensor's 8-bit grid. With the default timing
    constraints the first frame is always 0 (contact has not started yet).
    An optional extra "no contact" class contains only faint scattered
    flutter, standing in for recordings where the sensor missed the surface.
    """
    rng = np.random.default_rng(seed)
    n_frames = int(round(duration_s * sampling_rate_hz))
    frame_times = np.arange(n_frames) / sampling_rate_hz

    templates = [
        _class_template(c, n_taxels, np.random.default_rng((seed, 1000003 + c)))
        for c in range(n_classes)
    ]

    samples = []
    for c in range(n_classes):
        for _ in range(n_repetitions):
            onset = float(np.clip(rng.normal(0.0, onset_jitter_s), -0.06, 0.06))
            values = np.zeros((n_taxels, n_frames), dtype=np.float64)
            for taxel, center, width, amp in templates[c]:
                gain = amplitude * amp * float(rng.uniform(0.9, 1.1))
                values[taxel] += gain * np.exp(
                    -0.5 * ((frame_times - (center + onset)) / width) ** 2
                )
            frames = np.clip(np.round(values), 0, 255).astype(np.uint8)
            samples.append(
                FrameSequence(taxel_values=frames, sampling_rate_hz=sampling_rate_hz, label=c)
            )

    class_names = [f"c{c:02d}" for c in range(n_classes)]
    if include_blank_class:
        blank_label = n_classes
        class_names.append("none")
        for _ in range(n_repetitions):
            values = np.zeros((n_taxels, n_frames), dtype=np.float64)
            for _ in range(4):
                taxel = int(rng.integers(0, n_taxels))
                center = float(rng.uniform(0.1, duration_s - 0.1))
                width = float(rng.uniform(0.03, 0.06))
                values[taxel] += float(rng.uniform(8.0, 16.0)) * np.exp(
                    -0.5 * ((frame_times - center) / width) ** 2
                )
            frames = np.clip(np.round(values), 0, 255).astype(np.uint8)
            samples.append(
                FrameSequence(
                    taxel_values=frames, sampling_rate_hz=sampling_rate_hz, label=blank_label
                )
            )

    return Dataset(
        samples=samples,
        class_names=class_names,
        provenance={"source": "synthetic", "seed": int(seed)},
    )
