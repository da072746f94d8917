"""Event stream serialization: line-oriented text and compact binary."""

import struct

import numpy as np

from .codec import OFF, ON, EventStream

_BIN_MAGIC = b"EVSTRM01"
_POL_NAMES = {ON: "ON", OFF: "OFF"}
_POL_VALUES = {"ON": ON, "OFF": OFF}


def write_events_text(stream, path):
    """One event per line: ``time_s taxel polarity`` with an ``#`` header."""
    with open(path, "w") as fh:
        fh.write(f"# duration_s={float(stream.duration_s)!r} n_taxels={stream.n_taxels}\n")
        for t, k, p in zip(stream.times_s, stream.taxels, stream.polarities):
            fh.write(f"{float(t)!r} {k} {_POL_NAMES[int(p)]}\n")


def read_events_text(path):
    duration = None
    n_taxels = None
    times, taxels, pols = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, value = token.partition("=")
                    if key == "duration_s":
                        duration = float(value)
                    elif key == "n_taxels":
                        n_taxels = int(value)
                continue
            parts = line.split()
            if len(parts) != 3 or parts[2] not in _POL_VALUES:
                raise ValueError(f"{path}:{lineno}: malformed event line {line!r}")
            times.append(float(parts[0]))
            taxels.append(int(parts[1]))
            pols.append(_POL_VALUES[parts[2]])
    if duration is None or n_taxels is None:
        raise ValueError(f"{path}: missing duration_s/n_taxels header")
    return EventStream(
        times_s=np.array(times, dtype=np.float64),
        taxels=np.array(taxels, dtype=np.uint16),
        polarities=np.array(pols, dtype=np.uint8),
        duration_s=duration,
        n_taxels=n_taxels,
    )


def write_events_binary(stream, path):
    """Little-endian records: f64 time_s, u16 taxel, u8 polarity."""
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC)
        fh.write(struct.pack("<dHI", stream.duration_s, stream.n_taxels, len(stream)))
        rec = np.empty(
            len(stream),
            dtype=np.dtype([("t", "<f8"), ("k", "<u2"), ("p", "u1")]),
        )
        rec["t"] = stream.times_s
        rec["k"] = stream.taxels
        rec["p"] = stream.polarities
        fh.write(rec.tobytes())


def read_events_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _BIN_MAGIC:
            raise ValueError(f"{path}: not an event stream file")
        duration, n_taxels, n_events = struct.unpack("<dHI", fh.read(14))
        rec = np.frombuffer(
            fh.read(),
            dtype=np.dtype([("t", "<f8"), ("k", "<u2"), ("p", "u1")]),
            count=n_events,
        )
    return EventStream(
        times_s=rec["t"].astype(np.float64),
        taxels=rec["k"].astype(np.uint16),
        polarities=rec["p"].astype(np.uint8),
        duration_s=duration,
        n_taxels=n_taxels,
    )
