"""File formats: binary trial data, CSV import/export, and run configuration.

Binary trial-data layout (little endian throughout)::

    magic   4 bytes  b"MTS1"
    version u16      1
    n_trials   u32
    n_channels u32
    n_samples  u32
    sampling_rate f64
    labels  n_channels x (u16 byte length + UTF-8 bytes)
    payload n_trials*n_channels*n_samples float64, [trial][channel][time] order

The payload length must match the header exactly; trailing bytes are an
error.  All writers are atomic (temp file in the target directory, then
rename), so a failed run never leaves a partial output file.
"""

import os
import struct
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataFormatError, DomainError
from .timeseries import MultiTrialSeries

MAGIC = b"MTS1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIIId")

#: Default analysis bands in Hz.
DEFAULT_BANDS = (("alpha", 8.0, 12.0), ("beta", 18.0, 30.0))


def _atomic_write(path, data: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trials(path, series: MultiTrialSeries):
    """Serialize a :class:`MultiTrialSeries` to the binary trial-data format."""
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, series.n_trials, series.n_channels,
                          series.n_samples, series.sampling_rate)
    parts = [header]
    for label in series.channel_labels:
        encoded = label.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise DomainError(f"channel label too long to serialize: {label[:32]!r}...")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
    parts.append(np.ascontiguousarray(series.values, dtype="<f8").tobytes())
    _atomic_write(path, b"".join(parts))


def read_trials(path) -> MultiTrialSeries:
    """Parse a binary trial-data file; failures report the byte offset."""
    with open(path, "rb") as handle:
        blob = handle.read()

    def fail(offset, message):
        raise DataFormatError(f"{path}: {message} (at byte offset {offset})")

    if len(blob) < _HEADER.size:
        fail(len(blob), f"file truncated inside the {_HEADER.size}-byte header")
    magic, version, n_trials, n_channels, n_samples, sampling_rate = \
        _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        fail(0, f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        fail(4, f"unsupported format version {version}")
    if n_trials < 1 or n_channels < 1 or n_samples < 2:
        fail(6, f"invalid dimensions n_trials={n_trials} n_channels={n_channels} "
                f"n_samples={n_samples}")
    if not (np.isfinite(sampling_rate) and sampling_rate > 0):
        fail(18, f"invalid sampling rate {sampling_rate}")

    offset = _HEADER.size
    labels = []
    for index in range(n_channels):
        if offset + 2 > len(blob):
            fail(offset, f"file truncated in the length prefix of label {index}")
        (length,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        if offset + length > len(blob):
            fail(offset, f"file truncated inside label {index}")
        try:
            labels.append(blob[offset:offset + length].decode("utf-8"))
        except UnicodeDecodeError:
            fail(offset, f"label {index} is not valid UTF-8")
        offset += length

    expected = 8 * n_trials * n_channels * n_samples
    if len(blob) - offset != expected:
        fail(offset, f"payload is {len(blob) - offset} bytes, expected {expected}")
    values = np.frombuffer(blob, dtype="<f8", count=n_trials * n_channels * n_samples,
                           offset=offset).reshape(n_trials, n_channels, n_samples)
    if not np.all(np.isfinite(values)):
        bad = int(np.argmin(np.isfinite(values.ravel())))
        fail(offset + 8 * bad, "payload contains a non-finite value")
    return MultiTrialSeries(values=values.astype(float), sampling_rate=sampling_rate,
                            channel_labels=tuple(labels))


def read_trials_csv(path, sampling_rate: float = 1.0) -> MultiTrialSeries:
    """Import trials from a tidy CSV with columns ``trial,channel,time,value``.

    Indices are 0-based integers and every (trial, channel, time) cell must
    appear exactly once; dimensions are inferred from the largest indices.
    """
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle]
    if not lines or lines[0].strip() != "trial,channel,time,value":
        raise DataFormatError(f"{path}: expected header 'trial,channel,time,value' (line 1)")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise DataFormatError(f"{path}: expected 4 columns (line {lineno})")
        try:
            records.append((int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])))
        except ValueError as err:
            raise DataFormatError(f"{path}: {err} (line {lineno})") from None
    if not records:
        raise DataFormatError(f"{path}: no data rows")
    arr = np.array(records)
    idx = arr[:, :3].astype(int)
    if idx.min() < 0:
        raise DataFormatError(f"{path}: negative trial/channel/time index")
    n_trials, n_channels, n_samples = idx.max(axis=0) + 1
    values = np.full((n_trials, n_channels, n_samples), np.nan)
    seen = np.zeros((n_trials, n_channels, n_samples), dtype=bool)
    for (trial, channel, time), value in zip(idx, arr[:, 3]):
        if seen[trial, channel, time]:
            raise DataFormatError(
                f"{path}: duplicate cell trial={trial} channel={channel} time={time}")
        seen[trial, channel, time] = True
        values[trial, channel, time] = value
    if not seen.all():
        trial, channel, time = np.argwhere(~seen)[0]
        raise DataFormatError(
            f"{path}: missing cell trial={trial} channel={channel} time={time}")
    return MultiTrialSeries(values=values, sampling_rate=sampling_rate)


def format_value(value) -> str:
    """Render a CSV cell: floats with 12 significant digits, others as str."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return f"{value:.12g}"
    return str(value)


def write_csv(path, header, rows):
    """Write a CSV file atomically with the package's fixed formatting."""
    lines = [",".join(header)]
    lines.extend(",".join(format_value(cell) for cell in row) for row in rows)
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_text(path, text: str):
    """Write a small text report atomically."""
    _atomic_write(path, text.encode("utf-8"))


@dataclass(frozen=True)
class RunConfig:
    """Analysis settings shared by the CLI subcommands.

    Serialized as a flat ``key = value`` text file; ``#`` starts a comment
    and unknown keys are rejected.  ``bands`` is written as
    ``name:lo:hi[,name:lo:hi...]`` in Hz.
    """

    method: str = "shrinkage"
    window: int = 15
    span_min: int = 3
    span_max: int | None = None
    max_order: int = 10
    taper_max: int | None = None
    bands: tuple = DEFAULT_BANDS
    fdr_q: float = 0.05
    seed: int = 0
    out_dir: str = "."

    def span_grid(self) -> tuple[int, ...] | None:
        """Explicit span grid from the bounds, or None for the automatic default."""
        if self.span_max is None:
            return None
        start = self.span_min if self.span_min % 2 == 1 else self.span_min + 1
        grid = tuple(range(start, self.span_max + 1, 2))
        if not grid:
            raise DomainError(f"empty span grid from bounds [{self.span_min}, {self.span_max}]")
        return grid


_CONFIG_PARSERS = {
    "method": str,
    "window": int,
    "span_min": int,
    "span_max": int,
    "max_order": int,
    "taper_max": int,
    "bands": lambda text: parse_bands(text),
    "fdr_q": float,
    "seed": int,
    "out_dir": str,
}


def parse_bands(text: str) -> tuple:
    """Parse ``name:lo:hi[,name:lo:hi...]`` into band tuples."""
    bands = []
    for chunk in text.split(","):
        parts = chunk.strip().split(":")
        if len(parts) != 3:
            raise DataFormatError(f"band {chunk!r} is not name:lo:hi")
        try:
            bands.append((parts[0], float(parts[1]), float(parts[2])))
        except ValueError:
            raise DataFormatError(f"band {chunk!r} has non-numeric edges") from None
    if not bands:
        raise DataFormatError("no bands given")
    return tuple(bands)


def read_config(path) -> RunConfig:
    """Parse a ``key = value`` configuration file into a :class:`RunConfig`."""
    updates = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataFormatError(f"{path}: expected key = value (line {lineno})")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _CONFIG_PARSERS:
                raise DataFormatError(
                    f"{path}: unknown key {key!r} (line {lineno}); valid keys: "
                    f"{', '.join(sorted(_CONFIG_PARSERS))}")
            try:
                updates[key] = _CONFIG_PARSERS[key](value)
            except DataFormatError:
                raise
            except ValueError as err:
                raise DataFormatError(f"{path}: bad value for {key!r} (line {lineno}): {err}") \
                    from None
    return replace(RunConfig(), **updates)
