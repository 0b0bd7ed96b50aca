"""Time-tag streams and histogram files.

Text tag file::

    # timebin-tags v1
    # n_bins=<analysed bins>          (optional)
    detector_id,bin_index
    ...

Binary tag file (all fields little-endian uint32)::

    b"TBTG" version n_bins  then frames of  count, count x (detector_id, bin_index)

Histogram CSV::

    # timebin-hist v1 order=2
    delta,counts                      (order 3: delta1,delta2,counts)
    ...
    baseline,<value>                  (normalized output only; adds a g column)
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union, overload

import numpy as np

TAG_HEADER = "# timebin-tags v1"
HIST_HEADER = "# timebin-hist v1 order={order}"
BINARY_MAGIC = b"TBTG"
BINARY_VERSION = 1
_FRAME = 1 << 20
_U32 = np.dtype("<u4")


class FormatError(ValueError):
    """A tag or histogram file (or in-memory stream) violates its format."""


@dataclass(frozen=True)
class TimeTagRecord:
    detector_id: int
    bin_index: int


class TagStream(Sequence[TimeTagRecord]):
    """Bin-sorted detection events held as two parallel integer arrays."""

    def __init__(self, detector, bin_index, n_bins: Optional[int] = None):
        self.detector = np.ascontiguousarray(detector, dtype=np.int64).ravel()
        self.bin = np.ascontiguousarray(bin_index, dtype=np.int64).ravel()
        if self.detector.shape != self.bin.shape:
            raise FormatError("detector and bin arrays differ in length")
        if self.bin.size:
            if np.any(np.diff(self.bin) < 0):
                k = int(np.argmax(np.diff(self.bin) < 0)) + 1
                raise FormatError(f"bins must be nondecreasing (record {k}: {self.bin[k]} < {self.bin[k - 1]})")
            if self.bin[0] < 0 or self.detector.min() < 0:
                raise FormatError("negative bin index or detector id")
        last = int(self.bin[-1]) + 1 if self.bin.size else 0
        if n_bins is None:
            n_bins = last
        elif n_bins < last:
            raise FormatError(f"bin index {last - 1} outside run length {n_bins}")
        self.n_bins = int(n_bins)

    @classmethod
    def from_records(cls, records: Iterable[TimeTagRecord], n_bins: Optional[int] = None) -> "TagStream":
        if isinstance(records, TagStream):
            return records
        recs = list(records)
        return cls([r.detector_id for r in recs], [r.bin_index for r in recs], n_bins)

    def __len__(self):
        return self.bin.size

    @overload
    def __getitem__(self, i: int) -> TimeTagRecord: ...
    @overload
    def __getitem__(self, i: slice) -> "TagStream": ...

    def __getitem__(self, i):
        if isinstance(i, slice):
            return TagStream(self.detector[i], self.bin[i], self.n_bins)
        return TimeTagRecord(int(self.detector[i]), int(self.bin[i]))

    def __iter__(self) -> Iterator[TimeTagRecord]:
        for d, b in zip(self.detector.tolist(), self.bin.tolist()):
            yield TimeTagRecord(d, b)

    def __eq__(self, other):
        if not isinstance(other, TagStream):
            return NotImplemented
        return (self.n_bins == other.n_bins and np.array_equal(self.detector, other.detector)
                and np.array_equal(self.bin, other.bin))

    def counts_per_bin(self, detector_id: int) -> np.ndarray:
        sel = self.bin[self.detector == detector_id]
        return np.bincount(sel, minlength=self.n_bins).astype(np.int64)

    def detectors(self) -> list[int]:
        return sorted(set(self.detector.tolist()))


def as_stream(tags) -> TagStream:
    return tags if isinstance(tags, TagStream) else TagStream.from_records(tags)


# text tags --------------------------------------------------------------------

def write_tags_csv(path: Union[str, Path], stream: TagStream) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(TAG_HEADER + "\n")
        fh.write(f"# n_bins={stream.n_bins}\n")
        buf = io.StringIO()
        np.savetxt(buf, np.column_stack([stream.detector, stream.bin]), fmt="%d", delimiter=",")
        fh.write(buf.getvalue())


def read_tags_csv(path: Union[str, Path]) -> TagStream:
    dets, bins = [], []
    n_bins = None
    with open(path) as fh:
        first = fh.readline().rstrip("\r\n")
        if first != TAG_HEADER:
            raise FormatError(f"{path}:1: expected header {TAG_HEADER!r}, got {first!r}")
        last_bin = -1
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# n_bins="):
                    n_bins = int(line.split("=", 1)[1])
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'detector_id,bin_index', got {line!r}")
            try:
                d, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-integer field in {line!r}") from None
            if d < 0 or b < 0:
                raise FormatError(f"{path}:{lineno}: negative field in {line!r}")
            if b < last_bin:
                raise FormatError(f"{path}:{lineno}: bin {b} decreases (previous {last_bin})")
            last_bin = b
            dets.append(d)
            bins.append(b)
    try:
        return TagStream(dets, bins, n_bins)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


# binary tags ------------------------------------------------------------------

def write_tags_binary(path: Union[str, Path], stream: TagStream) -> None:
    if stream.n_bins >= 2 ** 32 or (len(stream) and stream.detector.max() >= 2 ** 32):
        raise FormatError("values exceed the 32-bit binary framing")
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<II", BINARY_VERSION, stream.n_bins))
        for start in range(0, len(stream), _FRAME):
            det = stream.detector[start:start + _FRAME]
            b = stream.bin[start:start + _FRAME]
            fh.write(struct.pack("<I", det.size))
            fh.write(np.column_stack([det, b]).astype(_U32).tobytes())


def read_tags_binary(path: Union[str, Path]) -> TagStream:
    data = Path(path).read_bytes()
    if data[:4] != BINARY_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header")
    version, n_bins = struct.unpack_from("<II", data, 4)
    if version != BINARY_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    pos, chunks = 12, []
    frame = 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise FormatError(f"{path}: truncated frame header in frame {frame}")
        (count,) = struct.unpack_from("<I", data, pos)
        pos += 4
        end = pos + 8 * count
        if end > len(data):
            raise FormatError(f"{path}: frame {frame} declares {count} records but file is short")
        chunks.append(np.frombuffer(data[pos:end], dtype=_U32).reshape(count, 2))
        pos = end
        frame += 1
    arr = np.concatenate(chunks) if chunks else np.zeros((0, 2), dtype=_U32)
    try:
        return TagStream(arr[:, 0], arr[:, 1], n_bins)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def read_tags(path: Union[str, Path]) -> TagStream:
    with open(path, "rb") as fh:
        head = fh.read(4)
    return read_tags_binary(path) if head == BINARY_MAGIC else read_tags_csv(path)


# histograms -------------------------------------------------------------------

def write_histogram_csv(path_or_buf, order: int, counts: dict, values: Optional[dict] = None,
                        baseline: Optional[float] = None) -> None:
    """Write raw counts, or counts plus normalized values and a baseline footer."""
    own = isinstance(path_or_buf, (str, Path))
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        fh.write(HIST_HEADER.format(order=order) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        keys = ["delta"] if order == 2 else ["delta1", "delta2"]
        w.writerow(keys + ["counts"] + (["g"] if values is not None else []))
        for k in sorted(counts):
            row = [k] if order == 2 else list(k)
            row.append(counts[k])
            if values is not None:
                row.append(repr(float(values[k])))
            w.writerow(row)
        if baseline is not None:
            w.writerow(["baseline", repr(float(baseline))])
    finally:
        if own:
            fh.close()


def read_histogram_csv(path: Union[str, Path]) -> tuple[int, dict, Optional[float]]:
    """Return (order, counts, baseline or None)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# timebin-hist v1 order="):
        raise FormatError(f"{path}:1: missing histogram header")
    try:
        order = int(lines[0].rsplit("=", 1)[1])
    except ValueError:
        raise FormatError(f"{path}:1: bad order in header") from None
    if order not in (2, 3):
        raise FormatError(f"{path}:1: order must be 2 or 3")
    counts, baseline = {}, None
    nkey = 1 if order == 2 else 2
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if parts[0] == "baseline":
            baseline = float(parts[1])
            continue
        try:
            key = tuple(int(x) for x in parts[:nkey])
            counts[key[0] if order == 2 else key] = int(parts[nkey])
        except (ValueError, IndexError):
            raise FormatError(f"{path}:{lineno}: malformed row {line!r}") from None
    return order, counts, baseline
