"""Text formats for labels, timings, metrics and node-id relabeling."""

from __future__ import annotations

import csv
from typing import TextIO

import numpy as np

from .errors import ParseError, ValidationError

__all__ = [
    "write_labels",
    "read_labels",
    "write_timings",
    "write_metrics",
    "relabel_edges",
]


def write_labels(labels, stream: TextIO):
    for node, label in enumerate(np.asarray(labels)):
        stream.write(f"{node}\t{int(label)}\n")


def read_labels(stream: TextIO) -> np.ndarray:
    """Read ``node<TAB>label`` lines; nodes must cover ``0..n-1`` exactly once."""
    nodes, labels = [], []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ParseError(f"expected 'node label', got {line!r}", lineno)
        try:
            nodes.append(int(fields[0]))
            labels.append(int(fields[1]))
        except ValueError as exc:
            raise ParseError(f"non-integer field in {line!r}", lineno) from exc
    nodes = np.asarray(nodes, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if nodes.size and not np.array_equal(np.sort(nodes), np.arange(nodes.size)):
        raise ValidationError("label file must list each node 0..n-1 exactly once")
    out = np.empty(nodes.size, dtype=np.int64)
    out[nodes] = labels
    return out


def write_timings(timings: dict, stream: TextIO):
    stream.write("stage,seconds\n")
    for stage, seconds in timings.items():
        stream.write(f"{stage},{seconds:.6f}\n")


def write_metrics(metrics: dict, stream: TextIO):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["metric", "value"])
    for name, value in metrics.items():
        writer.writerow([name, repr(float(value))])


def relabel_edges(source, out_edges: TextIO, out_map: TextIO) -> dict:
    """Map arbitrary node ids to dense integers in first-seen order.

    Input lines are ``layer u v``; the layer field is copied through. The
    map is written as ``original<TAB>index``.
    """
    mapping = {}
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", lineno)
        layer, u, v = fields
        ids = []
        for name in (u, v):
            if name not in mapping:
                mapping[name] = len(mapping)
                out_map.write(f"{name}\t{mapping[name]}\n")
            ids.append(mapping[name])
        out_edges.write(f"{layer}\t{ids[0]}\t{ids[1]}\n")
    return mapping
