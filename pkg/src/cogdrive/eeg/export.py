"""CSV export for sessions and labeled trials.

Floats are written with ``repr`` so a read-back parses to the identical
float64 value.  A session becomes two files: one row per sample with a column
per channel, plus a marker sidecar {sample_index, severity, reaction_time}.
"""

from __future__ import annotations

import csv

import numpy as np

from .synth import EventMarker, RawEeg


def session_to_csv(raw: RawEeg, data_path, markers_path) -> None:
    c = raw.channels.shape[0]
    with open(data_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"ch{i}" for i in range(c)])
        for row in raw.channels.T:
            writer.writerow([repr(float(v)) for v in row])
    with open(markers_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_index", "severity", "reaction_time"])
        for m in raw.markers:
            writer.writerow([m.sample_index, repr(float(m.severity)),
                             repr(float(m.reaction_time))])


def session_from_csv(data_path, markers_path, fs: int) -> RawEeg:
    with open(data_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    channels = np.asarray(rows, dtype=np.float64).T
    if channels.shape[0] != len(header):
        raise ValueError("channel count does not match header")
    markers = []
    with open(markers_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            markers.append(EventMarker(
                sample_index=int(row["sample_index"]),
                severity=float(row["severity"]),
                reaction_time=float(row["reaction_time"])))
    return RawEeg(channels=channels, fs=fs, markers=markers)


def trials_to_csv(trials, path) -> None:
    """One row per labeled trial: index, label, p2p, peak latency, severity,
    reaction time."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "erp_label", "p2p_uv", "peak_latency_ms",
                         "severity", "reaction_time_s"])
        for i, t in enumerate(trials):
            if t.erp_label is None:
                raise ValueError(f"trial {i} is unlabeled; run label_erp first")
            writer.writerow([i, t.erp_label, repr(float(t.p2p)),
                             repr(float(t.peak_latency)),
                             repr(float(t.marker.severity)),
                             repr(float(t.marker.reaction_time))])


def trials_table_from_csv(path) -> list[dict]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append({
                "trial": int(row["trial"]),
                "erp_label": row["erp_label"],
                "p2p_uv": float(row["p2p_uv"]),
                "peak_latency_ms": float(row["peak_latency_ms"]),
                "severity": float(row["severity"]),
                "reaction_time_s": float(row["reaction_time_s"]),
            })
    return out
