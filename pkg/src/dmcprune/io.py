"""Channel file formats: JSON ({"num_inputs", "num_outputs", "rows"}) and CSV.

CSV files carry one comma-separated probability row per input; lines starting
with '#' are comments.
"""

from __future__ import annotations

import json
from pathlib import Path

from .core import Channel, DmcError, validate_channel


class FormatError(DmcError):
    pass


def channel_to_dict(channel: Channel, metadata: dict | None = None) -> dict:
    d = {
        "num_inputs": channel.num_inputs,
        "num_outputs": channel.num_outputs,
        "rows": [[float(v) for v in row] for row in channel.matrix],
    }
    if metadata is not None:
        d["metadata"] = metadata
    return d


def channel_from_dict(d: dict) -> Channel:
    try:
        rows = d["rows"]
        ni, no = int(d["num_inputs"]), int(d["num_outputs"])
    except (KeyError, TypeError) as e:
        raise FormatError(f"channel JSON missing field: {e}") from e
    ch = validate_channel(rows)
    if ch.num_inputs != ni or ch.num_outputs != no:
        raise FormatError(
            f"declared shape {ni}x{no} does not match rows {ch.num_inputs}x{ch.num_outputs}"
        )
    return ch


def load_channel(path) -> Channel:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            return channel_from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}: invalid JSON: {e}") from e
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as e:
            raise FormatError(f"{path}: bad CSV line {line!r}") from e
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return validate_channel(rows)


def save_channel(path, channel: Channel, metadata: dict | None = None) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        lines = ["# channel csv: one probability row per input"]
        lines += [",".join(f"{v:.17g}" for v in row) for row in channel.matrix]
        path.write_text("\n".join(lines) + "\n")
    else:
        path.write_text(json.dumps(channel_to_dict(channel, metadata), indent=2) + "\n")
