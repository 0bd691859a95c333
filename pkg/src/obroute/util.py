"""Shared plumbing: labeled RNG substreams, JSON/CSV emission, thread-pool mapping."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np

_U64 = (1 << 64) - 1


def _label_word(label: Any) -> int:
    if isinstance(label, (int, np.integer)):
        value = int(label)
        if value < 0:
            raise ValueError("stream labels must be non-negative")
        return value
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(seed: int, *labels: Any) -> np.random.Generator:
    """Generator for (seed, labels), independent across labels and stable across platforms.

    Labels may be strings or non-negative ints; strings hash through sha256 so the
    stream does not depend on interpreter hash randomization.
    """
    words = [_label_word(lbl) for lbl in labels]
    return np.random.default_rng(np.random.SeedSequence([int(seed) & _U64, *words]))


def json_ready(obj: Any) -> Any:
    """Recursively convert to plain JSON types; floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(key): json_ready(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(val) for val in obj]
    if isinstance(obj, np.ndarray):
        return json_ready(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, Fraction):
        return int(obj) if obj.denominator == 1 else str(obj)
    return obj


def dumps_json(obj: Any) -> str:
    return json.dumps(json_ready(obj), indent=2) + "\n"


def write_output(text: str, out: str | None) -> None:
    """Write to a path, or stdout when out is None or '-'."""
    if out is None or out == "-":
        print(text, end="")
    else:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def dumps_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([json_ready(cell) for cell in row])
    return buf.getvalue()


def parallel_map(fn: Callable, items: Iterable, threads: int | None = None) -> list:
    """Order-preserving map, optionally over a thread pool.

    threads=None uses all cores; results are collected by index so the output
    does not depend on the worker count.
    """
    items = list(items)
    workers = os.cpu_count() or 1 if threads is None else max(1, int(threads))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
