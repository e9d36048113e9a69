"""Utility functions."""
from __future__ import annotations

import hashlib
import json
import logging
import os
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Callable, TypeVar

import numpy as np
import pandas as pd

T = TypeVar("T")
R = TypeVar("R")

FLOAT_FORMAT = "%.17g"
OUTPUT_DIR_VARIABLE = "FVDP_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "fvdp_output"


def reduce_phase(theta: Any) -> Any:
    """Reduce a phase (scalar or array) to [0, 1).

    This is the only place phases are reduced, so that every stored value
    goes through the same floating point operations.
    """
    reduced = np.mod(theta, 1.0)
    # np.mod(-1e-20, 1.0) == 1.0
    if np.ndim(reduced) == 0:
        return 0.0 if reduced >= 1.0 else float(reduced)
    reduced = np.asarray(reduced, dtype=float)
    reduced[reduced >= 1.0] = 0.0
    return reduced


def phase_difference(theta_a: Any, theta_b: Any) -> Any:
    """Signed difference theta_a - theta_b taken on the circle, in [-1/2, 1/2)."""
    return np.mod(np.asarray(theta_a) - np.asarray(theta_b) + 0.5, 1.0) - 0.5


def circle_distance(theta_a: Any, theta_b: Any, y_a: Any, y_b: Any) -> Any:
    """Euclidean distance in (theta, y) with theta measured on the circle."""
    d_theta = phase_difference(theta_a, theta_b)
    return np.hypot(d_theta, np.asarray(y_a) - np.asarray(y_b))


def output_dir(path: str | os.PathLike[str] | None = None) -> Path:
    """The output directory to use.

    Args:
        path: An explicit directory. Optional, by default the environment
            variable FVDP_OUTPUT_DIR is used, falling back to "fvdp_output".

    Returns:
        The directory as a Path. It is created if it does not exist.
    """
    if path is None:
        path = os.environ.get(OUTPUT_DIR_VARIABLE, DEFAULT_OUTPUT_DIR)
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def save_frame(df: pd.DataFrame, save: bool | str, default_path: str) -> None:
    """Write a table to CSV if requested.

    Args:
        df: The table.
        save: If True, save to `default_path`. If a string, save to that path.
            If False, do nothing.
        default_path: Where to save when `save` is True.
    """
    if not save:
        return
    path = Path(default_path if save is True else save)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logging.debug("Saved %d rows to %s", len(df), path)


def _jsonable(value: Any) -> Any:
    if is_dataclass(value) and not isinstance(value, type):
        return {key: _jsonable(val) for key, val in asdict(value).items()}
    if isinstance(value, dict):
        return {str(key): _jsonable(val) for key, val in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(val) for val in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def config_digest(*configs: Any) -> str:
    """A short, stable hash of one or more configuration objects."""
    payload = json.dumps([_jsonable(c) for c in configs], sort_keys=True, default=repr)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def parallel_map(
    func: Callable[[T], R], items: Iterable[T], jobs: int | None = 1
) -> list[R]:
    """Map `func` over `items`, optionally on a process pool.

    The results come back in input order whatever the completion order.

    Args:
        func: A picklable callable (a module level function or a
            functools.partial of one).
        items: The work items.
        jobs: Number of worker processes. 1 or None runs in this process.

    Returns:
        The list of results.
    """
    work: Sequence[T] = list(items)
    if jobs is None or jobs <= 1 or len(work) <= 1:
        return [func(item) for item in work]
    logging.debug("Mapping %d items on %d workers", len(work), jobs)
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(func, work))
