"""Bundled datasets: the german credit table and a two-feature moons-style fixture."""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

import numpy as np

_HERE = resources.files(__name__)

GERMAN_CSV = Path(str(_HERE / "german.csv"))
GERMAN_SCHEMA = Path(str(_HERE / "german.schema.json"))
TWO_D_CSV = Path(str(_HERE / "two_d.csv"))
TWO_D_SCHEMA = Path(str(_HERE / "two_d.schema.json"))


def make_two_d(n: int = 600, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Points on [-1, 1]^2 labeled by a sine-shaped boundary (1 above it, 0 below)."""
    rng = np.random.default_rng(seed)
    X = np.round(rng.uniform(-1.0, 1.0, size=(n, 2)), 3)
    y = (X[:, 1] > 0.5 * np.sin(3.0 * X[:, 0])).astype(int)
    return X, y


def write_two_d(path: str | Path, n: int = 600, seed: int = 0) -> None:
    X, y = make_two_d(n, seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "side"])
        for (a, b), label in zip(X, y):
            w.writerow([f"{a:.3f}", f"{b:.3f}", "above" if label else "below"])
