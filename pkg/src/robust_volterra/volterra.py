"""Second-order Volterra input expansion and kernel-vector bookkeeping.

A second-order Volterra filter of linear memory ``M`` acts on an expanded
regressor that stacks the ``M`` most recent input samples (newest first)
followed by every pairwise product ``x(n-m1) * x(n-m2)`` with
``0 <= m1 <= m2 <= M-1``, ordered lexicographically by ``(m1, m2)``.
The full expanded length is ``L = M * (M + 3) / 2``.  Kernel vectors use
the identical layout (``M`` linear taps, then the upper-triangular
quadratic taps), so the filter output is a plain inner product.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class PlantFileError(ValueError):
    """Raised when a plant coefficient file cannot be parsed."""


def expanded_length(memory: int) -> int:
    """Expanded regressor length for a linear memory of ``memory`` taps.

    Counts ``memory`` linear terms plus ``memory * (memory + 1) / 2``
    pairwise products, i.e. ``memory * (memory + 3) / 2`` in total.
    """
    m = int(memory)
    if m < 1:
        raise ValueError(f"memory must be a positive integer, got {memory!r}")
    return m * (m + 3) // 2


def memory_from_length(length: int) -> int:
    """Invert :func:`expanded_length`.

    Raises ValueError if ``length`` is not of the form ``m * (m + 3) / 2``
    for a positive integer ``m``.
    """
    n = int(length)
    if n < 2:
        raise ValueError(f"no valid memory for expanded length {length!r}")
    # solve m^2 + 3m - 2n = 0 for the positive root
    m = int(round((-3.0 + np.sqrt(9.0 + 8.0 * n)) / 2.0))
    if m < 1 or expanded_length(m) != n:
        raise ValueError(f"{length!r} is not a valid expanded length")
    return m


def quadratic_index_pairs(memory: int) -> tuple[np.ndarray, np.ndarray]:
    """Lag pairs (m1, m2), m1 <= m2, in canonical (lexicographic) order."""
    if int(memory) < 1:
        raise ValueError(f"memory must be a positive integer, got {memory!r}")
    return np.triu_indices(int(memory))


def expand_window(window: np.ndarray) -> np.ndarray:
    """Expand one newest-first delay window into the full regressor.

    ``window[k]`` holds the input sample ``k`` steps in the past.  The
    result stacks the window itself, then ``window[m1] * window[m2]`` for
    every ``m1 <= m2``.
    """
    w = np.asarray(window, dtype=np.float64).ravel()
    i1, i2 = np.triu_indices(w.size)
    return np.concatenate([w, w[i1] * w[i2]])


def expand_sequence(signal: np.ndarray, memory: int) -> np.ndarray:
    """Expand a whole input sequence at once.

    Returns an ``(N, L)`` matrix whose row ``n`` is the canonical expansion
    of the delay window ending at sample ``n``.  Pre-history is zero.
    """
    s = np.asarray(signal, dtype=np.float64).ravel()
    if not np.all(np.isfinite(s)):
        raise ValueError("input signal contains non-finite samples")
    m = int(memory)
    if m < 1:
        raise ValueError(f"memory must be a positive integer, got {memory!r}")
    padded = np.concatenate([np.zeros(m - 1), s])
    windows = sliding_window_view(padded, m)[:, ::-1]  # newest first
    i1, i2 = np.triu_indices(m)
    return np.concatenate([windows, windows[:, i1] * windows[:, i2]], axis=1)


class DelayLine:
    """Newest-first window over the last ``memory`` input samples.

    The window starts at all zeros; each :meth:`push` shifts it by one and
    inserts the new sample at the front.
    """

    def __init__(self, memory: int):
        m = int(memory)
        if m < 1:
            raise ValueError(f"memory must be a positive integer, got {memory!r}")
        self.memory = m
        self._window = np.zeros(m)

    @property
    def window(self) -> np.ndarray:
        """Copy of the current window, newest sample first."""
        return self._window.copy()

    def push(self, x_new: float) -> None:
        if not np.isfinite(x_new):
            raise ValueError(f"new sample must be finite, got {x_new!r}")
        self._window = np.roll(self._window, 1)
        self._window[0] = float(x_new)

    def push_and_expand(self, x_new: float) -> np.ndarray:
        """Push one sample and return the expansion of the updated window."""
        self.push(x_new)
        return expand_window(self._window)


def filter_output(kernel: np.ndarray, expanded: np.ndarray) -> float:
    """Inner product of a kernel vector with an expanded regressor."""
    k = np.asarray(kernel, dtype=np.float64).ravel()
    x = np.asarray(expanded, dtype=np.float64).ravel()
    if k.size != x.size:
        raise ValueError(f"length mismatch: kernel has {k.size}, regressor has {x.size}")
    return float(k @ x)


def split_kernel(kernel: np.ndarray, memory: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a kernel vector into its linear taps and flat quadratic taps.

    The quadratic part keeps the canonical (m1, m2) lexicographic order;
    use :func:`quadratic_index_pairs` to map entries back to lag pairs.
    """
    k = np.asarray(kernel, dtype=np.float64).ravel()
    m = int(memory)
    if k.size != expanded_length(m):
        raise ValueError(
            f"kernel length {k.size} does not match expanded length {expanded_length(m)} for memory {m}"
        )
    return k[:m].copy(), k[m:].copy()


def wgn_output_power(kernel: np.ndarray, memory: int) -> float:
    """Mean squared output of the kernel driven by unit-variance white Gaussian input.

    Computed in closed form from Gaussian moments.  Note the squared terms
    give the output a non-zero mean (the sum of diagonal quadratic taps);
    the returned value is the raw second moment including that offset.
    """
    h1, quad = split_kernel(kernel, memory)
    i1, i2 = np.triu_indices(int(memory))
    diag = quad[i1 == i2]
    return float(h1 @ h1 + np.sum(diag) ** 2 + quad @ quad + diag @ diag)


def load_plant(path) -> tuple[int, np.ndarray]:
    """Read a plant file: a ``M=<int>`` header then one coefficient per line.

    Returns ``(memory, kernel)``.  Raises :class:`PlantFileError` with the
    offending line number on any malformed content.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise PlantFileError(f"{path}: empty plant file")
    header = lines[0].strip()
    if not header.startswith("M="):
        raise PlantFileError(f"{path}:1: expected header 'M=<int>', got {header!r}")
    try:
        memory = int(header[2:])
    except ValueError:
        raise PlantFileError(f"{path}:1: malformed memory in header {header!r}") from None
    if memory < 1:
        raise PlantFileError(f"{path}:1: memory must be >= 1, got {memory}")
    length = expanded_length(memory)

    values = []
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError:
            raise PlantFileError(f"{path}:{lineno}: not a coefficient: {text!r}") from None
        if not np.isfinite(values[-1]):
            raise PlantFileError(f"{path}:{lineno}: coefficient must be finite")
    if len(values) != length:
        raise PlantFileError(
            f"{path}: expected {length} coefficients for M={memory}, found {len(values)}"
        )
    return memory, np.asarray(values)


def save_plant(path, memory: int, kernel: np.ndarray) -> None:
    """Write a kernel in the plant-file format read by :func:`load_plant`."""
    k = np.asarray(kernel, dtype=np.float64).ravel()
    if k.size != expanded_length(int(memory)):
        raise ValueError(
            f"kernel length {k.size} does not match expanded length for memory {memory}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"M={int(memory)}\n")
        for v in k:
            fh.write(f"{v!r}\n")
