"""Dense per-point kernels, with numba acceleration and a pure-numpy fallback.

Every kernel exists twice: a numba ``@njit`` version compiled on first use and
a vectorized numpy version with identical semantics.  The active backend is
chosen by the ``LOGICGEO_BACKEND`` environment variable (``auto``, ``numba``,
or ``numpy``; default ``auto`` picks numba when importable) and can be
overridden in-process with :func:`set_backend` or the :func:`use_backend`
context manager, which is what the benchmark uses to time both paths.

Point spaces are indexed big-endian: a point over the ordered context
``(x_1, ..., x_k)`` with values ``v_j`` in an algebra of size ``n`` has index
``sum(v_j * n**(k-1-j))``.  All kernels follow that convention.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from typing import Iterator

import numpy as np

ENV_VAR = "LOGICGEO_BACKEND"

_CHOICES = ("auto", "numba", "numpy")
_active: str | None = None
_numba_fns: dict[str, object] | None = None


def _resolve(choice: str) -> str:
    if choice not in _CHOICES:
        raise ValueError(
            f"{ENV_VAR} must be one of {_CHOICES}, got {choice!r}"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise RuntimeError(
                "numba backend requested but numba is not installed"
            ) from None
        return "numpy"
    return "numba"


def active_backend() -> str:
    """The backend that will run the next kernel call: 'numba' or 'numpy'."""
    global _active
    if _active is None:
        _active = _resolve(os.environ.get(ENV_VAR, "auto").lower())
    return _active


def set_backend(name: str) -> None:
    global _active
    _active = _resolve(name)


@contextmanager
def use_backend(name: str) -> Iterator[None]:
    global _active
    prev = active_backend()
    set_backend(name)
    try:
        yield
    finally:
        _active = prev


def _strides(n: int, k: int) -> np.ndarray:
    out = np.empty(k, dtype=np.int64)
    s = 1
    for j in range(k - 1, -1, -1):
        out[j] = s
        s *= n
    return out


# ---------------------------------------------------------------------------
# numpy implementations

def _eval_postfix_np(code, arities, offsets, tables, n, k, size):
    strides = _strides(n, k)
    idxs = np.arange(size, dtype=np.int64)
    stack: list[np.ndarray] = []
    for c in code:
        if c < 0:
            j = -int(c) - 1
            stack.append(((idxs // strides[j]) % n).astype(np.uint8))
        else:
            ar = int(arities[c])
            off = int(offsets[c])
            if ar == 0:
                stack.append(np.full(size, tables[off], dtype=np.uint8))
            else:
                acc = stack[-ar].astype(np.int64)
                for a in stack[len(stack) - ar + 1:]:
                    acc = acc * n + a
                del stack[-ar:]
                stack.append(tables[off + acc])
    return stack[0]


def _permute_digits_np(perm, n, k, size):
    strides = _strides(n, k)
    idxs = np.arange(size, dtype=np.int64)
    out = np.zeros(size, dtype=np.int64)
    for j in range(k):
        digit = (idxs // strides[j]) % n
        out += perm[digit] * strides[j]
    return out


def _pack_columns_np(cols, n, size):
    acc = np.zeros(size, dtype=np.int64)
    for row in cols:
        acc = acc * n + row
    return acc


# ---------------------------------------------------------------------------
# numba implementations, compiled lazily so that importing this module never
# pays the jit cost when the numpy backend is selected.

def _load_numba() -> dict[str, object]:
    global _numba_fns
    if _numba_fns is not None:
        return _numba_fns
    from numba import njit

    @njit(cache=True)
    def eval_postfix_nb(code, arities, offsets, tables, n, k, size):  # pragma: no cover
        strides = np.empty(k, dtype=np.int64)
        s = 1
        for j in range(k - 1, -1, -1):
            strides[j] = s
            s *= n
        out = np.empty(size, dtype=np.uint8)
        stack = np.empty(len(code) + 1, dtype=np.int64)
        for p in range(size):
            sp = 0
            for ci in range(len(code)):
                c = code[ci]
                if c < 0:
                    j = -c - 1
                    stack[sp] = (p // strides[j]) % n
                    sp += 1
                else:
                    ar = arities[c]
                    acc = 0
                    for t in range(ar):
                        acc = acc * n + stack[sp - ar + t]
                    sp -= ar
                    stack[sp] = tables[offsets[c] + acc]
                    sp += 1
            out[p] = stack[0]
        return out

    @njit(cache=True)
    def permute_digits_nb(perm, n, k, size):  # pragma: no cover
        strides = np.empty(k, dtype=np.int64)
        s = 1
        for j in range(k - 1, -1, -1):
            strides[j] = s
            s *= n
        out = np.empty(size, dtype=np.int64)
        for p in range(size):
            q = 0
            for j in range(k):
                d = (p // strides[j]) % n
                q += perm[d] * strides[j]
            out[p] = q
        return out

    @njit(cache=True)
    def pack_columns_nb(cols, n, size):  # pragma: no cover
        m = cols.shape[0]
        out = np.zeros(size, dtype=np.int64)
        for p in range(size):
            acc = 0
            for i in range(m):
                acc = acc * n + cols[i, p]
            out[p] = acc
        return out

    _numba_fns = {
        "eval_postfix": eval_postfix_nb,
        "permute_digits": permute_digits_nb,
        "pack_columns": pack_columns_nb,
    }
    return _numba_fns


# ---------------------------------------------------------------------------
# public dispatchers

def eval_postfix(
    code: np.ndarray,
    arities: np.ndarray,
    offsets: np.ndarray,
    tables: np.ndarray,
    n: int,
    k: int,
    size: int,
) -> np.ndarray:
    """Evaluate a postfix term program at every point of the space.

    ``code`` entries: ``-(j+1)`` pushes coordinate j of the point; ``c >= 0``
    applies the operation instance c, popping ``arities[c]`` values and
    indexing the flat table slice starting at ``offsets[c]`` big-endian.
    Returns one carrier value per point as uint8.
    """
    if active_backend() == "numba":
        fn = _load_numba()["eval_postfix"]
        return fn(code, arities, offsets, tables, n, k, size)
    return _eval_postfix_np(code, arities, offsets, tables, n, k, size)


def permute_digits(perm: np.ndarray, n: int, k: int, size: int) -> np.ndarray:
    """Index map of the coordinatewise action of a carrier permutation.

    Entry p is the index of the point obtained by applying ``perm`` to every
    coordinate of point p.
    """
    if active_backend() == "numba":
        fn = _load_numba()["permute_digits"]
        return fn(perm, n, k, size)
    return _permute_digits_np(perm, n, k, size)


def pack_columns(cols: np.ndarray, n: int, size: int) -> np.ndarray:
    """Big-endian pack of value columns (rows = coordinates) into indices."""
    if active_backend() == "numba":
        fn = _load_numba()["pack_columns"]
        return fn(cols, n, size)
    return _pack_columns_np(cols, n, size)
