"""Backend selection for the numeric kernels.

Set ``QTB_NUMBA=0`` to force the pure-numpy path. ``QTB_THREADS`` caps the
number of worker threads used for independent optimizer restarts.
"""
import os
from concurrent.futures import ThreadPoolExecutor

_FALSY = {"0", "false", "no", "off"}

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("QTB_NUMBA", "1").strip().lower() not in _FALSY


def max_threads():
    raw = os.environ.get("QTB_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def ordered_map(fn, items):
    """Map ``fn`` over ``items`` keeping input order, threaded if allowed."""
    items = list(items)
    workers = min(max_threads(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
