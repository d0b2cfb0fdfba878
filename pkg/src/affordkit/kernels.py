"""Hot raster kernels: Bresenham segments and convex polygon fill.

The same Python source backs two execution paths: numba-compiled (default)
and plain interpreted loops over numpy buffers. Set AFFORDKIT_NO_NUMBA=1 to
force the fallback; it is also selected automatically when numba is absent.
Both paths are integer-only and produce bit-identical buffers, which the
render tests and benchmarks/bench_kernels.py rely on.
"""

from __future__ import annotations

import os

import numpy as np


def _draw_segment_impl(buf, x0, y0, x1, y1, r, g, b):
    h = buf.shape[0]
    w = buf.shape[1]
    dx = abs(x1 - x0)
    sx = 1 if x0 < x1 else -1
    dy = -abs(y1 - y0)
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x = x0
    y = y0
    while True:
        if 0 <= x < w and 0 <= y < h:
            buf[y, x, 0] = r
            buf[y, x, 1] = g
            buf[y, x, 2] = b
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy


def _draw_segments_impl(buf, segments, r, g, b):
    for i in range(segments.shape[0]):
        _draw_segment_impl_jitted(
            buf, segments[i, 0], segments[i, 1], segments[i, 2], segments[i, 3], r, g, b
        )


def _fill_convex_polygon_impl(buf, xs, ys, r, g, b):
    # Vertices in CCW order (image coordinates, y down). A pixel is inside
    # iff every edge cross product is >= 0; integer math keeps both backends
    # bit-identical.
    h = buf.shape[0]
    w = buf.shape[1]
    n = xs.shape[0]
    if n < 3:
        return
    ymin = ys[0]
    ymax = ys[0]
    xmin = xs[0]
    xmax = xs[0]
    for i in range(1, n):
        if ys[i] < ymin:
            ymin = ys[i]
        if ys[i] > ymax:
            ymax = ys[i]
        if xs[i] < xmin:
            xmin = xs[i]
        if xs[i] > xmax:
            xmax = xs[i]
    if ymin < 0:
        ymin = 0
    if xmin < 0:
        xmin = 0
    if ymax > h - 1:
        ymax = h - 1
    if xmax > w - 1:
        xmax = w - 1
    for y in range(ymin, ymax + 1):
        for x in range(xmin, xmax + 1):
            inside = True
            for i in range(n):
                j = i + 1
                if j == n:
                    j = 0
                cross = (xs[j] - xs[i]) * (y - ys[i]) - (ys[j] - ys[i]) * (x - xs[i])
                if cross < 0:
                    inside = False
                    break
            if inside:
                buf[y, x, 0] = r
                buf[y, x, 1] = g
                buf[y, x, 2] = b


_want_numba = os.environ.get("AFFORDKIT_NO_NUMBA", "0") not in ("1", "true", "yes")
USING_NUMBA = False
if _want_numba:
    try:
        from numba import njit

        _draw_segment_impl_jitted = njit(cache=True)(_draw_segment_impl)
        _draw_segments_jitted = njit(cache=True)(_draw_segments_impl)
        _fill_convex_polygon_jitted = njit(cache=True)(_fill_convex_polygon_impl)
        USING_NUMBA = True
    except Exception:  # pragma: no cover - exercised only without numba
        USING_NUMBA = False

if not USING_NUMBA:
    _draw_segment_impl_jitted = _draw_segment_impl
    _draw_segments_jitted = _draw_segments_impl
    _fill_convex_polygon_jitted = _fill_convex_polygon_impl


def backend_name() -> str:
    return "numba" if USING_NUMBA else "numpy"


def draw_segments(buf: np.ndarray, segments: np.ndarray, color: tuple[int, int, int]) -> None:
    """Rasterize 1px segments (n, 4) int64 [x0, y0, x1, y1] into an RGB8 buffer in place."""
    segments = np.ascontiguousarray(segments, dtype=np.int64).reshape(-1, 4)
    _draw_segments_jitted(buf, segments, np.uint8(color[0]), np.uint8(color[1]), np.uint8(color[2]))


def fill_convex_polygon(buf: np.ndarray, xs: np.ndarray, ys: np.ndarray, color: tuple[int, int, int]) -> None:
    """Fill a CCW convex polygon (integer image-space vertices) into an RGB8 buffer in place."""
    xs = np.ascontiguousarray(xs, dtype=np.int64)
    ys = np.ascontiguousarray(ys, dtype=np.int64)
    _fill_convex_polygon_jitted(buf, xs, ys, np.uint8(color[0]), np.uint8(color[1]), np.uint8(color[2]))


def warmup() -> None:
    """Trigger JIT compilation so first real render is not billed for it."""
    buf = np.zeros((4, 4, 3), dtype=np.uint8)
    draw_segments(buf, np.array([[0, 0, 3, 3]]), (255, 0, 0))
    fill_convex_polygon(buf, np.array([0, 3, 3]), np.array([0, 0, 3]), (0, 255, 0))
