# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled hot loops: splat deposition, frame finalize, click reductions.

Must stay bit-identical to _kernels_py: same operations, same order, no
reassociation (built with -ffp-contract=off so no fused multiply-adds).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport rint

cnp.import_array()

BACKEND_NAME = "compiled"


def deposit_splats(double[:, ::1] acc, const cnp.int64_t[::1] px, const cnp.int64_t[::1] py,
                   const double[::1] amp, const double[:, ::1] wx, const double[:, ::1] wy):
    """Add separable charge splats into acc; see _kernels_py.deposit_splats."""
    cdef Py_ssize_t h = acc.shape[0]
    cdef Py_ssize_t w = acc.shape[1]
    cdef Py_ssize_t n = px.shape[0]
    cdef Py_ssize_t k = wx.shape[1]
    cdef Py_ssize_t r = (k - 1) // 2
    cdef Py_ssize_t e, i, j, x, y
    cdef double t
    for e in range(n):
        for i in range(k):
            y = py[e] - r + i
            if y < 0 or y >= h:
                continue
            for j in range(k):
                x = px[e] - r + j
                if x < 0 or x >= w:
                    continue
                t = amp[e] * wx[e, j]
                acc[y, x] += t * wy[e, i]


def finalize_frame(const double[:, ::1] acc, const double[:, ::1] baseline,
                   object noise, cnp.uint16_t[:, ::1] out):
    """out = clip(rint(acc + baseline [+ noise]), 0, 65535) as uint16."""
    cdef Py_ssize_t h = acc.shape[0]
    cdef Py_ssize_t w = acc.shape[1]
    cdef Py_ssize_t i, j
    cdef double v
    cdef const double[:, ::1] nz
    if noise is None:
        for i in range(h):
            for j in range(w):
                v = rint(acc[i, j] + baseline[i, j])
                if v < 0.0:
                    v = 0.0
                elif v > 65535.0:
                    v = 65535.0
                out[i, j] = <cnp.uint16_t> v
    else:
        nz = noise
        for i in range(h):
            for j in range(w):
                v = rint(acc[i, j] + baseline[i, j] + nz[i, j])
                if v < 0.0:
                    v = 0.0
                elif v > 65535.0:
                    v = 65535.0
                out[i, j] = <cnp.uint16_t> v


def region_max_q(const cnp.uint16_t[:, :, ::1] frames, const cnp.int32_t[:, ::1] bq4,
                 Py_ssize_t x0, Py_ssize_t y0, Py_ssize_t w, Py_ssize_t h,
                 cnp.int32_t[::1] out):
    """Per-frame maximum of q = 4*value - bq4 over a pixel rectangle."""
    cdef Py_ssize_t n, i, j
    cdef cnp.int32_t q, m
    for n in range(frames.shape[0]):
        m = -2147483647
        for i in range(y0, y0 + h):
            for j in range(x0, x0 + w):
                q = 4 * <cnp.int32_t> frames[n, i, j] - bq4[i, j]
                if q > m:
                    m = q
        out[n] = m


def region_hist_q(const cnp.uint16_t[:, :, ::1] frames, const cnp.int32_t[:, ::1] bq4,
                  Py_ssize_t x0, Py_ssize_t y0, Py_ssize_t w, Py_ssize_t h,
                  cnp.int64_t[::1] hist, cnp.int64_t qmin):
    """Histogram of q = 4*value - bq4 over a rectangle, binned as q - qmin."""
    cdef Py_ssize_t n, i, j
    cdef cnp.int64_t q
    for n in range(frames.shape[0]):
        for i in range(y0, y0 + h):
            for j in range(x0, x0 + w):
                q = 4 * <cnp.int64_t> frames[n, i, j] - bq4[i, j]
                hist[q - qmin] += 1


def pixel_click_joint(const cnp.uint16_t[:, :, ::1] frames, const cnp.int32_t[:, ::1] bq4,
                      cnp.int32_t s4, const cnp.uint8_t[::1] refbits,
                      cnp.int64_t[:, ::1] clicks, cnp.int64_t[:, ::1] joint):
    """Accumulate per-pixel click totals and clicks coincident with ref."""
    cdef Py_ssize_t n, i, j
    cdef cnp.int32_t q
    cdef cnp.uint8_t rb
    for n in range(frames.shape[0]):
        rb = refbits[n]
        for i in range(frames.shape[1]):
            for j in range(frames.shape[2]):
                q = 4 * <cnp.int32_t> frames[n, i, j] - bq4[i, j]
                if q > s4:
                    clicks[i, j] += 1
                    if rb:
                        joint[i, j] += 1
