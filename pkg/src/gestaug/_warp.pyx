# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bilinear affine warp. Mirrors ``_warp_py.warp_affine`` exactly."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double EDGE_EPS = 1e-9


def warp_affine(src, Py_ssize_t out_h, Py_ssize_t out_w,
                double m00, double m01, double m02,
                double m10, double m11, double m12,
                int border, int fill):
    cdef const unsigned char[:, :, ::1] s = np.ascontiguousarray(src, dtype=np.uint8)
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1], c = s.shape[2]
    out_arr = np.empty((out_h, out_w, c), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] o = out_arr
    cdef Py_ssize_t x, y, k, x0, y0, x1, y1
    cdef double sx, sy, fx, fy, top, bot, val, xf, yf
    cdef double wmax = <double>(w - 1), hmax = <double>(h - 1)
    cdef bint constant = border == 0

    with nogil:
        for y in range(out_h):
            yf = <double>y
            for x in range(out_w):
                xf = <double>x
                sx = m00 * xf + m01 * yf + m02
                sy = m10 * xf + m11 * yf + m12
                if constant and (sx < -EDGE_EPS or sx > wmax + EDGE_EPS
                                 or sy < -EDGE_EPS or sy > hmax + EDGE_EPS):
                    for k in range(c):
                        o[y, x, k] = <unsigned char>fill
                    continue
                if sx < 0.0:
                    sx = 0.0
                elif sx > wmax:
                    sx = wmax
                if sy < 0.0:
                    sy = 0.0
                elif sy > hmax:
                    sy = hmax
                # sx, sy >= 0 here, so truncation is floor
                x0 = <Py_ssize_t>sx
                y0 = <Py_ssize_t>sy
                x1 = x0 + 1 if x0 + 1 < w else w - 1
                y1 = y0 + 1 if y0 + 1 < h else h - 1
                fx = sx - <double>x0
                fy = sy - <double>y0
                for k in range(c):
                    top = <double>s[y0, x0, k] * (1.0 - fx) + <double>s[y0, x1, k] * fx
                    bot = <double>s[y1, x0, k] * (1.0 - fx) + <double>s[y1, x1, k] * fx
                    # val is non-negative: truncating val + 0.5 is floor(val + 0.5)
                    val = top * (1.0 - fy) + bot * fy + 0.5
                    if val > 255.0:
                        val = 255.0
                    o[y, x, k] = <unsigned char>val
    return out_arr
