"""Pure NumPy bilinear affine warp.

Reference implementation of the kernel in ``_warp.pyx``. Both evaluate the
same IEEE double expressions in the same order, so their outputs are
byte-identical; keep them in lockstep when editing either one.
"""

import numpy as np

BORDER_CONSTANT = 0
BORDER_CLAMP = 1
# Inverse-mapped coordinates within this distance of the edge count as in bounds.
EDGE_EPS = 1e-9


def warp_affine(src, out_h, out_w, m00, m01, m02, m10, m11, m12, border, fill):
    """Resample ``src`` (uint8, H x W x C) onto an ``out_h`` x ``out_w`` grid.

    Destination pixel ``(x, y)`` reads the source at
    ``(m00*x + m01*y + m02, m10*x + m11*y + m12)``.
    """
    src = np.ascontiguousarray(src, dtype=np.uint8)
    h, w, c = src.shape
    ys, xs = np.mgrid[0:out_h, 0:out_w].astype(np.float64)
    sx = m00 * xs + m01 * ys + m02
    sy = m10 * xs + m11 * ys + m12

    wmax = float(w - 1)
    hmax = float(h - 1)
    if border == BORDER_CONSTANT:
        outside = (sx < -EDGE_EPS) | (sx > wmax + EDGE_EPS) | (sy < -EDGE_EPS) | (sy > hmax + EDGE_EPS)
    else:
        outside = None
    sx = np.clip(sx, 0.0, wmax)
    sy = np.clip(sy, 0.0, hmax)

    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[:, :, None]
    fy = (sy - y0)[:, :, None]

    fsrc = src.astype(np.float64)
    v00 = fsrc[y0, x0]
    v10 = fsrc[y0, x1]
    v01 = fsrc[y1, x0]
    v11 = fsrc[y1, x1]
    top = v00 * (1.0 - fx) + v10 * fx
    bot = v01 * (1.0 - fx) + v11 * fx
    val = top * (1.0 - fy) + bot * fy

    out = np.floor(val + 0.5)
    np.clip(out, 0.0, 255.0, out=out)
    out = out.astype(np.uint8)
    if outside is not None:
        out[outside] = fill
    return out
