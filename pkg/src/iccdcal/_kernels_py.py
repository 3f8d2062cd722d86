"""Pure-numpy kernels, bit-identical to the compiled versions.

Float results match the C extension exactly because both sides perform the
same multiplications and additions in the same order on the same float64
inputs (the extension is built with -ffp-contract=off, numpy never fuses).
Integer reductions are exact by construction.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def deposit_splats(acc, px, py, amp, wx, wy):
    """Add separable charge splats into acc.

    Event e deposits amp[e] * wx[e, j] * wy[e, i] at pixel
    (px[e] - R + j, py[e] - R + i), R = (K - 1) // 2, skipping out-of-frame
    pixels.  Association is fixed: (amp * wx) first, then * wy.
    """
    h, w = acc.shape
    k = wx.shape[1]
    r = (k - 1) // 2
    for e in range(px.shape[0]):
        x0 = px[e] - r
        y0 = py[e] - r
        jlo, jhi = max(0, -x0), min(k, w - x0)
        ilo, ihi = max(0, -y0), min(k, h - y0)
        if jlo >= jhi or ilo >= ihi:
            continue
        row = amp[e] * wx[e, jlo:jhi]
        acc[y0 + ilo:y0 + ihi, x0 + jlo:x0 + jhi] += np.outer(wy[e, ilo:ihi], row)


def finalize_frame(acc, baseline, noise, out):
    """out = clip(rint(acc + baseline [+ noise]), 0, 65535) as uint16."""
    total = acc + baseline
    if noise is not None:
        total = total + noise
    np.rint(total, out=total)
    np.clip(total, 0.0, 65535.0, out=total)
    out[...] = total.astype(np.uint16)


def region_max_q(frames, bq4, x0, y0, w, h, out):
    """Per-frame maximum of q = 4*value - bq4 over a pixel rectangle."""
    q = 4 * frames[:, y0:y0 + h, x0:x0 + w].astype(np.int32) - bq4[y0:y0 + h, x0:x0 + w]
    out[...] = q.max(axis=(1, 2))


def region_hist_q(frames, bq4, x0, y0, w, h, hist, qmin):
    """Histogram of q = 4*value - bq4 over a rectangle, binned as q - qmin."""
    q = 4 * frames[:, y0:y0 + h, x0:x0 + w].astype(np.int64) - bq4[y0:y0 + h, x0:x0 + w]
    hist += np.bincount((q - qmin).ravel(), minlength=hist.shape[0])


def pixel_click_joint(frames, bq4, s4, refbits, clicks, joint):
    """Accumulate per-pixel click totals and clicks coincident with ref.

    refbits[n] = 1 marks frames whose reference detector clicked; clicks and
    joint are int64 (height, width) accumulators updated in place.
    """
    hit = (4 * frames.astype(np.int32) - bq4) > s4
    clicks += hit.sum(axis=0, dtype=np.int64)
    sel = refbits.view(np.bool_)
    joint += hit[sel].sum(axis=0, dtype=np.int64)
