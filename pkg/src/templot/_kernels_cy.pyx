# Compiled implementations of the per-pixel kernels. Must stay bit-identical
# to _kernels_py: integer bookkeeping everywhere, f64 neighbor averages of
# 8-bit values are exact, rint matches np.rint (round half to even).

import numpy as np

cimport numpy as cnp
from libc.math cimport rint

cnp.import_array()

BACKEND = "cy"


def rle_encode(flat):
    cdef const cnp.uint8_t[::1] f = np.ascontiguousarray(flat, dtype=np.uint8)
    cdef Py_ssize_t n = f.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    out = np.empty(n + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t i
    cdef cnp.uint8_t cur = 0
    cdef cnp.int64_t run = 0
    if f[0] != 0:
        o[0] = 0
        k = 1
        cur = 1
    for i in range(n):
        if f[i] == cur:
            run += 1
        else:
            o[k] = run
            k += 1
            cur = f[i]
            run = 1
    o[k] = run
    k += 1
    return out[:k].copy()


def rle_decode(runs, size):
    cdef const cnp.int64_t[::1] r = np.ascontiguousarray(runs, dtype=np.int64)
    cdef Py_ssize_t nruns = r.shape[0]
    cdef Py_ssize_t n = size
    out = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] o = out
    cdef Py_ssize_t pos = 0
    cdef Py_ssize_t i, j
    cdef cnp.uint8_t val = 0
    cdef cnp.int64_t total = 0
    for i in range(nruns):
        total += r[i]
    if total != n:
        raise ValueError(f"runs cover {total} pixels, expected {n}")
    for i in range(nruns):
        if val:
            for j in range(r[i]):
                o[pos + j] = 1
        pos += r[i]
        val = 1 - val
    return out


def joint_hist(pixels, bins):
    cdef const cnp.uint8_t[:, ::1] p = np.ascontiguousarray(pixels, dtype=np.uint8)
    if p.shape[1] != 3:
        raise ValueError("pixels must be (n, 3)")
    cdef int B = bins
    out = np.zeros(B * B * B, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef Py_ssize_t i, n = p.shape[0]
    cdef Py_ssize_t idx
    for i in range(n):
        idx = ((<Py_ssize_t> p[i, 0] * B) // 256 * B
               + (<Py_ssize_t> p[i, 1] * B) // 256) * B \
              + (<Py_ssize_t> p[i, 2] * B) // 256
        o[idx] += 1
    return out


cdef _morph(cnp.uint8_t[:, ::1] src, cnp.uint8_t[:, ::1] tmp, cnp.uint8_t[:, ::1] dst, bint is_dilate):
    # separable 3x3 square morphology on 0/1 masks: horizontal then vertical
    # bitwise pass, branch-free in the interior; pixels beyond the border
    # count as background for both operations
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    cdef Py_ssize_t y, x
    if is_dilate:
        for y in range(h):
            if w == 1:
                tmp[y, 0] = src[y, 0]
            else:
                tmp[y, 0] = src[y, 0] | src[y, 1]
                for x in range(1, w - 1):
                    tmp[y, x] = src[y, x - 1] | src[y, x] | src[y, x + 1]
                tmp[y, w - 1] = src[y, w - 2] | src[y, w - 1]
        for x in range(w):
            if h == 1:
                dst[0, x] = tmp[0, x]
            else:
                dst[0, x] = tmp[0, x] | tmp[1, x]
        for y in range(1, h - 1):
            for x in range(w):
                dst[y, x] = tmp[y - 1, x] | tmp[y, x] | tmp[y + 1, x]
        if h > 1:
            for x in range(w):
                dst[h - 1, x] = tmp[h - 2, x] | tmp[h - 1, x]
    else:
        for y in range(h):
            tmp[y, 0] = 0
            for x in range(1, w - 1):
                tmp[y, x] = src[y, x - 1] & src[y, x] & src[y, x + 1]
            tmp[y, w - 1] = 0
        for x in range(w):
            dst[0, x] = 0
            dst[h - 1, x] = 0
        for y in range(1, h - 1):
            for x in range(w):
                dst[y, x] = tmp[y - 1, x] & tmp[y, x] & tmp[y + 1, x]


def dilate(mask, iterations):
    m = np.ascontiguousarray(np.asarray(mask) != 0, dtype=np.uint8)
    tmp = np.empty_like(m)
    cdef int it
    for it in range(iterations):
        nxt = np.empty_like(m)
        _morph(m, tmp, nxt, True)
        m = nxt
    return m


def erode(mask, iterations):
    m = np.ascontiguousarray(np.asarray(mask) != 0, dtype=np.uint8)
    tmp = np.empty_like(m)
    cdef int it
    for it in range(iterations):
        nxt = np.empty_like(m)
        _morph(m, tmp, nxt, False)
        m = nxt
    return m


def inpaint(image, mask, max_passes):
    img = np.array(image, dtype=np.uint8, copy=True)
    if img.ndim != 3:
        raise ValueError("image must be (h, w, c)")
    m = np.ascontiguousarray(np.asarray(mask) != 0, dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] im = img
    cdef cnp.uint8_t[:, ::1] mk = m
    cdef Py_ssize_t h = im.shape[0], w = im.shape[1], c = im.shape[2]
    if mk.shape[0] != h or mk.shape[1] != w:
        raise ValueError("mask shape must match image")
    cdef Py_ssize_t remaining = 0
    cdef Py_ssize_t y, x, dy, dx, yy, xx, ch
    cdef Py_ssize_t passes = 0, filled_count
    cdef double cnt
    cdef double s[8]
    cdef Py_ssize_t i
    for y in range(h):
        for x in range(w):
            if mk[y, x]:
                remaining += 1
    fy = np.empty(h * w, dtype=np.intp)
    fx = np.empty(h * w, dtype=np.intp)
    fv = np.empty((h * w, 8), dtype=np.uint8)
    cdef cnp.intp_t[::1] fyv = fy
    cdef cnp.intp_t[::1] fxv = fx
    cdef cnp.uint8_t[:, ::1] fvv = fv
    while remaining > 0 and passes < max_passes:
        passes += 1
        filled_count = 0
        for y in range(h):
            for x in range(w):
                if not mk[y, x]:
                    continue
                cnt = 0.0
                for ch in range(c):
                    s[ch] = 0.0
                for dy in range(-1, 2):
                    for dx in range(-1, 2):
                        if dy == 0 and dx == 0:
                            continue
                        yy = y + dy
                        xx = x + dx
                        if 0 <= yy < h and 0 <= xx < w and not mk[yy, xx]:
                            cnt += 1.0
                            for ch in range(c):
                                s[ch] += <double> im[yy, xx, ch]
                if cnt > 0.0:
                    fyv[filled_count] = y
                    fxv[filled_count] = x
                    for ch in range(c):
                        fvv[filled_count, ch] = <cnp.uint8_t> rint(s[ch] / cnt)
                    filled_count += 1
        if filled_count == 0:
            break
        for i in range(filled_count):
            y = fyv[i]
            x = fxv[i]
            mk[y, x] = 0
            for ch in range(c):
                im[y, x, ch] = fvv[i, ch]
        remaining -= filled_count
    return img, int(remaining)
