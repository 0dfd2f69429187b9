# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: depth-grid unprojection, voxel index computation,
and edit distance. Mirrors voxcover._kernels._fallback exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

BACKEND = "native"


def unproject_grid(cnp.float64_t[:, ::1] depth, cnp.float64_t[:, ::1] conf,
                   double fx, double fy, double cx, double cy,
                   cnp.float64_t[:, ::1] world_from_cam, Py_ssize_t stride):
    cdef Py_ssize_t h = depth.shape[0]
    cdef Py_ssize_t w = depth.shape[1]
    cdef Py_ssize_t nv = (h + stride - 1) // stride
    cdef Py_ssize_t nu = (w + stride - 1) // stride

    out_pts = np.empty((nv * nu, 3), dtype=np.float64)
    out_conf = np.empty(nv * nu, dtype=np.float64)
    cdef cnp.float64_t[:, ::1] pts = out_pts
    cdef cnp.float64_t[::1] cf = out_conf

    cdef double m00 = world_from_cam[0, 0], m01 = world_from_cam[0, 1]
    cdef double m02 = world_from_cam[0, 2], m03 = world_from_cam[0, 3]
    cdef double m10 = world_from_cam[1, 0], m11 = world_from_cam[1, 1]
    cdef double m12 = world_from_cam[1, 2], m13 = world_from_cam[1, 3]
    cdef double m20 = world_from_cam[2, 0], m21 = world_from_cam[2, 1]
    cdef double m22 = world_from_cam[2, 2], m23 = world_from_cam[2, 3]

    cdef Py_ssize_t u, v, n = 0
    cdef double d, xc, yc, zc
    for v in range(0, h, stride):
        for u in range(0, w, stride):
            d = depth[v, u]
            if d == 0.0:
                continue
            xc = d * (u - cx) / fx
            yc = d * (v - cy) / fy
            zc = d
            pts[n, 0] = m00 * xc + m01 * yc + m02 * zc + m03
            pts[n, 1] = m10 * xc + m11 * yc + m12 * zc + m13
            pts[n, 2] = m20 * xc + m21 * yc + m22 * zc + m23
            cf[n] = conf[v, u]
            n += 1
    return out_pts[:n].copy(), out_conf[:n].copy()


def voxel_grid_indices(cnp.float64_t[:, ::1] points, cnp.float64_t[::1] min_corner,
                       double delta, cnp.int64_t[::1] dims):
    cdef Py_ssize_t n = points.shape[0]
    out = np.empty((n, 3), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] idx = out
    cdef double mn0 = min_corner[0], mn1 = min_corner[1], mn2 = min_corner[2]
    cdef cnp.int64_t d0 = dims[0] - 1, d1 = dims[1] - 1, d2 = dims[2] - 1
    cdef Py_ssize_t i
    cdef cnp.int64_t ix, iy, iz
    for i in range(n):
        ix = <cnp.int64_t>floor((points[i, 0] - mn0) / delta)
        iy = <cnp.int64_t>floor((points[i, 1] - mn1) / delta)
        iz = <cnp.int64_t>floor((points[i, 2] - mn2) / delta)
        idx[i, 0] = 0 if ix < 0 else (d0 if ix > d0 else ix)
        idx[i, 1] = 0 if iy < 0 else (d1 if iy > d1 else iy)
        idx[i, 2] = 0 if iz < 0 else (d2 if iz > d2 else iz)
    return out


def levenshtein(str a, str b, int substitution_cost=1):
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if len(b) == 0:
        return len(a)

    cdef const cnp.uint32_t[::1] xa = np.frombuffer(a.encode("utf-32-le"), dtype=np.uint32)
    cdef const cnp.uint32_t[::1] xb = np.frombuffer(b.encode("utf-32-le"), dtype=np.uint32)
    cdef Py_ssize_t la = xa.shape[0], lb = xb.shape[0]

    buf_prev = np.arange(lb + 1, dtype=np.int64)
    buf_cur = np.empty(lb + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] prev = buf_prev
    cdef cnp.int64_t[::1] cur = buf_cur
    cdef cnp.int64_t[::1] tmp

    cdef Py_ssize_t i, j
    cdef cnp.int64_t sub, ins, dele, best
    cdef int sc = substitution_cost
    for i in range(1, la + 1):
        cur[0] = i
        for j in range(1, lb + 1):
            sub = prev[j - 1] + (0 if xa[i - 1] == xb[j - 1] else sc)
            ins = cur[j - 1] + 1
            dele = prev[j] + 1
            best = sub
            if ins < best:
                best = ins
            if dele < best:
                best = dele
            cur[j] = best
        tmp = prev
        prev = cur
        cur = tmp
    return int(prev[lb])
