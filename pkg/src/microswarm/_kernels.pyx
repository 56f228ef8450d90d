# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trajectory kernel; line-for-line mirror of ``_kernels_py``."""

from libc.math cimport cos, sin, sqrt, log, fmax
from libc.stdint cimport uint64_t, int64_t, uint8_t

import numpy as np

BACKEND = "cython"

cdef enum:
    ABP = 0
    RTP = 1
    CHIRAL_ABP = 2
    PBP = 3

cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef struct Rng:
    uint64_t state
    int has_spare
    double spare


cdef struct Consts:
    double v, dt, sig_t, sig_r, wdt, p_tumble, cw, sw, kx, ky, kz


cdef inline uint64_t next_u64(Rng* r) noexcept nogil:
    cdef uint64_t z
    r.state = r.state + <uint64_t>0x9E3779B97F4A7C15ULL
    z = r.state
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double uniform(Rng* r) noexcept nogil:
    return <double>(next_u64(r) >> 11) * INV_2_53


cdef inline double gaussian(Rng* r) noexcept nogil:
    cdef double u, v, s, m
    if r.has_spare:
        r.has_spare = 0
        return r.spare
    while True:
        u = 2.0 * uniform(r) - 1.0
        v = 2.0 * uniform(r) - 1.0
        s = u * u + v * v
        if 0.0 < s < 1.0:
            break
    m = sqrt((-2.0 * log(s)) / s)
    r.spare = v * m
    r.has_spare = 1
    return u * m


cdef inline void unit_vector3(Rng* r, double* h) noexcept nogil:
    cdef double z = 2.0 * uniform(r) - 1.0
    cdef double az = TWO_PI * uniform(r)
    cdef double rho = sqrt(fmax(0.0, 1.0 - z * z))
    h[0] = rho * cos(az)
    h[1] = rho * sin(az)
    h[2] = z


cdef inline void step2d(int model, double* x, double* y, double* phi,
                        Consts* c, Rng* s) noexcept nogil:
    cdef double gx = gaussian(s)
    cdef double gy = gaussian(s)
    x[0] = (x[0] + (c.v * cos(phi[0])) * c.dt) + c.sig_t * gx
    y[0] = (y[0] + (c.v * sin(phi[0])) * c.dt) + c.sig_t * gy
    if model == RTP:
        if uniform(s) < c.p_tumble:
            phi[0] = TWO_PI * uniform(s)
    else:
        phi[0] = (phi[0] + c.wdt) + c.sig_r * gaussian(s)


cdef inline void step3d(int model, double* p, double* h, Consts* c, Rng* s) noexcept nogil:
    cdef double g1, g2, g3, g4, g5, g6, dot, norm, kdh, one_m, nx, ny, nz
    cdef double wx, wy, wz, theta, ct, st
    cdef double hx = h[0]
    cdef double hy = h[1]
    cdef double hz = h[2]
    g1 = gaussian(s)
    g2 = gaussian(s)
    g3 = gaussian(s)
    p[0] = (p[0] + (c.v * hx) * c.dt) + c.sig_t * g1
    p[1] = (p[1] + (c.v * hy) * c.dt) + c.sig_t * g2
    p[2] = (p[2] + (c.v * hz) * c.dt) + c.sig_t * g3
    if model == RTP:
        if uniform(s) < c.p_tumble:
            unit_vector3(s, h)
        return
    if model == CHIRAL_ABP:
        kdh = (c.kx * hx + c.ky * hy) + c.kz * hz
        one_m = 1.0 - c.cw
        nx = (hx * c.cw + (c.ky * hz - c.kz * hy) * c.sw) + (c.kx * kdh) * one_m
        ny = (hy * c.cw + (c.kz * hx - c.kx * hz) * c.sw) + (c.ky * kdh) * one_m
        nz = (hz * c.cw + (c.kx * hy - c.ky * hx) * c.sw) + (c.kz * kdh) * one_m
        hx = nx
        hy = ny
        hz = nz
    g4 = gaussian(s)
    g5 = gaussian(s)
    g6 = gaussian(s)
    dot = (hx * g4 + hy * g5) + hz * g6
    wx = c.sig_r * (g4 - dot * hx)
    wy = c.sig_r * (g5 - dot * hy)
    wz = c.sig_r * (g6 - dot * hz)
    theta = sqrt((wx * wx + wy * wy) + wz * wz)
    if theta > 0.0:
        ct = cos(theta)
        st = sin(theta) / theta
        hx = hx * ct + wx * st
        hy = hy * ct + wy * st
        hz = hz * ct + wz * st
    norm = sqrt((hx * hx + hy * hy) + hz * hz)
    h[0] = hx / norm
    h[1] = hy / norm
    h[2] = hz / norm


cdef Consts _consts(tuple c):
    cdef Consts out
    out.v, out.dt, out.sig_t, out.sig_r, out.wdt, out.p_tumble = c[0], c[1], c[2], c[3], c[4], c[5]
    out.cw, out.sw, out.kx, out.ky, out.kz = c[6], c[7], c[8], c[9], c[10]
    return out


def step2d_py(int model, double x, double y, double phi, tuple c, stream):
    """Single 2D step driven by a Python ``Stream``; used for cross-checks."""
    cdef Consts cc = _consts(c)
    cdef Rng r
    r.state = stream.state
    r.has_spare = stream.has_spare
    r.spare = stream.spare
    step2d(model, &x, &y, &phi, &cc, &r)
    stream.state = r.state
    stream.has_spare = bool(r.has_spare)
    stream.spare = r.spare
    return x, y, phi


def run_2d(int model, tuple c, int64_t n_steps, record_steps, bint draw_initial, target,
           double[:, ::1] pos, double[::1] phi, uint64_t[::1] rng_state,
           uint8_t[::1] rng_has_spare, double[::1] rng_spare, int64_t[::1] capture_step,
           pos_out, orient_out):
    cdef Consts cc = _consts(c)
    cdef int64_t[::1] rec = np.ascontiguousarray(record_steps, dtype=np.int64)
    cdef Py_ssize_t n_rec = rec.shape[0]
    cdef bint has_target = target is not None
    cdef double cx = 0.0, cy = 0.0, a2 = 0.0
    cdef double[:, :, ::1] po
    cdef double[:, ::1] oo
    cdef bint rec_pos = pos_out is not None
    cdef bint rec_orient = orient_out is not None
    if has_target:
        cx = target[0]
        cy = target[1]
        a2 = <double>target[3] * <double>target[3]
    if rec_pos:
        po = pos_out
    if rec_orient:
        oo = orient_out
    cdef Py_ssize_t i, j, n = rng_state.shape[0]
    cdef int64_t k, cap
    cdef double x, y, th, dx, dy
    cdef Rng r
    with nogil:
        for i in range(n):
            r.state = rng_state[i]
            r.has_spare = rng_has_spare[i]
            r.spare = rng_spare[i]
            x = pos[i, 0]
            y = pos[i, 1]
            if draw_initial:
                th = TWO_PI * uniform(&r)
            else:
                th = phi[i]
            cap = -1
            if has_target:
                dx = x - cx
                dy = y - cy
                if dx * dx + dy * dy <= a2:
                    cap = 0
            j = 0
            k = 0
            while True:
                while j < n_rec and rec[j] == k:
                    if rec_pos:
                        po[i, j, 0] = x
                        po[i, j, 1] = y
                    if rec_orient:
                        oo[i, j] = th
                    j += 1
                if k == n_steps or cap >= 0:
                    break
                step2d(model, &x, &y, &th, &cc, &r)
                k += 1
                if has_target:
                    dx = x - cx
                    dy = y - cy
                    if dx * dx + dy * dy <= a2:
                        cap = k
            while j < n_rec:
                if rec_pos:
                    po[i, j, 0] = x
                    po[i, j, 1] = y
                if rec_orient:
                    oo[i, j] = th
                j += 1
            pos[i, 0] = x
            pos[i, 1] = y
            phi[i] = th
            capture_step[i] = cap
            rng_state[i] = r.state
            rng_has_spare[i] = r.has_spare
            rng_spare[i] = r.spare


def run_3d(int model, tuple c, int64_t n_steps, record_steps, bint draw_initial, target,
           double[:, ::1] pos, double[:, ::1] heading, uint64_t[::1] rng_state,
           uint8_t[::1] rng_has_spare, double[::1] rng_spare, int64_t[::1] capture_step,
           pos_out, orient_out):
    cdef Consts cc = _consts(c)
    cdef int64_t[::1] rec = np.ascontiguousarray(record_steps, dtype=np.int64)
    cdef Py_ssize_t n_rec = rec.shape[0]
    cdef bint has_target = target is not None
    cdef double cx = 0.0, cy = 0.0, cz = 0.0, a2 = 0.0
    cdef double[:, :, ::1] po
    cdef double[:, :, ::1] oo
    cdef bint rec_pos = pos_out is not None
    cdef bint rec_orient = orient_out is not None
    if has_target:
        cx = target[0]
        cy = target[1]
        cz = target[2]
        a2 = <double>target[3] * <double>target[3]
    if rec_pos:
        po = pos_out
    if rec_orient:
        oo = orient_out
    cdef Py_ssize_t i, j, d, n = rng_state.shape[0]
    cdef int64_t k, cap
    cdef double p[3]
    cdef double h[3]
    cdef double dx, dy, dz
    cdef Rng r
    with nogil:
        for i in range(n):
            r.state = rng_state[i]
            r.has_spare = rng_has_spare[i]
            r.spare = rng_spare[i]
            for d in range(3):
                p[d] = pos[i, d]
            if draw_initial:
                unit_vector3(&r, h)
            else:
                for d in range(3):
                    h[d] = heading[i, d]
            cap = -1
            if has_target:
                dx = p[0] - cx
                dy = p[1] - cy
                dz = p[2] - cz
                if (dx * dx + dy * dy) + dz * dz <= a2:
                    cap = 0
            j = 0
            k = 0
            while True:
                while j < n_rec and rec[j] == k:
                    for d in range(3):
                        if rec_pos:
                            po[i, j, d] = p[d]
                        if rec_orient:
                            oo[i, j, d] = h[d]
                    j += 1
                if k == n_steps or cap >= 0:
                    break
                step3d(model, p, h, &cc, &r)
                k += 1
                if has_target:
                    dx = p[0] - cx
                    dy = p[1] - cy
                    dz = p[2] - cz
                    if (dx * dx + dy * dy) + dz * dz <= a2:
                        cap = k
            while j < n_rec:
                for d in range(3):
                    if rec_pos:
                        po[i, j, d] = p[d]
                    if rec_orient:
                        oo[i, j, d] = h[d]
                j += 1
            for d in range(3):
                pos[i, d] = p[d]
                heading[i, d] = h[d]
            capture_step[i] = cap
            rng_state[i] = r.state
            rng_has_spare[i] = r.has_spare
            rng_spare[i] = r.spare
