"""Pure-Python trajectory kernel.

Reference implementation and fallback for ``_kernels.pyx``. Both run the same
floating-point operations in the same order against the same libm, so for a
given set of stream states they produce bit-identical output.

Step constants are packed by :func:`microswarm.dynamics.step_constants`:
``(v, dt, sigma_t, sigma_r, omega_dt, p_tumble, cos_wdt, sin_wdt, kx, ky, kz)``.
"""

import math

from .stochastics import Stream

ABP, RTP, CHIRAL_ABP, PBP = 0, 1, 2, 3

BACKEND = "python"


def step2d(model, x, y, phi, c, s):
    v, dt, sig_t, sig_r, wdt, p_tumble = c[0], c[1], c[2], c[3], c[4], c[5]
    gx = s.gaussian()
    gy = s.gaussian()
    x = (x + (v * math.cos(phi)) * dt) + sig_t * gx
    y = (y + (v * math.sin(phi)) * dt) + sig_t * gy
    if model == RTP:
        if s.uniform() < p_tumble:
            phi = s.uniform_angle()
    else:
        phi = (phi + wdt) + sig_r * s.gaussian()
    return x, y, phi


def step3d(model, p, h, c, s):
    v, dt, sig_t, sig_r, p_tumble = c[0], c[1], c[2], c[3], c[5]
    px, py, pz = p
    hx, hy, hz = h
    g1 = s.gaussian()
    g2 = s.gaussian()
    g3 = s.gaussian()
    px = (px + (v * hx) * dt) + sig_t * g1
    py = (py + (v * hy) * dt) + sig_t * g2
    pz = (pz + (v * hz) * dt) + sig_t * g3
    if model == RTP:
        if s.uniform() < p_tumble:
            hx, hy, hz = s.unit_vector3()
        return (px, py, pz), (hx, hy, hz)
    if model == CHIRAL_ABP:
        cw, sw, kx, ky, kz = c[6], c[7], c[8], c[9], c[10]
        kdh = (kx * hx + ky * hy) + kz * hz
        one_m = 1.0 - cw
        nx = (hx * cw + (ky * hz - kz * hy) * sw) + (kx * kdh) * one_m
        ny = (hy * cw + (kz * hx - kx * hz) * sw) + (ky * kdh) * one_m
        nz = (hz * cw + (kx * hy - ky * hx) * sw) + (kz * kdh) * one_m
        hx, hy, hz = nx, ny, nz
    g4 = s.gaussian()
    g5 = s.gaussian()
    g6 = s.gaussian()
    # Tangent-plane kick applied along the great circle (exponential map);
    # adding it linearly and renormalizing under-diffuses by ~6% at dt=0.01.
    dot = (hx * g4 + hy * g5) + hz * g6
    wx = sig_r * (g4 - dot * hx)
    wy = sig_r * (g5 - dot * hy)
    wz = sig_r * (g6 - dot * hz)
    theta = math.sqrt((wx * wx + wy * wy) + wz * wz)
    if theta > 0.0:
        ct = math.cos(theta)
        st = math.sin(theta) / theta
        hx = hx * ct + wx * st
        hy = hy * ct + wy * st
        hz = hz * ct + wz * st
    norm = math.sqrt((hx * hx + hy * hy) + hz * hz)
    return (px, py, pz), (hx / norm, hy / norm, hz / norm)


def run_2d(
    model, c, n_steps, record_steps, draw_initial, target,
    pos, phi, rng_state, rng_has_spare, rng_spare,
    capture_step, pos_out, orient_out,
):
    """Advance every trajectory in the batch; arrays are updated in place.

    ``target`` is ``(cx, cy, cz, radius)`` or ``None``. ``pos_out`` and
    ``orient_out`` may be ``None`` to skip recording.
    """
    n_rec = len(record_steps)
    has_target = target is not None
    if has_target:
        cx, cy, _, a = target
        a2 = a * a
    for i in range(len(rng_state)):
        s = Stream(int(rng_state[i]), bool(rng_has_spare[i]), float(rng_spare[i]))
        x = float(pos[i, 0])
        y = float(pos[i, 1])
        th = s.uniform_angle() if draw_initial else float(phi[i])
        cap = -1
        if has_target:
            dx = x - cx
            dy = y - cy
            if dx * dx + dy * dy <= a2:
                cap = 0
        j = 0
        k = 0
        while True:
            while j < n_rec and record_steps[j] == k:
                if pos_out is not None:
                    pos_out[i, j, 0] = x
                    pos_out[i, j, 1] = y
                if orient_out is not None:
                    orient_out[i, j] = th
                j += 1
            if k == n_steps or cap >= 0:
                break
            x, y, th = step2d(model, x, y, th, c, s)
            k += 1
            if has_target:
                dx = x - cx
                dy = y - cy
                if dx * dx + dy * dy <= a2:
                    cap = k
        while j < n_rec:
            if pos_out is not None:
                pos_out[i, j, 0] = x
                pos_out[i, j, 1] = y
            if orient_out is not None:
                orient_out[i, j] = th
            j += 1
        pos[i, 0] = x
        pos[i, 1] = y
        phi[i] = th
        capture_step[i] = cap
        rng_state[i] = s.state
        rng_has_spare[i] = s.has_spare
        rng_spare[i] = s.spare


def run_3d(
    model, c, n_steps, record_steps, draw_initial, target,
    pos, heading, rng_state, rng_has_spare, rng_spare,
    capture_step, pos_out, orient_out,
):
    """3D counterpart of :func:`run_2d`; ``heading`` has shape (n, 3)."""
    n_rec = len(record_steps)
    has_target = target is not None
    if has_target:
        cx, cy, cz, a = target
        a2 = a * a
    for i in range(len(rng_state)):
        s = Stream(int(rng_state[i]), bool(rng_has_spare[i]), float(rng_spare[i]))
        p = (float(pos[i, 0]), float(pos[i, 1]), float(pos[i, 2]))
        if draw_initial:
            h = s.unit_vector3()
        else:
            h = (float(heading[i, 0]), float(heading[i, 1]), float(heading[i, 2]))
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
            while j < n_rec and record_steps[j] == k:
                if pos_out is not None:
                    pos_out[i, j] = p
                if orient_out is not None:
                    orient_out[i, j] = h
                j += 1
            if k == n_steps or cap >= 0:
                break
            p, h = step3d(model, p, h, c, s)
            k += 1
            if has_target:
                dx = p[0] - cx
                dy = p[1] - cy
                dz = p[2] - cz
                if (dx * dx + dy * dy) + dz * dz <= a2:
                    cap = k
        while j < n_rec:
            if pos_out is not None:
                pos_out[i, j] = p
            if orient_out is not None:
                orient_out[i, j] = h
            j += 1
        pos[i] = p
        heading[i] = h
        capture_step[i] = cap
        rng_state[i] = s.state
        rng_has_spare[i] = s.has_spare
        rng_spare[i] = s.spare
