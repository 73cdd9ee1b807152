"""Numba-compiled numeric kernels behind the public API.

The scalar helpers here are shared between the single-ray operations and the
tile-parallel render loops, so both paths run the same arithmetic. Volumes
arrive as (nz, ny, nx) C-contiguous float64 grids; positions are world-space.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

TILE = 32

# Mode codes shared with the scene module.
MODE_MONO = 0
MODE_SHALLOW = 1
MODE_DEEP = 2

RATE_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# Sampling


@njit(cache=True, inline="always")
def trilinear(grid, sx, sy, sz, x, y, z):
    """Clamped trilinear interpolation at a world-space point."""
    nz, ny, nx = grid.shape
    gx = x / sx
    gy = y / sy
    gz = z / sz
    if gx < 0.0:
        gx = 0.0
    elif gx > nx - 1.0:
        gx = nx - 1.0
    if gy < 0.0:
        gy = 0.0
    elif gy > ny - 1.0:
        gy = ny - 1.0
    if gz < 0.0:
        gz = 0.0
    elif gz > nz - 1.0:
        gz = nz - 1.0
    ix = int(math.floor(gx))
    iy = int(math.floor(gy))
    iz = int(math.floor(gz))
    if ix > nx - 2:
        ix = nx - 2
    if iy > ny - 2:
        iy = ny - 2
    if iz > nz - 2:
        iz = nz - 2
    fx = gx - ix
    fy = gy - iy
    fz = gz - iz
    v000 = grid[iz, iy, ix]
    v100 = grid[iz, iy, ix + 1]
    v010 = grid[iz, iy + 1, ix]
    v110 = grid[iz, iy + 1, ix + 1]
    v001 = grid[iz + 1, iy, ix]
    v101 = grid[iz + 1, iy, ix + 1]
    v011 = grid[iz + 1, iy + 1, ix]
    v111 = grid[iz + 1, iy + 1, ix + 1]
    c00 = v000 + fx * (v100 - v000)
    c10 = v010 + fx * (v110 - v010)
    c01 = v001 + fx * (v101 - v001)
    c11 = v011 + fx * (v111 - v011)
    c0 = c00 + fy * (c10 - c00)
    c1 = c01 + fy * (c11 - c01)
    return c0 + fz * (c1 - c0)


@njit(cache=True, inline="always")
def _cell_trilinear(v000, v100, v010, v110, v001, v101, v011, v111, fx, fy, fz):
    c00 = v000 + fx * (v100 - v000)
    c10 = v010 + fx * (v110 - v010)
    c01 = v001 + fx * (v101 - v001)
    c11 = v011 + fx * (v111 - v011)
    c0 = c00 + fy * (c10 - c00)
    c1 = c01 + fy * (c11 - c01)
    return c0 + fz * (c1 - c0)


@njit(cache=True, inline="always")
def gradient(grid, sx, sy, sz, x, y, z):
    """Central-difference gradient with a one-grid-step stencil, units 1/world."""
    gx = (trilinear(grid, sx, sy, sz, x + sx, y, z)
          - trilinear(grid, sx, sy, sz, x - sx, y, z)) / (2.0 * sx)
    gy = (trilinear(grid, sx, sy, sz, x, y + sy, z)
          - trilinear(grid, sx, sy, sz, x, y - sy, z)) / (2.0 * sy)
    gz = (trilinear(grid, sx, sy, sz, x, y, z + sz)
          - trilinear(grid, sx, sy, sz, x, y, z - sz)) / (2.0 * sz)
    return gx, gy, gz


# ---------------------------------------------------------------------------
# Cubic segment model


@njit(cache=True, inline="always")
def cubic_fit(v0, v1, v2, v3):
    """Coefficients of the unique cubic through (0,v0),(1/3,v1),(2/3,v2),(1,v3)."""
    c0 = v0
    c1 = (-11.0 * v0 + 18.0 * v1 - 9.0 * v2 + 2.0 * v3) * 0.5
    c2 = (18.0 * v0 - 45.0 * v1 + 36.0 * v2 - 9.0 * v3) * 0.5
    c3 = (-9.0 * v0 + 27.0 * v1 - 27.0 * v2 + 9.0 * v3) * 0.5
    return c0, c1, c2, c3


@njit(cache=True, inline="always")
def cubic_eval(c0, c1, c2, c3, u):
    return ((c3 * u + c2) * u + c1) * u + c0


@njit(cache=True, inline="always")
def _bisect_root(c0, c1, c2, c3, iso, a, b, ga):
    lo = a
    hi = b
    fa = ga
    for _ in range(64):
        if hi - lo <= 1e-13:
            break
        m = 0.5 * (lo + hi)
        fm = cubic_eval(c0, c1, c2, c3, m) - iso
        if fm == 0.0:
            return m
        if (fm < 0.0) == (fa < 0.0):
            lo = m
            fa = fm
        else:
            hi = m
    return 0.5 * (lo + hi)


@njit(cache=True)
def cubic_roots(c0, c1, c2, c3, iso, lo, hi, out):
    """Solutions of cubic(u) = iso in [lo, hi], ascending, into out[:count].

    The interval is split at the derivative's real roots so each span is
    monotone; a sign change per span is then bracketed by bisection.
    """
    # interior extrema (sentinels beyond hi when absent)
    b1 = hi + 1.0
    b2 = hi + 1.0
    a2 = 3.0 * c3
    a1 = 2.0 * c2
    a0 = c1
    if abs(a2) > 1e-300:
        disc = a1 * a1 - 4.0 * a2 * a0
        if disc > 0.0:
            sq = math.sqrt(disc)
            if a1 >= 0.0:
                q = -0.5 * (a1 + sq)
            else:
                q = -0.5 * (a1 - sq)
            r1 = q / a2
            r2 = a0 / q if q != 0.0 else r1
            if r1 > r2:
                tmp = r1
                r1 = r2
                r2 = tmp
            if lo < r1 < hi:
                b1 = r1
            if lo < r2 < hi:
                if b1 <= hi:
                    b2 = r2
                else:
                    b1 = r2
    elif abs(a1) > 1e-300:
        r = -a0 / a1
        if lo < r < hi:
            b1 = r
    count = 0
    a = lo
    ga = cubic_eval(c0, c1, c2, c3, a) - iso
    if ga == 0.0:
        out[count] = a
        count += 1
    for k in range(3):
        if k == 0:
            b = b1 if b1 < hi else hi
        elif k == 1:
            if b1 >= hi:
                break
            b = b2 if b2 < hi else hi
        else:
            if b2 >= hi:
                break
            b = hi
        if b <= a:
            continue
        gb = cubic_eval(c0, c1, c2, c3, b) - iso
        if ga * gb < 0.0:
            r = _bisect_root(c0, c1, c2, c3, iso, a, b, ga)
            if count == 0 or r > out[count - 1] + 1e-12:
                out[count] = r
                count += 1
        elif gb == 0.0 and ga != 0.0:
            if count == 0 or b > out[count - 1] + 1e-12:
                out[count] = b
                count += 1
        a = b
        ga = gb
        if b >= hi:
            break
    return count


# ---------------------------------------------------------------------------
# Ray/box clipping


@njit(cache=True, inline="always")
def ray_box(ox, oy, oz, dx, dy, dz, x0, y0, z0, x1, y1, z1):
    """Slab clip of the semi-infinite ray against an AABB; miss when t0 >= t1."""
    t0 = 0.0
    t1 = 1e300
    if dx != 0.0:
        ta = (x0 - ox) / dx
        tb = (x1 - ox) / dx
        if ta > tb:
            tmp = ta
            ta = tb
            tb = tmp
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    elif ox < x0 or ox > x1:
        return 1.0, 0.0
    if dy != 0.0:
        ta = (y0 - oy) / dy
        tb = (y1 - oy) / dy
        if ta > tb:
            tmp = ta
            ta = tb
            tb = tmp
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    elif oy < y0 or oy > y1:
        return 1.0, 0.0
    if dz != 0.0:
        ta = (z0 - oz) / dz
        tb = (z1 - oz) / dz
        if ta > tb:
            tmp = ta
            ta = tb
            tb = tmp
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    elif oz < z0 or oz > z1:
        return 1.0, 0.0
    return t0, t1


# ---------------------------------------------------------------------------
# Rate estimation and shading


@njit(cache=True)
def deep_rate(grid, sx, sy, sz, hx, hy, hz, dx, dy, dz,
              target, dv, step, max_steps):
    """March past the hit until the scalar reaches target; returns dv / arc length.

    Clamps to the configured search budget when the target is never reached
    (including rays that leave the volume, where clamped samples go constant).
    """
    nz, ny, nx = grid.shape
    ex = (nx - 1.0) * sx
    ey = (ny - 1.0) * sy
    ez = (nz - 1.0) * sz
    prev = trilinear(grid, sx, sy, sz, hx, hy, hz)
    for k in range(1, max_steps + 1):
        l = k * step
        x = hx + l * dx
        y = hy + l * dy
        z = hz + l * dz
        v = trilinear(grid, sx, sy, sz, x, y, z)
        if v >= target:
            f = 1.0
            if v > prev:
                f = (target - prev) / (v - prev)
            dl = (k - 1) * step + f * step
            if dl <= 0.0:
                dl = step * 1e-6
            return dv / dl
        prev = v
        if (x < -sx or x > ex + sx or y < -sy or y > ey + sy
                or z < -sz or z > ez + sz):
            break
    return dv / (max_steps * step)


@njit(cache=True, inline="always")
def blinn_phong(mr, mg, mb, gx, gy, gz, dx, dy, dz,
                ldirs, lcols, amb, diff, spec, shin):
    """Blinn-Phong with the normal derived from the gradient, viewer-facing."""
    gn = math.sqrt(gx * gx + gy * gy + gz * gz)
    if gn < 1e-12:
        r = amb * mr
        g = amb * mg
        b = amb * mb
        return min(r, 1.0), min(g, 1.0), min(b, 1.0)
    nx = -gx / gn
    ny = -gy / gn
    nz = -gz / gn
    if nx * dx + ny * dy + nz * dz > 0.0:
        nx = -nx
        ny = -ny
        nz = -nz
    vx = -dx
    vy = -dy
    vz = -dz
    r = amb * mr
    g = amb * mg
    b = amb * mb
    for k in range(ldirs.shape[0]):
        lx = ldirs[k, 0]
        ly = ldirs[k, 1]
        lz = ldirs[k, 2]
        ndl = nx * lx + ny * ly + nz * lz
        if ndl > 0.0:
            r += diff * ndl * mr * lcols[k, 0]
            g += diff * ndl * mg * lcols[k, 1]
            b += diff * ndl * mb * lcols[k, 2]
            hx = lx + vx
            hy = ly + vy
            hz = lz + vz
            hn = math.sqrt(hx * hx + hy * hy + hz * hz)
            if hn > 1e-12:
                ndh = (nx * hx + ny * hy + nz * hz) / hn
                if ndh > 0.0:
                    s = spec * ndh ** shin
                    r += s * lcols[k, 0]
                    g += s * lcols[k, 1]
                    b += s * lcols[k, 2]
    if r > 1.0:
        r = 1.0
    if g > 1.0:
        g = 1.0
    if b > 1.0:
        b = 1.0
    if r < 0.0:
        r = 0.0
    if g < 0.0:
        g = 0.0
    if b < 0.0:
        b = 0.0
    return r, g, b


@njit(cache=True, inline="always")
def speed_to_index(speed, m):
    """Log-sampled map index j in [1, m] for a positive speed."""
    j = int(round(m * (1.0 - math.exp(-speed))))
    if j < 1:
        j = 1
    elif j > m:
        j = m
    return j


# ---------------------------------------------------------------------------
# Scene tracing


@njit(cache=True)
def trace_scene_ray(grid, sx, sy, sz, has_labels, labels, bounds4,
                    lox, loy, loz, hix, hiy, hiz,
                    ox, oy, oz, dx, dy, dz, skip,
                    s_iso, s_dv, s_df, s_mode, s_dstep, s_dmax, s_base, lut,
                    shading_on, amb, diff, spec, shin, ldirs, lcols, roots):
    """First unskipped isosurface crossing along one ray.

    Walks cells front to back (3DDDA inside the crop box), fits the four-sample
    cubic in each candidate cell and counts crossings in t order; the crossing
    with index skip+1 is shaded and returned as
    (found, t, ix, iy, iz, structure_id, r, g, b).
    """
    x0 = lox * sx
    y0 = loy * sy
    z0 = loz * sz
    x1 = hix * sx
    y1 = hiy * sy
    z1 = hiz * sz
    t0, t1 = ray_box(ox, oy, oz, dx, dy, dz, x0, y0, z0, x1, y1, z1)
    if t0 < 0.0:
        t0 = 0.0
    if t1 <= t0:
        return False, 0.0, 0, 0, 0, 0, 0.0, 0.0, 0.0
    diag = math.sqrt(sx * sx + sy * sy + sz * sz)
    eps = 1e-9 * diag
    px = ox + (t0 + eps) * dx
    py = oy + (t0 + eps) * dy
    pz = oz + (t0 + eps) * dz
    ix = int(math.floor(px / sx))
    iy = int(math.floor(py / sy))
    iz = int(math.floor(pz / sz))
    if ix < lox:
        ix = lox
    elif ix > hix - 1:
        ix = hix - 1
    if iy < loy:
        iy = loy
    elif iy > hiy - 1:
        iy = hiy - 1
    if iz < loz:
        iz = loz
    elif iz > hiz - 1:
        iz = hiz - 1
    if dx > 0.0:
        tmx = ((ix + 1) * sx - ox) / dx
        tdx = sx / dx
        stx = 1
    elif dx < 0.0:
        tmx = (ix * sx - ox) / dx
        tdx = -sx / dx
        stx = -1
    else:
        tmx = 1e300
        tdx = 1e300
        stx = 0
    if dy > 0.0:
        tmy = ((iy + 1) * sy - oy) / dy
        tdy = sy / dy
        sty = 1
    elif dy < 0.0:
        tmy = (iy * sy - oy) / dy
        tdy = -sy / dy
        sty = -1
    else:
        tmy = 1e300
        tdy = 1e300
        sty = 0
    if dz > 0.0:
        tmz = ((iz + 1) * sz - oz) / dz
        tdz = sz / dz
        stz = 1
    elif dz < 0.0:
        tmz = (iz * sz - oz) / dz
        tdz = -sz / dz
        stz = -1
    else:
        tmz = 1e300
        tdz = 1e300
        stz = 0
    tcur = t0
    ncross = 0
    last_t = -1e300
    max_steps = (hix - lox) + (hiy - loy) + (hiz - loz) + 3
    for _ in range(max_steps):
        tnext = tmx
        if tmy < tnext:
            tnext = tmy
        if tmz < tnext:
            tnext = tmz
        texit = tnext if tnext < t1 else t1
        if texit > tcur:
            if has_labels:
                lab = int(labels[iz, iy, ix])
                idx = lab
            else:
                lab = 1
                idx = 0
            if lab != 0:
                iso = s_iso[idx]
                if bounds4[iz, iy, ix, 0] <= iso <= bounds4[iz, iy, ix, 1]:
                    v000 = grid[iz, iy, ix]
                    v100 = grid[iz, iy, ix + 1]
                    v010 = grid[iz, iy + 1, ix]
                    v110 = grid[iz, iy + 1, ix + 1]
                    v001 = grid[iz + 1, iy, ix]
                    v101 = grid[iz + 1, iy, ix + 1]
                    v011 = grid[iz + 1, iy + 1, ix]
                    v111 = grid[iz + 1, iy + 1, ix + 1]
                    dt = texit - tcur
                    vs0 = 0.0
                    vs1 = 0.0
                    vs2 = 0.0
                    vs3 = 0.0
                    for si in range(4):
                        u = si / 3.0
                        ts = tcur + u * dt
                        fx = (ox + ts * dx) / sx - ix
                        fy = (oy + ts * dy) / sy - iy
                        fz = (oz + ts * dz) / sz - iz
                        if fx < 0.0:
                            fx = 0.0
                        elif fx > 1.0:
                            fx = 1.0
                        if fy < 0.0:
                            fy = 0.0
                        elif fy > 1.0:
                            fy = 1.0
                        if fz < 0.0:
                            fz = 0.0
                        elif fz > 1.0:
                            fz = 1.0
                        v = _cell_trilinear(v000, v100, v010, v110,
                                            v001, v101, v011, v111, fx, fy, fz)
                        if si == 0:
                            vs0 = v
                        elif si == 1:
                            vs1 = v
                        elif si == 2:
                            vs2 = v
                        else:
                            vs3 = v
                    c0, c1, c2, c3 = cubic_fit(vs0, vs1, vs2, vs3)
                    nroots = cubic_roots(c0, c1, c2, c3, iso, 0.0, 1.0, roots)
                    for ri in range(nroots):
                        u = roots[ri]
                        if u >= 1.0 - 1e-12:
                            continue
                        th = tcur + u * dt
                        if th <= last_t + 1e-9 * diag:
                            continue
                        ncross += 1
                        last_t = th
                        if ncross > skip:
                            hx = ox + th * dx
                            hy = oy + th * dy
                            hz = oz + th * dz
                            gx, gy, gz = gradient(grid, sx, sy, sz, hx, hy, hz)
                            mode = s_mode[idx]
                            if mode == MODE_MONO:
                                cr = s_base[idx, 0]
                                cg = s_base[idx, 1]
                                cb = s_base[idx, 2]
                            else:
                                if mode == MODE_SHALLOW:
                                    rate = abs(gx * dx + gy * dy + gz * dz)
                                    if rate < RATE_FLOOR:
                                        rate = RATE_FLOOR
                                else:
                                    rate = deep_rate(grid, sx, sy, sz,
                                                     hx, hy, hz, dx, dy, dz,
                                                     iso + s_dv[idx], s_dv[idx],
                                                     s_dstep[idx], s_dmax[idx])
                                    if rate < RATE_FLOOR:
                                        rate = RATE_FLOOR
                                speed = rate / s_df[idx]
                                m = lut.shape[1]
                                j = speed_to_index(speed, m)
                                cr = lut[idx, j - 1, 0]
                                cg = lut[idx, j - 1, 1]
                                cb = lut[idx, j - 1, 2]
                            if shading_on:
                                cr, cg, cb = blinn_phong(cr, cg, cb, gx, gy, gz,
                                                         dx, dy, dz, ldirs, lcols,
                                                         amb, diff, spec, shin)
                            sid = lab if has_labels else 0
                            return True, th, ix, iy, iz, sid, cr, cg, cb
        if tnext >= t1:
            break
        # advance every axis tied at tnext (skips zero-length steps)
        if tmx == tnext:
            ix += stx
            tmx += tdx
            if ix < lox or ix >= hix:
                break
        if tmy == tnext:
            iy += sty
            tmy += tdy
            if iy < loy or iy >= hiy:
                break
        if tmz == tnext:
            iz += stz
            tmz += tdz
            if iz < loz or iz >= hiz:
                break
        tcur = tnext
    return False, 0.0, 0, 0, 0, 0, 0.0, 0.0, 0.0


@njit(cache=True, parallel=True)
def render_scene_tiles(grid, sx, sy, sz, has_labels, labels, bounds4,
                       lox, loy, loz, hix, hiy, hiz,
                       ex, ey, ez, rx, ry, rz, ux, uy, uz, fx, fy, fz,
                       half_w, half_h, width, height, peel,
                       s_iso, s_dv, s_df, s_mode, s_dstep, s_dmax, s_base, lut,
                       shading_on, amb, diff, spec, shin, ldirs, lcols,
                       bgr, bgg, bgb, out_img, out_id, out_sid, out_t):
    """Tile-parallel scene render; one writer per pixel, deterministic output."""
    nxc = grid.shape[2] - 1
    nyc = grid.shape[1] - 1
    tiles_x = (width + TILE - 1) // TILE
    tiles_y = (height + TILE - 1) // TILE
    for ti in prange(tiles_x * tiles_y):
        ty = ti // tiles_x
        tx = ti - ty * tiles_x
        roots = np.empty(4, np.float64)
        py_end = (ty + 1) * TILE
        if py_end > height:
            py_end = height
        px_end = (tx + 1) * TILE
        if px_end > width:
            px_end = width
        for py in range(ty * TILE, py_end):
            ndc_y = 1.0 - (py + 0.5) / height * 2.0
            for px in range(tx * TILE, px_end):
                ndc_x = (px + 0.5) / width * 2.0 - 1.0
                dx = fx + ndc_x * half_w * rx + ndc_y * half_h * ux
                dy = fy + ndc_x * half_w * ry + ndc_y * half_h * uy
                dz = fz + ndc_x * half_w * rz + ndc_y * half_h * uz
                dn = math.sqrt(dx * dx + dy * dy + dz * dz)
                dx /= dn
                dy /= dn
                dz /= dn
                skip = peel[py, px]
                found, th, ix, iy, iz, sid, cr, cg, cb = trace_scene_ray(
                    grid, sx, sy, sz, has_labels, labels, bounds4,
                    lox, loy, loz, hix, hiy, hiz,
                    ex, ey, ez, dx, dy, dz, skip,
                    s_iso, s_dv, s_df, s_mode, s_dstep, s_dmax, s_base, lut,
                    shading_on, amb, diff, spec, shin, ldirs, lcols, roots)
                if found:
                    out_img[py, px, 0] = cr
                    out_img[py, px, 1] = cg
                    out_img[py, px, 2] = cb
                    out_id[py, px] = ix + iy * nxc + iz * nxc * nyc
                    out_sid[py, px] = sid
                    out_t[py, px] = th
                else:
                    out_img[py, px, 0] = bgr
                    out_img[py, px, 1] = bgg
                    out_img[py, px, 2] = bgb
                    out_id[py, px] = -1
                    out_sid[py, px] = 0
                    out_t[py, px] = -1.0


# ---------------------------------------------------------------------------
# Reference full volume renderer


@njit(cache=True, inline="always")
def eval_transition_tf(v, iso, inv_dv, n, tf_a, tf_c):
    """Piecewise-linear transitional transfer function (right-node convention)."""
    if v < iso:
        return 0.0, tf_c[0, 0], tf_c[0, 1], tf_c[0, 2]
    x = (v - iso) * inv_dv * n
    if x >= n:
        return 1.0, tf_c[n - 1, 0], tf_c[n - 1, 1], tf_c[n - 1, 2]
    if x <= 1.0:
        return (tf_a[0] * x, tf_c[0, 0], tf_c[0, 1], tf_c[0, 2])
    i = int(math.floor(x))
    if i >= n:
        i = n - 1
    f = x - i
    a = tf_a[i - 1] * (1.0 - f) + tf_a[i] * f
    cr = tf_c[i - 1, 0] * (1.0 - f) + tf_c[i, 0] * f
    cg = tf_c[i - 1, 1] * (1.0 - f) + tf_c[i, 1] * f
    cb = tf_c[i - 1, 2] * (1.0 - f) + tf_c[i, 2] * f
    return a, cr, cg, cb


@njit(cache=True, parallel=True)
def render_fvr_tiles(grid, sx, sy, sz,
                     lox, loy, loz, hix, hiy, hiz,
                     ex, ey, ez, rx, ry, rz, ux, uy, uz, fx, fy, fz,
                     half_w, half_h, width, height,
                     iso, dv, n, tf_a, tf_c, std, sample_dist,
                     shading_on, amb, diff, spec, shin, ldirs, lcols,
                     bgr, bgg, bgb, out_img):
    """Front-to-back compositing at a uniform sample distance, early-out 0.999."""
    x0 = lox * sx
    y0 = loy * sy
    z0 = loz * sz
    x1 = hix * sx
    y1 = hiy * sy
    z1 = hiz * sz
    inv_dv = 1.0 / dv
    expo = sample_dist / std
    tiles_x = (width + TILE - 1) // TILE
    tiles_y = (height + TILE - 1) // TILE
    for ti in prange(tiles_x * tiles_y):
        ty = ti // tiles_x
        tx = ti - ty * tiles_x
        py_end = (ty + 1) * TILE
        if py_end > height:
            py_end = height
        px_end = (tx + 1) * TILE
        if px_end > width:
            px_end = width
        for py in range(ty * TILE, py_end):
            ndc_y = 1.0 - (py + 0.5) / height * 2.0
            for px in range(tx * TILE, px_end):
                ndc_x = (px + 0.5) / width * 2.0 - 1.0
                dx = fx + ndc_x * half_w * rx + ndc_y * half_h * ux
                dy = fy + ndc_x * half_w * ry + ndc_y * half_h * uy
                dz = fz + ndc_x * half_w * rz + ndc_y * half_h * uz
                dn = math.sqrt(dx * dx + dy * dy + dz * dz)
                dx /= dn
                dy /= dn
                dz /= dn
                t0, t1 = ray_box(ex, ey, ez, dx, dy, dz, x0, y0, z0, x1, y1, z1)
                if t0 < 0.0:
                    t0 = 0.0
                accr = 0.0
                accg = 0.0
                accb = 0.0
                trans = 1.0
                if t1 > t0:
                    t = t0 + 0.5 * sample_dist
                    while t < t1:
                        x = ex + t * dx
                        y = ey + t * dy
                        z = ez + t * dz
                        v = trilinear(grid, sx, sy, sz, x, y, z)
                        if v >= iso:
                            a, cr, cg, cb = eval_transition_tf(
                                v, iso, inv_dv, n, tf_a, tf_c)
                            if a > 0.0:
                                if a >= 1.0:
                                    alpha = 1.0
                                else:
                                    alpha = 1.0 - (1.0 - a) ** expo
                                if shading_on:
                                    gx, gy, gz = gradient(grid, sx, sy, sz, x, y, z)
                                    cr, cg, cb = blinn_phong(
                                        cr, cg, cb, gx, gy, gz, dx, dy, dz,
                                        ldirs, lcols, amb, diff, spec, shin)
                                accr += trans * alpha * cr
                                accg += trans * alpha * cg
                                accb += trans * alpha * cb
                                trans *= 1.0 - alpha
                                if trans <= 0.001:
                                    break
                        t += sample_dist
                accr += trans * bgr
                accg += trans * bgg
                accb += trans * bgb
                out_img[py, px, 0] = accr if accr <= 1.0 else 1.0
                out_img[py, px, 1] = accg if accg <= 1.0 else 1.0
                out_img[py, px, 2] = accb if accb <= 1.0 else 1.0
