"""Compiled inner loops.

All arithmetic runs in uint64 and is masked to the configured width after
every operation. A shift of 64 is undefined in LLVM, so callers pass the
shift clamped to 63 together with a perturbation mask that is zero when the
real shift equals 64 (the perturbation term then vanishes, as it must).
"""

import numpy as np
from numba import njit


def shift_args(s: int) -> tuple[np.uint64, np.uint64]:
    """Return the (clamped shift, perturbation mask) pair the kernels expect."""
    if s >= 64:
        return np.uint64(63), np.uint64(0)
    return np.uint64(s), np.uint64(0xFFFFFFFFFFFFFFFF)


def width_mask(n: int) -> np.uint64:
    return np.uint64((1 << n) - 1)


@njit(cache=True, inline="always")
def _map_next(x, a, c, da, dc, mask, sh, pm):
    a = (a + da) & mask
    c = (c + dc) & mask
    lin = (a * x + c) & mask
    return lin ^ ((lin >> sh) & pm), a, c


@njit(cache=True)
def map_fill(x, a, c, da, dc, mask, sh, pm, out):
    for i in range(out.shape[0]):
        x, a, c = _map_next(x, a, c, da, dc, mask, sh, pm)
        out[i] = x
    return x, a, c


@njit(cache=True)
def map_cycle(x, a, c, da, dc, mask, sh, pm, cap):
    # Brent: find the period first, then walk two pointers `period` apart
    # from the start to locate the tail.
    power = 1
    lam = 1
    tx, ta, tc = x, a, c
    hx, ha, hc = _map_next(x, a, c, da, dc, mask, sh, pm)
    steps = 1
    while hx != tx or ha != ta or hc != tc:
        if steps >= cap:
            return -1, -1
        if power == lam:
            tx, ta, tc = hx, ha, hc
            power *= 2
            lam = 0
        hx, ha, hc = _map_next(hx, ha, hc, da, dc, mask, sh, pm)
        lam += 1
        steps += 1
    tx, ta, tc = x, a, c
    hx, ha, hc = x, a, c
    for _ in range(lam):
        hx, ha, hc = _map_next(hx, ha, hc, da, dc, mask, sh, pm)
    mu = 0
    while hx != tx or ha != ta or hc != tc:
        tx, ta, tc = _map_next(tx, ta, tc, da, dc, mask, sh, pm)
        hx, ha, hc = _map_next(hx, ha, hc, da, dc, mask, sh, pm)
        mu += 1
    return mu, lam


@njit(cache=True, inline="always")
def _tri_next(st, inc, mask, sh, pm):
    x, y, z, a, c, b, d, e, h = st
    a = (a + inc[0]) & mask
    c = (c + inc[1]) & mask
    b = (b + inc[2]) & mask
    d = (d + inc[3]) & mask
    e = (e + inc[4]) & mask
    h = (h + inc[5]) & mask
    lx = (a * x + c) & mask
    ly = (b * y + d) & mask
    lz = (e * z + h) & mask
    x = lx ^ ((lz >> sh) & pm)
    y = ly ^ ((lx >> sh) & pm)
    z = lz ^ ((ly >> sh) & pm)
    return (x, y, z, a, c, b, d, e, h)


@njit(cache=True)
def trident_fill(state, inc, mask, sh, pm, out):
    """Advance ``state`` (9 words, updated in place) and write w = x ^ z."""
    st = (state[0], state[1], state[2], state[3], state[4],
          state[5], state[6], state[7], state[8])
    for i in range(out.shape[0]):
        st = _tri_next(st, inc, mask, sh, pm)
        out[i] = st[0] ^ st[2]
    for j in range(9):
        state[j] = st[j]


@njit(cache=True)
def trident_cycle(state, inc, mask, sh, pm, cap):
    start = (state[0], state[1], state[2], state[3], state[4],
             state[5], state[6], state[7], state[8])
    power = 1
    lam = 1
    tort = start
    hare = _tri_next(start, inc, mask, sh, pm)
    steps = 1
    while hare != tort:
        if steps >= cap:
            return -1, -1
        if power == lam:
            tort = hare
            power *= 2
            lam = 0
        hare = _tri_next(hare, inc, mask, sh, pm)
        lam += 1
        steps += 1
    tort = start
    hare = start
    for _ in range(lam):
        hare = _tri_next(hare, inc, mask, sh, pm)
    mu = 0
    while hare != tort:
        tort = _tri_next(tort, inc, mask, sh, pm)
        hare = _tri_next(hare, inc, mask, sh, pm)
        mu += 1
    return mu, lam


@njit(cache=True)
def euclid_steps(u, v, gcds, steps):
    for i in range(u.shape[0]):
        p = u[i]
        q = v[i]
        k = 0
        while q != 0:
            p, q = q, p % q
            k += 1
        gcds[i] = p
        steps[i] = k
