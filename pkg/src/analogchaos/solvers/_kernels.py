"""Compiled inner loops shared by the solvers.

All kernels take the padded term layout of :class:`~analogchaos.model.Instance`
(``sites`` of shape ``(m, 3)`` padded with ``n``) and spin arrays of length
``n + 1`` whose last entry is a constant +1, so padded slots multiply to 1.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def seed_numba(seed):
    np.random.seed(seed)


@njit(cache=True)
def term_value(sites, couplings, s, t):
    return couplings[t] * s[sites[t, 0]] * s[sites[t, 1]] * s[sites[t, 2]]


@njit(cache=True)
def total_energy(sites, couplings, s):
    e = 0.0
    for t in range(couplings.shape[0]):
        e += term_value(sites, couplings, s, t)
    return e


@njit(cache=True)
def flip_delta(sites, couplings, offsets, ids, s, i):
    """Energy change from flipping spin ``i``."""
    local = 0.0
    for p in range(offsets[i], offsets[i + 1]):
        local += term_value(sites, couplings, s, ids[p])
    return -2.0 * local


@njit(cache=True)
def gray_enumerate(sites, couplings, offsets, ids, n, cap, tol):
    """Walk all 2^n states in Gray-code order.

    Returns ``(best_energy, codes, count, overflow)``; ``codes[:count]`` are
    Gray codes (bit i set <=> spin i is -1) of states within ``tol`` of the
    running minimum, to be filtered against the final minimum by the caller.
    """
    s = np.ones(n + 1, dtype=np.int8)
    e = total_energy(sites, couplings, s)
    best = e
    codes = np.empty(cap, dtype=np.int64)
    codes[0] = 0
    count = 1
    overflow = False
    total = np.int64(1) << n
    for k in range(1, total):
        i = 0
        kk = k
        while kk & 1 == 0:
            kk >>= 1
            i += 1
        e += flip_delta(sites, couplings, offsets, ids, s, i)
        s[i] = -s[i]
        if e < best - tol:
            best = e
            count = 0
        if e <= best + tol:
            if e < best:
                best = e
            if count < cap:
                codes[count] = k ^ (k >> 1)
                count += 1
            else:
                overflow = True
    return best, codes, count, overflow


@njit(cache=True)
def descend(sites, couplings, offsets, ids, s, n, sweeps, tol):
    """Ascending-order single-flip descent; flips only when energy drops by more than ``tol``.

    Returns the number of sweeps performed (stops early after a flip-free sweep).
    """
    done = 0
    for _ in range(sweeps):
        done += 1
        flipped = False
        for i in range(n):
            if flip_delta(sites, couplings, offsets, ids, s, i) < -tol:
                s[i] = -s[i]
                flipped = True
        if not flipped:
            break
    return done


@njit(cache=True)
def metropolis_sweep(sites, couplings, offsets, ids, s, n, beta):
    """One attempted flip per site in random order; returns the energy change."""
    order = np.random.permutation(n)
    de_total = 0.0
    for p in range(n):
        i = order[p]
        de = flip_delta(sites, couplings, offsets, ids, s, i)
        if de <= 0.0 or np.random.random() < np.exp(-beta * de):
            s[i] = -s[i]
            de_total += de
    return de_total


@njit(cache=True)
def houdayer(sites, arity, couplings, offsets, ids, a, b, n, beta, metropolis):
    """Cluster move on the negative-overlap domain of replicas ``a`` and ``b``.

    The cluster is grown through two-body terms only. With ``metropolis``
    the flip is accepted with probability ``min(1, exp(-beta * dE_pair))``;
    otherwise it is always accepted. Returns
    ``(attempted, accepted, new_energy_a, new_energy_b, cluster_size)``.
    """
    neg = np.empty(n, dtype=np.int64)
    count = 0
    for i in range(n):
        if a[i] != b[i]:
            neg[count] = i
            count += 1
    ea = total_energy(sites, couplings, a)
    eb = total_energy(sites, couplings, b)
    if count == 0:
        return False, False, ea, eb, 0
    seed = neg[np.random.randint(count)]
    in_cluster = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    cluster = np.empty(n, dtype=np.int64)
    size = 0
    top = 0
    stack[top] = seed
    top += 1
    in_cluster[seed] = True
    while top > 0:
        top -= 1
        i = stack[top]
        cluster[size] = i
        size += 1
        for p in range(offsets[i], offsets[i + 1]):
            t = ids[p]
            if arity[t] != 2:
                continue
            j = sites[t, 0]
            if j == i:
                j = sites[t, 1]
            if a[j] != b[j] and not in_cluster[j]:
                in_cluster[j] = True
                stack[top] = j
                top += 1
    for c in range(size):
        i = cluster[c]
        a[i] = -a[i]
        b[i] = -b[i]
    na = total_energy(sites, couplings, a)
    nb = total_energy(sites, couplings, b)
    if metropolis:
        de = (na + nb) - (ea + eb)
        if de > 0.0 and np.random.random() >= np.exp(-beta * de):
            for c in range(size):
                i = cluster[c]
                a[i] = -a[i]
                b[i] = -b[i]
            return True, False, ea, eb, size
    return True, True, na, nb, size


@njit(cache=True)
def parallel_tempering(
    sites, arity, couplings, offsets, ids, n, betas, spins, sweeps, period, use_houdayer, metropolis_cluster, energy_sum
):
    """Two replica sets over one inverse-temperature ladder.

    ``spins`` has shape ``(2, R, n + 1)`` and is updated in place;
    ``energy_sum[k]`` accumulates the energies at temperature ``k`` (both
    sets) after every sweep. Returns ``(best_energy, best_spins,
    swap_accepts, swap_attempts, cluster_accepts, cluster_attempts)``.
    """
    R = betas.shape[0]
    energies = np.empty((2, R))
    for r in range(2):
        for k in range(R):
            energies[r, k] = total_energy(sites, couplings, spins[r, k])
    best = np.inf
    best_spins = spins[0, 0].copy()
    swap_acc = np.zeros(R - 1, dtype=np.int64)
    swap_att = np.zeros(R - 1, dtype=np.int64)
    cl_acc = 0
    cl_att = 0
    for sweep in range(sweeps):
        for r in range(2):
            for k in range(R):
                energies[r, k] += metropolis_sweep(sites, couplings, offsets, ids, spins[r, k], n, betas[k])
                if energies[r, k] < best - 1e-12:
                    best = energies[r, k]
                    best_spins[:] = spins[r, k]
        if (sweep + 1) % period == 0:
            if use_houdayer:
                for k in range(R):
                    att, acc, ea, eb, _ = houdayer(
                        sites, arity, couplings, offsets, ids, spins[0, k], spins[1, k], n, betas[k], metropolis_cluster
                    )
                    if att:
                        cl_att += 1
                        if acc:
                            cl_acc += 1
                    energies[0, k] = ea
                    energies[1, k] = eb
            for r in range(2):
                for k in range(R - 1):
                    swap_att[k] += 1
                    delta = (betas[k] - betas[k + 1]) * (energies[r, k] - energies[r, k + 1])
                    if delta >= 0.0 or np.random.random() < np.exp(delta):
                        swap_acc[k] += 1
                        tmp = spins[r, k].copy()
                        spins[r, k, :] = spins[r, k + 1]
                        spins[r, k + 1, :] = tmp
                        e = energies[r, k]
                        energies[r, k] = energies[r, k + 1]
                        energies[r, k + 1] = e
            for r in range(2):
                for k in range(R):
                    if energies[r, k] < best - 1e-12:
                        best = energies[r, k]
                        best_spins[:] = spins[r, k]
        for k in range(R):
            energy_sum[k] += energies[0, k] + energies[1, k]
    return best, best_spins, swap_acc, swap_att, cl_acc, cl_att
