"""Pure-Python heat-bath sweeps; same arithmetic and draw order as the compiled kernel."""

import math


def heat_bath_sweeps(spins, group, margins, K, selfc, uniforms, n_sweeps, out):
    n = len(spins)
    M = len(margins)
    if len(uniforms) < n_sweeps * n or out.shape[0] < n_sweeps or out.shape[1] != M:
        raise ValueError("buffer sizes do not match n_sweeps")
    sp = spins.tolist()
    gr = group.tolist()
    mg = margins.tolist()
    Kl = K.tolist()
    sc = selfc.tolist()
    us = uniforms.tolist()
    exp = math.exp
    rng_m = range(M)
    u_idx = 0
    for t in range(n_sweeps):
        for i in range(n):
            lam = gr[i]
            row = Kl[lam]
            h = 0.0
            for mu in rng_m:
                h = h + row[mu] * mg[mu]
            old = sp[i]
            h = h - sc[lam] * old
            p_up = 1.0 / (1.0 + exp(-2.0 * h))
            new = 1 if us[u_idx] < p_up else -1
            u_idx += 1
            if new != old:
                mg[lam] += new - old
                sp[i] = new
        out[t, :] = mg
    spins[:] = sp
    margins[:] = mg
