# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled closed-loop stepper.

Line-for-line translation of ``reference.py``; see the note there about
keeping the operation order of the two backends identical.  Compiled with
-ffp-contract=off so the C arithmetic matches the interpreter bit for bit.
"""

from libc.math cimport exp, isfinite


cdef void aero_eval(int tag, double lam, double beta, double* qc,
                    double* lg, double* bg, double* cqv, double* ctv,
                    int nl, int nb, double* cq_out, double* ct_out) noexcept:
    cdef double denom, u, e, et, lam_safe, cq, ct, s, t, a, b
    cdef double z00, z10, z01, z11
    cdef int i, j, lo, hi, mid, base
    if tag == 1:  # analytic
        if lam < qc[14]:
            lam = qc[14]
        elif lam > qc[15]:
            lam = qc[15]
        if beta < qc[16]:
            beta = qc[16]
        elif beta > qc[17]:
            beta = qc[17]
        denom = lam + 0.08 * beta
        if denom > 1e-9:
            u = 1.0 / denom - 0.035 / (beta * beta * beta + 1.0)
        else:
            u = 1e9
        e = exp(-qc[4] * u) if u < 700.0 else 0.0
        lam_safe = lam if lam > 1e-9 else 1e-9
        cq = qc[0] * (qc[1] * u - qc[2] * beta - qc[3]) * e / lam_safe + qc[5]
        et = exp(-qc[10] * u) if u < 700.0 else 0.0
        ct = qc[6] * (qc[7] * u - qc[8] * beta - qc[9]) * et + qc[11] * lam
        if cq < qc[12]:
            cq = qc[12]
        elif cq > qc[13]:
            cq = qc[13]
        if ct < 0.0:
            ct = 0.0
        cq_out[0] = cq
        ct_out[0] = ct
        return
    # tabular
    if lam < lg[0]:
        lam = lg[0]
    elif lam > lg[nl - 1]:
        lam = lg[nl - 1]
    if beta < bg[0]:
        beta = bg[0]
    elif beta > bg[nb - 1]:
        beta = bg[nb - 1]
    lo = 0; hi = nl
    while lo < hi:
        mid = (lo + hi) >> 1
        if lg[mid] <= lam:
            lo = mid + 1
        else:
            hi = mid
    i = lo - 1
    if i < 0:
        i = 0
    elif i > nl - 2:
        i = nl - 2
    lo = 0; hi = nb
    while lo < hi:
        mid = (lo + hi) >> 1
        if bg[mid] <= beta:
            lo = mid + 1
        else:
            hi = mid
    j = lo - 1
    if j < 0:
        j = 0
    elif j > nb - 2:
        j = nb - 2
    s = (lam - lg[i]) / (lg[i + 1] - lg[i])
    t = (beta - bg[j]) / (bg[j + 1] - bg[j])
    base = i * nb + j
    z00 = cqv[base]; z10 = cqv[base + nb]
    z01 = cqv[base + 1]; z11 = cqv[base + nb + 1]
    a = z00 + s * (z10 - z00)
    b = z01 + s * (z11 - z01)
    cq = a + t * (b - a)
    z00 = ctv[base]; z10 = ctv[base + nb]
    z01 = ctv[base + 1]; z11 = ctv[base + nb + 1]
    a = z00 + s * (z10 - z00)
    b = z01 + s * (z11 - z01)
    ct = a + t * (b - a)
    if cq < 0.001:
        cq = 0.001
    elif cq > 0.0751:
        cq = 0.0751
    if ct < 0.0:
        ct = 0.0
    cq_out[0] = cq
    ct_out[0] = ct


cdef void plant_deriv(double* x, double v, double bd, double tg, double* P,
                      int tag, double* qc, double* lg, double* bg,
                      double* cqv, double* ctv, int nl, int nb,
                      double* dx) noexcept:
    cdef double FT, Ta, lam, cq, ct, v2, kbe, dw
    if v < P[1]:
        FT = 0.0; Ta = 0.0
    else:
        lam = P[0] * x[5] / v
        aero_eval(tag, lam, x[7], qc, lg, bg, cqv, ctv, nl, nb, &cq, &ct)
        v2 = v * v
        FT = P[3] * ct * v2
        Ta = P[4] * cq * v2
    kbe = P[21] + P[22] * x[5] * x[5]
    dw = x[5] - x[6]
    dx[0] = x[3]
    dx[1] = x[4]
    dx[2] = dw
    dx[3] = -P[5] * x[0] + P[6] * kbe * x[1] - P[7] * x[3] + P[8] * x[4]
    dx[4] = P[9] * x[0] - P[10] * kbe * x[1] + P[11] * x[3] - P[12] * x[4] + P[13] * FT
    dx[5] = -P[15] * dw - P[14] * x[2] + P[16] * Ta
    dx[6] = P[18] * dw + P[17] * x[2] - P[19] * tg
    dx[7] = P[20] * (bd - x[7])


cdef double premise_h1(double w_hat, double v_hat, double bd, double* P,
                       double inv_span, int tag, double* qc, double* lg,
                       double* bg, double* cqv, double* ctv,
                       int nl, int nb) noexcept:
    cdef double lam, cq, ct, f
    lam = P[2] if v_hat < P[1] else P[0] * w_hat / v_hat
    aero_eval(tag, lam, bd, qc, lg, bg, cqv, ctv, nl, nb, &cq, &ct)
    f = P[23] * v_hat * cq
    if f < P[24]:
        f = P[24]
    elif f > P[25]:
        f = P[25]
    return (f - P[24]) * inv_span


cdef void obs_deriv(double* h, double y0, double y1, double y2, double tg,
                    double vbk, double bd, double* P, double inv_span,
                    double* A, double* Bm, double* G1, double* G2,
                    int tag, double* qc, double* lg, double* bg,
                    double* cqv, double* ctv, int nl, int nb,
                    double* r) noexcept:
    cdef double w1, w2, fb, e0, e1, e2
    w1 = premise_h1(h[1], h[3], bd, P, inv_span, tag, qc, lg, bg, cqv, ctv, nl, nb)
    w2 = 1.0 - w1
    fb = w1 * P[25] + w2 * P[24]
    e0 = y0 - h[0]; e1 = y1 - h[1]; e2 = y2 - h[2]
    r[0] = A[0] * h[0] + A[1] * h[1] + A[2] * h[2] + A[3] * h[3] \
        + Bm[0] * tg + Bm[1] * vbk \
        + (w1 * G1[0] + w2 * G2[0]) * e0 + (w1 * G1[1] + w2 * G2[1]) * e1 \
        + (w1 * G1[2] + w2 * G2[2]) * e2
    r[1] = A[4] * h[0] + A[5] * h[1] + A[6] * h[2] + A[7] * h[3] \
        + Bm[2] * tg + Bm[3] * vbk \
        + (w1 * G1[3] + w2 * G2[3]) * e0 + (w1 * G1[4] + w2 * G2[4]) * e1 \
        + (w1 * G1[5] + w2 * G2[5]) * e2
    r[1] = r[1] + fb * h[3]
    r[2] = A[8] * h[0] + A[9] * h[1] + A[10] * h[2] + A[11] * h[3] \
        + Bm[4] * tg + Bm[5] * vbk \
        + (w1 * G1[6] + w2 * G2[6]) * e0 + (w1 * G1[7] + w2 * G2[7]) * e1 \
        + (w1 * G1[8] + w2 * G2[8]) * e2
    r[3] = A[12] * h[0] + A[13] * h[1] + A[14] * h[2] + A[15] * h[3] \
        + Bm[6] * tg + Bm[7] * vbk \
        + (w1 * G1[9] + w2 * G2[9]) * e0 + (w1 * G1[10] + w2 * G2[10]) * e1 \
        + (w1 * G1[11] + w2 * G2[11]) * e2


def run_loop(int n_steps, double dt, double[::1] x0, double[::1] xh0,
             double[::1] v_half, double[::1] vbar, double[::1] pp,
             double[::1] obs_a, double[::1] obs_b, double[::1] L1,
             double[::1] L2, double[::1] ctrl, int aero_tag,
             double[::1] a0, double[::1] a1, double[::1] a2, double[::1] a3,
             double[::1] noise, double[:, ::1] out):
    """Mirror of reference.run_loop; see kernels.run_closed_loop_arrays."""
    cdef double P[28]
    cdef double A[16]
    cdef double Bm[8]
    cdef double G1[12]
    cdef double G2[12]
    cdef int i
    for i in range(28):
        P[i] = pp[i]
    for i in range(16):
        A[i] = obs_a[i]
    for i in range(8):
        Bm[i] = obs_b[i]
    for i in range(12):
        G1[i] = L1[i]
        G2[i] = L2[i]

    cdef double inv_span = 1.0 / (P[25] - P[24])
    cdef double kp = ctrl[0], ki = ctrl[1], rated_w = ctrl[2], rated_tq = ctrl[3]
    cdef double pitch_lo = ctrl[4], pitch_hi = ctrl[5], rate_lim = ctrl[6]
    cdef double beta_ref = ctrl[7]

    cdef double* qc = &a0[0] if a0.shape[0] > 0 else NULL
    cdef double* lg = &a0[0] if a0.shape[0] > 0 else NULL
    cdef double* bg = &a1[0] if a1.shape[0] > 0 else NULL
    cdef double* cqv = &a2[0] if a2.shape[0] > 0 else NULL
    cdef double* ctv = &a3[0] if a3.shape[0] > 0 else NULL
    cdef int nl = a0.shape[0]
    cdef int nb = a1.shape[0]

    cdef bint has_noise = noise.shape[0] > 0
    cdef double* nz = &noise[0] if has_noise else NULL

    cdef double hdt = 0.5 * dt
    cdef double dt6 = dt / 6.0

    cdef double x[8]
    cdef double h[4]
    cdef double ka[8]
    cdef double kb[8]
    cdef double kc[8]
    cdef double kd[8]
    cdef double xs[8]
    cdef double xn[8]
    cdef double op[4]
    cdef double oq[4]
    cdef double orr[4]
    cdef double os[4]
    cdef double hs[4]
    cdef double hn[4]
    for i in range(8):
        x[i] = x0[i]
    for i in range(4):
        h[i] = xh0[i]

    cdef double beta_d = beta_ref
    if beta_d < pitch_lo:
        beta_d = pitch_lo
    elif beta_d > pitch_hi:
        beta_d = pitch_hi
    cdef double t_g = rated_tq
    cdef double integ = 0.0

    cdef double wr_m = x[5] + (nz[1] if has_noise else 0.0)
    cdef double wg_m = x[6] + (nz[2] if has_noise else 0.0)
    cdef double th_int = x[2]
    cdef double y_th = th_int + (nz[0] if has_noise else 0.0)

    cdef int clamps = 0
    cdef int neg_omega = 0
    cdef int status = 0
    cdef int n_done = n_steps

    out[0, 0] = 0.0
    out[0, 1] = v_half[0]
    out[0, 2] = h[3]
    out[0, 3] = x[5]
    out[0, 4] = h[1]
    out[0, 5] = x[6]
    out[0, 6] = h[2]
    out[0, 7] = x[2]
    out[0, 8] = h[0]
    out[0, 9] = x[7]
    out[0, 10] = beta_d
    out[0, 11] = t_g
    out[0, 12] = premise_h1(h[1], h[3], beta_d, P, inv_span, aero_tag,
                            qc, lg, bg, cqv, ctv, nl, nb)

    cdef int k, row
    cdef double v0, vm, v1, vbk
    cdef double wr_m1, wg_m1, y_th1, ym_th, ym_wr, ym_wg
    cdef double e, trial, lo_b, hi_b, bd_new
    cdef bint ok

    for k in range(n_steps):
        v0 = v_half[2 * k]; vm = v_half[2 * k + 1]; v1 = v_half[2 * k + 2]
        vbk = vbar[k]

        # plant step
        plant_deriv(x, v0, beta_d, t_g, P, aero_tag, qc, lg, bg, cqv, ctv, nl, nb, ka)
        for i in range(8):
            xs[i] = x[i] + hdt * ka[i]
        plant_deriv(xs, vm, beta_d, t_g, P, aero_tag, qc, lg, bg, cqv, ctv, nl, nb, kb)
        for i in range(8):
            xs[i] = x[i] + hdt * kb[i]
        plant_deriv(xs, vm, beta_d, t_g, P, aero_tag, qc, lg, bg, cqv, ctv, nl, nb, kc)
        for i in range(8):
            xs[i] = x[i] + dt * kc[i]
        plant_deriv(xs, v1, beta_d, t_g, P, aero_tag, qc, lg, bg, cqv, ctv, nl, nb, kd)
        for i in range(8):
            xn[i] = x[i] + dt6 * (ka[i] + 2.0 * (kb[i] + kc[i]) + kd[i])

        # measurements at the end of the step
        if has_noise:
            wr_m1 = xn[5] + nz[3 * (k + 1) + 1]
            wg_m1 = xn[6] + nz[3 * (k + 1) + 2]
        else:
            wr_m1 = xn[5]
            wg_m1 = xn[6]
        th_int = th_int + hdt * ((wr_m - wg_m) + (wr_m1 - wg_m1))
        y_th1 = th_int + (nz[3 * (k + 1)] if has_noise else 0.0)

        ym_th = 0.5 * (y_th + y_th1)
        ym_wr = 0.5 * (wr_m + wr_m1)
        ym_wg = 0.5 * (wg_m + wg_m1)

        # observer step
        obs_deriv(h, y_th, wr_m, wg_m, t_g, vbk, beta_d, P, inv_span,
                  A, Bm, G1, G2, aero_tag, qc, lg, bg, cqv, ctv, nl, nb, op)
        for i in range(4):
            hs[i] = h[i] + hdt * op[i]
        obs_deriv(hs, ym_th, ym_wr, ym_wg, t_g, vbk, beta_d, P, inv_span,
                  A, Bm, G1, G2, aero_tag, qc, lg, bg, cqv, ctv, nl, nb, oq)
        for i in range(4):
            hs[i] = h[i] + hdt * oq[i]
        obs_deriv(hs, ym_th, ym_wr, ym_wg, t_g, vbk, beta_d, P, inv_span,
                  A, Bm, G1, G2, aero_tag, qc, lg, bg, cqv, ctv, nl, nb, orr)
        for i in range(4):
            hs[i] = h[i] + dt * orr[i]
        obs_deriv(hs, y_th1, wr_m1, wg_m1, t_g, vbk, beta_d, P, inv_span,
                  A, Bm, G1, G2, aero_tag, qc, lg, bg, cqv, ctv, nl, nb, os)
        for i in range(4):
            hn[i] = h[i] + dt6 * (op[i] + 2.0 * (oq[i] + orr[i]) + os[i])

        if hn[3] < P[26]:
            hn[3] = P[26]
            clamps += 1
        elif hn[3] > P[27]:
            hn[3] = P[27]
            clamps += 1

        # controller update from the newest speed measurement
        e = wg_m1 - rated_w
        trial = beta_ref + kp * e + ki * (integ + e * dt)
        lo_b = beta_d - rate_lim * dt
        if lo_b < pitch_lo:
            lo_b = pitch_lo
        hi_b = beta_d + rate_lim * dt
        if hi_b > pitch_hi:
            hi_b = pitch_hi
        if not ((trial > hi_b and e > 0.0) or (trial < lo_b and e < 0.0)):
            integ = integ + e * dt
        bd_new = beta_ref + kp * e + ki * integ
        if bd_new < lo_b:
            bd_new = lo_b
        elif bd_new > hi_b:
            bd_new = hi_b

        ok = True
        for i in range(8):
            if not isfinite(xn[i]):
                ok = False
        for i in range(4):
            if not isfinite(hn[i]):
                ok = False
        if not ok:
            status = 1
            n_done = k
            break

        if xn[5] < 0.0:
            neg_omega += 1

        for i in range(8):
            x[i] = xn[i]
        for i in range(4):
            h[i] = hn[i]
        wr_m = wr_m1; wg_m = wg_m1; y_th = y_th1
        beta_d = bd_new

        row = k + 1
        out[row, 0] = row * dt
        out[row, 1] = v1
        out[row, 2] = h[3]
        out[row, 3] = x[5]
        out[row, 4] = h[1]
        out[row, 5] = x[6]
        out[row, 6] = h[2]
        out[row, 7] = x[2]
        out[row, 8] = h[0]
        out[row, 9] = x[7]
        out[row, 10] = beta_d
        out[row, 11] = t_g
        out[row, 12] = premise_h1(h[1], h[3], beta_d, P, inv_span, aero_tag,
                                  qc, lg, bg, cqv, ctv, nl, nb)

    return status, n_done, clamps, neg_omega
