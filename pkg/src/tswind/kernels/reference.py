"""Pure-Python closed-loop stepper.

This is the reference implementation of the simulation hot loop and the
fallback when the compiled kernel is unavailable.  The arithmetic here is
deliberately written as flat scalar expressions: ``_compiled.pyx`` is a
line-for-line translation, and keeping the operation order identical keeps
the two backends bit-compatible.  Do not "simplify" expressions in one
file without mirroring the other.
"""

import math

TAG_TABULAR = 0
TAG_ANALYTIC = 1


def run_loop(n_steps, dt, x0, xh0, v_half, vbar, pp, obs_a, obs_b, L1, L2,
             ctrl, aero_tag, a0, a1, a2, a3, noise, out):
    """Advance plant, measurements, observer and controller n_steps times.

    Returns (status, n_done, clamp_count, negative_omega_steps); rows
    0..n_done of ``out`` are filled.  status 1 means a non-finite state
    was hit after step n_done.
    """
    # unpack parameter vector into native floats (see kernels.pack_params);
    # keeping numpy scalars out of the loop matters for fallback speed
    (R, v_floor, lam_cap, qR2, qR3,
     c4_kT, c4_kBf, c4_dT, c4_dB,
     c5_kT, c5_kBf, c5_dT, c5_dB, c5_FT,
     ks_Jr, ds_Jr, inv_Jr, ks_Jg, ds_Jg, inv_Jg,
     inv_tau, k_B, centr, cf, f_min, f_max,
     vhat_min, vhat_max) = (float(v) for v in pp)
    inv_span = 1.0 / (f_max - f_min)

    (kp, ki, rated_w, rated_tq, pitch_lo, pitch_hi, rate_lim,
     beta_ref) = (float(v) for v in ctrl)

    A = [float(v) for v in obs_a]      # 16, row-major, slot (1,3) zeroed
    Bm = [float(v) for v in obs_b]     # 8, row-major 4x2
    G1 = [float(v) for v in L1]        # 12, row-major 4x3
    G2 = [float(v) for v in L2]

    vh = [float(v) for v in v_half]
    vb = [float(v) for v in vbar]
    has_noise = len(noise) > 0
    nz = [float(v) for v in noise] if has_noise else None

    if aero_tag == TAG_ANALYTIC:
        (q1, q2, q3, q4, q5, q6, t1, t2, t3, t4, t5, t6,
         cq_lo, cq_hi, lam_lo, lam_hi, beta_lo, beta_hi) = (float(v) for v in a0)
        exp = math.exp

        def aero(lam, beta):
            if lam < lam_lo:
                lam = lam_lo
            elif lam > lam_hi:
                lam = lam_hi
            if beta < beta_lo:
                beta = beta_lo
            elif beta > beta_hi:
                beta = beta_hi
            denom = lam + 0.08 * beta
            if denom > 1e-9:
                u = 1.0 / denom - 0.035 / (beta * beta * beta + 1.0)
            else:
                u = 1e9
            e = exp(-q5 * u) if u < 700.0 else 0.0
            lam_safe = lam if lam > 1e-9 else 1e-9
            cq = q1 * (q2 * u - q3 * beta - q4) * e / lam_safe + q6
            et = exp(-t5 * u) if u < 700.0 else 0.0
            ct = t1 * (t2 * u - t3 * beta - t4) * et + t6 * lam
            if cq < cq_lo:
                cq = cq_lo
            elif cq > cq_hi:
                cq = cq_hi
            if ct < 0.0:
                ct = 0.0
            return cq, ct
    else:
        lg = [float(v) for v in a0]
        bg = [float(v) for v in a1]
        cqv = [float(v) for v in a2]
        ctv = [float(v) for v in a3]
        nl = len(lg); nb = len(bg)
        cq_lo = 0.001; cq_hi = 0.0751

        def _cell(grid, n, x):
            # greatest i with grid[i] <= x, clamped to [0, n-2]
            lo = 0; hi = n
            while lo < hi:
                mid = (lo + hi) >> 1
                if grid[mid] <= x:
                    lo = mid + 1
                else:
                    hi = mid
            i = lo - 1
            if i < 0:
                i = 0
            elif i > n - 2:
                i = n - 2
            return i

        def aero(lam, beta):
            if lam < lg[0]:
                lam = lg[0]
            elif lam > lg[nl - 1]:
                lam = lg[nl - 1]
            if beta < bg[0]:
                beta = bg[0]
            elif beta > bg[nb - 1]:
                beta = bg[nb - 1]
            i = _cell(lg, nl, lam)
            j = _cell(bg, nb, beta)
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
            if cq < cq_lo:
                cq = cq_lo
            elif cq > cq_hi:
                cq = cq_hi
            if ct < 0.0:
                ct = 0.0
            return cq, ct

    def plant_deriv(x0_, x1_, x2_, x3_, x4_, x5_, x6_, x7_, v, bd, tg):
        if v < v_floor:
            FT = 0.0; Ta = 0.0
        else:
            lam = R * x5_ / v
            cq, ct = aero(lam, x7_)
            v2 = v * v
            FT = qR2 * ct * v2
            Ta = qR3 * cq * v2
        kbe = k_B + centr * x5_ * x5_
        dw = x5_ - x6_
        return (
            x3_,
            x4_,
            dw,
            -c4_kT * x0_ + c4_kBf * kbe * x1_ - c4_dT * x3_ + c4_dB * x4_,
            c5_kT * x0_ - c5_kBf * kbe * x1_ + c5_dT * x3_ - c5_dB * x4_ + c5_FT * FT,
            -ds_Jr * dw - ks_Jr * x2_ + inv_Jr * Ta,
            ds_Jg * dw + ks_Jg * x2_ - inv_Jg * tg,
            inv_tau * (bd - x7_),
        )

    def premise_h1(w_hat, v_hat, bd):
        lam = lam_cap if v_hat < v_floor else R * w_hat / v_hat
        cq, _ = aero(lam, bd)
        f = cf * v_hat * cq
        if f < f_min:
            f = f_min
        elif f > f_max:
            f = f_max
        return (f - f_min) * inv_span

    def obs_deriv(h0_, h1_, h2_, h3_, y0, y1, y2, tg, vbk, bd):
        w1 = premise_h1(h1_, h3_, bd)
        w2 = 1.0 - w1
        fb = w1 * f_max + w2 * f_min
        e0 = y0 - h0_; e1 = y1 - h1_; e2 = y2 - h2_
        r0 = A[0] * h0_ + A[1] * h1_ + A[2] * h2_ + A[3] * h3_ \
            + Bm[0] * tg + Bm[1] * vbk \
            + (w1 * G1[0] + w2 * G2[0]) * e0 + (w1 * G1[1] + w2 * G2[1]) * e1 \
            + (w1 * G1[2] + w2 * G2[2]) * e2
        r1 = A[4] * h0_ + A[5] * h1_ + A[6] * h2_ + A[7] * h3_ \
            + Bm[2] * tg + Bm[3] * vbk \
            + (w1 * G1[3] + w2 * G2[3]) * e0 + (w1 * G1[4] + w2 * G2[4]) * e1 \
            + (w1 * G1[5] + w2 * G2[5]) * e2
        r1 = r1 + fb * h3_
        r2 = A[8] * h0_ + A[9] * h1_ + A[10] * h2_ + A[11] * h3_ \
            + Bm[4] * tg + Bm[5] * vbk \
            + (w1 * G1[6] + w2 * G2[6]) * e0 + (w1 * G1[7] + w2 * G2[7]) * e1 \
            + (w1 * G1[8] + w2 * G2[8]) * e2
        r3 = A[12] * h0_ + A[13] * h1_ + A[14] * h2_ + A[15] * h3_ \
            + Bm[6] * tg + Bm[7] * vbk \
            + (w1 * G1[9] + w2 * G2[9]) * e0 + (w1 * G1[10] + w2 * G2[10]) * e1 \
            + (w1 * G1[11] + w2 * G2[11]) * e2
        return r0, r1, r2, r3

    isfinite = math.isfinite
    hdt = 0.5 * dt
    dt6 = dt / 6.0

    x0_, x1_, x2_, x3_, x4_, x5_, x6_, x7_ = (float(v) for v in x0)
    h0_, h1_, h2_, h3_ = (float(v) for v in xh0)

    beta_d = beta_ref
    if beta_d < pitch_lo:
        beta_d = pitch_lo
    elif beta_d > pitch_hi:
        beta_d = pitch_hi
    t_g = rated_tq
    integ = 0.0

    wr_m = x5_ + (nz[1] if has_noise else 0.0)
    wg_m = x6_ + (nz[2] if has_noise else 0.0)
    th_int = x2_
    y_th = th_int + (nz[0] if has_noise else 0.0)

    clamps = 0
    neg_omega = 0
    status = 0
    n_done = n_steps

    out[0, 0] = 0.0
    out[0, 1] = vh[0]
    out[0, 2] = h3_
    out[0, 3] = x5_
    out[0, 4] = h1_
    out[0, 5] = x6_
    out[0, 6] = h2_
    out[0, 7] = x2_
    out[0, 8] = h0_
    out[0, 9] = x7_
    out[0, 10] = beta_d
    out[0, 11] = t_g
    out[0, 12] = premise_h1(h1_, h3_, beta_d)

    for k in range(n_steps):
        v0 = vh[2 * k]; vm = vh[2 * k + 1]; v1 = vh[2 * k + 2]
        vbk = vb[k]

        # plant step
        a0_, a1_, a2_, a3_, a4_, a5_, a6_, a7_ = plant_deriv(
            x0_, x1_, x2_, x3_, x4_, x5_, x6_, x7_, v0, beta_d, t_g)
        b0_, b1_, b2_, b3_, b4_, b5_, b6_, b7_ = plant_deriv(
            x0_ + hdt * a0_, x1_ + hdt * a1_, x2_ + hdt * a2_, x3_ + hdt * a3_,
            x4_ + hdt * a4_, x5_ + hdt * a5_, x6_ + hdt * a6_, x7_ + hdt * a7_,
            vm, beta_d, t_g)
        c0_, c1_, c2_, c3_, c4_, c5_, c6_, c7_ = plant_deriv(
            x0_ + hdt * b0_, x1_ + hdt * b1_, x2_ + hdt * b2_, x3_ + hdt * b3_,
            x4_ + hdt * b4_, x5_ + hdt * b5_, x6_ + hdt * b6_, x7_ + hdt * b7_,
            vm, beta_d, t_g)
        d0_, d1_, d2_, d3_, d4_, d5_, d6_, d7_ = plant_deriv(
            x0_ + dt * c0_, x1_ + dt * c1_, x2_ + dt * c2_, x3_ + dt * c3_,
            x4_ + dt * c4_, x5_ + dt * c5_, x6_ + dt * c6_, x7_ + dt * c7_,
            v1, beta_d, t_g)
        xn0 = x0_ + dt6 * (a0_ + 2.0 * (b0_ + c0_) + d0_)
        xn1 = x1_ + dt6 * (a1_ + 2.0 * (b1_ + c1_) + d1_)
        xn2 = x2_ + dt6 * (a2_ + 2.0 * (b2_ + c2_) + d2_)
        xn3 = x3_ + dt6 * (a3_ + 2.0 * (b3_ + c3_) + d3_)
        xn4 = x4_ + dt6 * (a4_ + 2.0 * (b4_ + c4_) + d4_)
        xn5 = x5_ + dt6 * (a5_ + 2.0 * (b5_ + c5_) + d5_)
        xn6 = x6_ + dt6 * (a6_ + 2.0 * (b6_ + c6_) + d6_)
        xn7 = x7_ + dt6 * (a7_ + 2.0 * (b7_ + c7_) + d7_)

        # measurements at the end of the step
        if has_noise:
            wr_m1 = xn5 + nz[3 * (k + 1) + 1]
            wg_m1 = xn6 + nz[3 * (k + 1) + 2]
        else:
            wr_m1 = xn5
            wg_m1 = xn6
        th_int = th_int + hdt * ((wr_m - wg_m) + (wr_m1 - wg_m1))
        y_th1 = th_int + (nz[3 * (k + 1)] if has_noise else 0.0)

        ym_th = 0.5 * (y_th + y_th1)
        ym_wr = 0.5 * (wr_m + wr_m1)
        ym_wg = 0.5 * (wg_m + wg_m1)

        # observer step
        p0, p1, p2, p3 = obs_deriv(h0_, h1_, h2_, h3_,
                                   y_th, wr_m, wg_m, t_g, vbk, beta_d)
        q0, q1_, q2_, q3_ = obs_deriv(h0_ + hdt * p0, h1_ + hdt * p1,
                                      h2_ + hdt * p2, h3_ + hdt * p3,
                                      ym_th, ym_wr, ym_wg, t_g, vbk, beta_d)
        r0, r1, r2, r3 = obs_deriv(h0_ + hdt * q0, h1_ + hdt * q1_,
                                   h2_ + hdt * q2_, h3_ + hdt * q3_,
                                   ym_th, ym_wr, ym_wg, t_g, vbk, beta_d)
        s0, s1, s2, s3 = obs_deriv(h0_ + dt * r0, h1_ + dt * r1,
                                   h2_ + dt * r2, h3_ + dt * r3,
                                   y_th1, wr_m1, wg_m1, t_g, vbk, beta_d)
        hn0 = h0_ + dt6 * (p0 + 2.0 * (q0 + r0) + s0)
        hn1 = h1_ + dt6 * (p1 + 2.0 * (q1_ + r1) + s1)
        hn2 = h2_ + dt6 * (p2 + 2.0 * (q2_ + r2) + s2)
        hn3 = h3_ + dt6 * (p3 + 2.0 * (q3_ + r3) + s3)

        if hn3 < vhat_min:
            hn3 = vhat_min
            clamps += 1
        elif hn3 > vhat_max:
            hn3 = vhat_max
            clamps += 1

        # controller update from the newest speed measurement
        e = wg_m1 - rated_w
        trial = beta_ref + kp * e + ki * (integ + e * dt)
        lo = beta_d - rate_lim * dt
        if lo < pitch_lo:
            lo = pitch_lo
        hi = beta_d + rate_lim * dt
        if hi > pitch_hi:
            hi = pitch_hi
        if not ((trial > hi and e > 0.0) or (trial < lo and e < 0.0)):
            integ = integ + e * dt
        bd_new = beta_ref + kp * e + ki * integ
        if bd_new < lo:
            bd_new = lo
        elif bd_new > hi:
            bd_new = hi

        ok = (isfinite(xn0) and isfinite(xn1) and isfinite(xn2)
              and isfinite(xn3) and isfinite(xn4) and isfinite(xn5)
              and isfinite(xn6) and isfinite(xn7) and isfinite(hn0)
              and isfinite(hn1) and isfinite(hn2) and isfinite(hn3))
        if not ok:
            status = 1
            n_done = k
            break

        if xn5 < 0.0:
            neg_omega += 1

        x0_ = xn0; x1_ = xn1; x2_ = xn2; x3_ = xn3
        x4_ = xn4; x5_ = xn5; x6_ = xn6; x7_ = xn7
        h0_ = hn0; h1_ = hn1; h2_ = hn2; h3_ = hn3
        wr_m = wr_m1; wg_m = wg_m1; y_th = y_th1
        beta_d = bd_new

        row = k + 1
        out[row, 0] = row * dt
        out[row, 1] = v1
        out[row, 2] = h3_
        out[row, 3] = x5_
        out[row, 4] = h1_
        out[row, 5] = x6_
        out[row, 6] = h2_
        out[row, 7] = x2_
        out[row, 8] = h0_
        out[row, 9] = x7_
        out[row, 10] = beta_d
        out[row, 11] = t_g
        out[row, 12] = premise_h1(h1_, h3_, beta_d)

    return status, n_done, clamps, neg_omega
