# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled trajectory propagation kernel.

Line-for-line translation of ``ascentopt._pykernel``: same Dormand-Prince
5(4) scheme, same sampling and peak refinement, same output slots.  Compiled
with floating-point contraction disabled so both backends round identically.
"""

import numpy as np

from libc.math cimport (acos, asin, atan, atan2, cos, exp, fabs, fmod,
                        isfinite, sin, sqrt, tan, INFINITY, NAN, pow)

from ._kernelspec import (OUT_SIZE, O_STATUS, O_CRASH_T, O_VI, O_VF,
                          O_DV_PROP, O_DV_GRAV, O_DV_AERO, O_DV_MIS,
                          O_RP, O_RA, O_INCL, O_ECC, O_SMA, O_ELEM_OK,
                          O_WQ, O_WQ_T, O_WQA, O_WQA_T, O_WHEAT, O_WHEAT_T,
                          O_WAX1, O_WAX1_T, O_WAX2, O_WAX2_T,
                          O_MASS_F, O_SMA_T8, O_ECC_T8, O_ELEM8_OK,
                          O_RP_T8, O_RA_T8, O_T_END, O_ENERGY, O_NFEV,
                          SAMPLE_ALTITUDE)

cdef int NSTATE = 11
cdef long MAX_STEPS = 500000

cdef double STAT_OK = 0.0
cdef double STAT_CRASH = 1.0
cdef double STAT_NONFINITE = 2.0
cdef double STAT_STALLED = 3.0

cdef int MODE_SRM = 0
cdef int MODE_STAGE2 = 1
cdef int MODE_STAGE3 = 2
cdef int MODE_AOCS = 3
cdef int MODE_COAST = 4

cdef int[10] ARC_MODE_TAB
ARC_MODE_TAB[0] = MODE_SRM
ARC_MODE_TAB[1] = MODE_SRM
ARC_MODE_TAB[2] = MODE_SRM
ARC_MODE_TAB[3] = MODE_SRM
ARC_MODE_TAB[4] = MODE_COAST
ARC_MODE_TAB[5] = MODE_STAGE2
ARC_MODE_TAB[6] = MODE_COAST
ARC_MODE_TAB[7] = MODE_STAGE3
ARC_MODE_TAB[8] = MODE_COAST
ARC_MODE_TAB[9] = MODE_AOCS

cdef double SAMPLE_ALT = SAMPLE_ALTITUDE

# Dormand-Prince 5(4) tableau
cdef double[7] C_NODE
C_NODE[0] = 0.0; C_NODE[1] = 0.2; C_NODE[2] = 0.3; C_NODE[3] = 0.8
C_NODE[4] = 8.0 / 9.0; C_NODE[5] = 1.0; C_NODE[6] = 1.0

cdef double[7][6] A_TAB
A_TAB[1][0] = 0.2
A_TAB[2][0] = 3.0 / 40.0;        A_TAB[2][1] = 9.0 / 40.0
A_TAB[3][0] = 44.0 / 45.0;       A_TAB[3][1] = -56.0 / 15.0
A_TAB[3][2] = 32.0 / 9.0
A_TAB[4][0] = 19372.0 / 6561.0;  A_TAB[4][1] = -25360.0 / 2187.0
A_TAB[4][2] = 64448.0 / 6561.0;  A_TAB[4][3] = -212.0 / 729.0
A_TAB[5][0] = 9017.0 / 3168.0;   A_TAB[5][1] = -355.0 / 33.0
A_TAB[5][2] = 46732.0 / 5247.0;  A_TAB[5][3] = 49.0 / 176.0
A_TAB[5][4] = -5103.0 / 18656.0
A_TAB[6][0] = 35.0 / 384.0;      A_TAB[6][1] = 0.0
A_TAB[6][2] = 500.0 / 1113.0;    A_TAB[6][3] = 125.0 / 192.0
A_TAB[6][4] = -2187.0 / 6784.0;  A_TAB[6][5] = 11.0 / 84.0

cdef double[7] E_TAB
E_TAB[0] = 71.0 / 57600.0; E_TAB[1] = 0.0; E_TAB[2] = -71.0 / 16695.0
E_TAB[3] = 71.0 / 1920.0; E_TAB[4] = -17253.0 / 339200.0
E_TAB[5] = 22.0 / 525.0; E_TAB[6] = -1.0 / 40.0

cdef double[7][4] P_TAB
P_TAB[0][0] = 1.0
P_TAB[0][1] = -8048581381.0 / 2820520608.0
P_TAB[0][2] = 8663915743.0 / 2820520608.0
P_TAB[0][3] = -12715105075.0 / 11282082432.0
P_TAB[2][1] = 131558114200.0 / 32700410799.0
P_TAB[2][2] = -68118460800.0 / 10900136933.0
P_TAB[2][3] = 87487479700.0 / 32700410799.0
P_TAB[3][1] = -1754552775.0 / 470086768.0
P_TAB[3][2] = 14199869525.0 / 1410260304.0
P_TAB[3][3] = -10690763975.0 / 1880347072.0
P_TAB[4][1] = 127303824393.0 / 49829197408.0
P_TAB[4][2] = -318862633887.0 / 49829197408.0
P_TAB[4][3] = 701980252875.0 / 199316789632.0
P_TAB[5][1] = -282668133.0 / 205662961.0
P_TAB[5][2] = 2019193451.0 / 616988883.0
P_TAB[5][3] = -1453857185.0 / 822651844.0
P_TAB[6][1] = 40617522.0 / 29380423.0
P_TAB[6][2] = -110615467.0 / 29380423.0
P_TAB[6][3] = 69997945.0 / 29380423.0


cdef struct PlanC:
    double times[11]
    double m0
    double drop1
    double drop2
    double kick
    double azim
    double tan7
    double tan8
    double base_pow
    double az3
    double fpa9
    double az9
    double knots[7]
    double coeffs[6][3]
    double p_ref
    double burn_time
    double at0
    double rbar
    double ae
    double gamma
    double thr_eff
    double c_star


cdef struct Peak:
    double dt
    double best
    double best_t
    double best_dt
    double prev_v
    double prev_t
    double best_prev
    double best_next
    bint prev_ok
    bint next_ok
    bint pending


cdef void peak_init(Peak* p, double dt) noexcept:
    p.dt = dt
    p.best = -INFINITY
    p.best_t = NAN
    p.best_dt = dt
    p.prev_v = NAN
    p.prev_t = NAN
    p.best_prev = NAN
    p.best_next = NAN
    p.prev_ok = False
    p.next_ok = False
    p.pending = False


cdef void peak_push(Peak* p, double v, double t) noexcept:
    cdef bint gap_ok = (p.prev_t == p.prev_t
                        and fabs((t - p.prev_t) - p.dt) < 1e-6 * p.dt)
    if p.pending:
        p.best_next = v
        p.next_ok = gap_ok
        p.pending = False
    if v > p.best:
        p.best = v
        p.best_t = t
        p.best_dt = p.dt
        p.best_prev = p.prev_v
        p.prev_ok = gap_ok
        p.pending = True
        p.next_ok = False
    p.prev_v = v
    p.prev_t = t


cdef void peak_break(Peak* p) noexcept:
    p.prev_t = NAN
    p.prev_v = NAN


cdef void peak_result(Peak* p, double* val, double* t) noexcept:
    cdef double y0, y1, y2, denom, b, tau
    if p.best == -INFINITY:
        val[0] = 0.0
        t[0] = NAN
        return
    if p.prev_ok and p.next_ok:
        y0 = p.best_prev
        y1 = p.best
        y2 = p.best_next
        denom = y0 - 2.0 * y1 + y2
        if denom < 0.0:
            b = 0.5 * (y2 - y0)
            tau = -b / denom
            if -1.0 < tau < 1.0:
                val[0] = y1 - b * b / (2.0 * denom)
                t[0] = p.best_t + tau * p.best_dt
                return
    val[0] = p.best
    t[0] = p.best_t


cdef double _exit_ratio(double gamma, double area_ratio, double hint) noexcept:
    cdef double gg = sqrt(gamma) * pow(2.0 / (gamma + 1.0),
                                       (gamma + 1.0) / (2.0 * (gamma - 1.0)))
    cdef double ex_a = 2.0 / gamma
    cdef double ex_b = (gamma - 1.0) / gamma
    cdef double two_g = 2.0 * gamma / (gamma - 1.0)
    cdef double crit = pow(2.0 / (gamma + 1.0), gamma / (gamma - 1.0))
    cdef double lo = 0.0
    cdef double hi = crit
    cdef double x, xa, xb, g, f, dg, df, xn
    cdef int i
    x = hint if 0.0 < hint < crit else 0.25 * crit
    for i in range(200):
        xa = pow(x, ex_a)
        xb = pow(x, ex_b)
        g = two_g * xa * (1.0 - xb)
        f = gg - area_ratio * sqrt(g)
        if f > 0.0:
            lo = x
        else:
            hi = x
        dg = two_g * (ex_a * xa / x * (1.0 - xb) - ex_b * xa * xb / x)
        df = -area_ratio * dg / (2.0 * sqrt(g))
        xn = x - f / df
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        if fabs(xn - x) <= 1e-12 * xn:
            return xn
        x = xn
    return x


cdef void _srm_state(PlanC* p, double t_s, double* hint,
                     double* tvac, double* mdot) noexcept:
    cdef double eta = t_s / p.burn_time
    cdef int leg = 0
    cdef double level, p_c, e_frozen, grow, a_t, ratio, gamma, gg, cf_vac
    if eta < 0.0:
        eta = 0.0
    elif eta > 1.0:
        eta = 1.0
    while leg < 5 and eta > p.knots[leg + 1]:
        leg += 1
    level = p.coeffs[leg][0] + eta * (p.coeffs[leg][1] + eta * p.coeffs[leg][2])
    if level <= 0.0:
        tvac[0] = 0.0
        mdot[0] = 0.0
        return
    p_c = p.p_ref * level
    e_frozen = eta if eta < p.knots[5] else p.knots[5]
    grow = 1.0 + p.rbar * e_frozen
    a_t = p.at0 * grow * grow
    ratio = _exit_ratio(p.gamma, p.ae / a_t, hint[0])
    hint[0] = ratio
    gamma = p.gamma
    gg = sqrt(gamma) * pow(2.0 / (gamma + 1.0), (gamma + 1.0) / (2.0 * (gamma - 1.0)))
    cf_vac = (p.thr_eff * gg
              * sqrt(2.0 * gamma / (gamma - 1.0)
                     * (1.0 - pow(ratio, (gamma - 1.0) / gamma)))
              + ratio * p.ae / a_t)
    tvac[0] = p_c * a_t * cf_vac
    mdot[0] = p_c * a_t / p.c_star


cdef bint _elements(double rx, double ry, double rz,
                    double vx, double vy, double vz,
                    double* sma, double* ecc, double* incl,
                    double* rp, double* ra, double* energy,
                    double* hmag) noexcept:
    cdef double rn = sqrt(rx * rx + ry * ry + rz * rz)
    cdef double v2 = vx * vx + vy * vy + vz * vz
    cdef double hx, hy, hz, hn, rv, coef, ex, ey, ez, en, c
    energy[0] = 0.5 * v2 - 1.0 / rn
    hx = ry * vz - rz * vy
    hy = rz * vx - rx * vz
    hz = rx * vy - ry * vx
    hn = sqrt(hx * hx + hy * hy + hz * hz)
    hmag[0] = hn
    sma[0] = 0.0
    ecc[0] = 0.0
    incl[0] = 0.0
    rp[0] = 0.0
    ra[0] = 0.0
    if hn < 1e-12:
        return False
    c = hz / hn
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    incl[0] = acos(c) * (180.0 / 3.141592653589793)
    rv = rx * vx + ry * vy + rz * vz
    coef = v2 - 1.0 / rn
    ex = coef * rx - rv * vx
    ey = coef * ry - rv * vy
    ez = coef * rz - rv * vz
    en = sqrt(ex * ex + ey * ey + ez * ez)
    ecc[0] = en
    if energy[0] >= 0.0 or en >= 1.0:
        return False
    sma[0] = -0.5 / energy[0]
    rp[0] = sma[0] * (1.0 - en)
    ra[0] = sma[0] * (1.0 + en)
    return True


cdef class Kernel:
    """Compiled propagation engine bound to one mission's static tables."""

    cdef double mu, re, omega, g0, v_unit, t_unit, acc_unit
    cdef double atm_h_base[7]
    cdef double atm_t_base[7]
    cdef double atm_p_base[7]
    cdef double atm_lapse[7]
    cdef double atm_r0, atm_t86, atm_p86, atm_rho86, atm_scale86
    cdef double atm_r_air, atm_gamma, atm_top
    cdef double[::1] drag_mach
    cdef double[::1] drag_cd
    cdef int n_drag
    cdef double s_ref, fairing_mass, stage1_dry
    cdef double stage2_thrust, stage2_mdot, stage2_burn, stage2_dry
    cdef double stage3_thrust, stage3_mdot, stage3_burn
    cdef double aocs_thrust, aocs_mdot, aocs_burn
    cdef double liftoff_duration, interstage_coast
    cdef double lat_rad, lon_rad
    cdef double q_max, bending_max, heat_max, ax1_max, ax2_max
    cdef double target_radius, target_incl, radius_tol, incl_tol
    cdef double rtol, atol, sample_dt

    def __init__(self, static):
        cdef int i
        self.mu = static.mu
        self.re = static.re
        self.omega = static.omega
        self.g0 = static.g0
        self.v_unit = static.v_unit
        self.t_unit = static.t_unit
        self.acc_unit = static.acc_unit
        hb = np.ascontiguousarray(static.atm_h_base, dtype=np.float64)
        tb = np.ascontiguousarray(static.atm_t_base, dtype=np.float64)
        pb = np.ascontiguousarray(static.atm_p_base, dtype=np.float64)
        lp = np.ascontiguousarray(static.atm_lapse, dtype=np.float64)
        for i in range(7):
            self.atm_h_base[i] = hb[i]
            self.atm_t_base[i] = tb[i]
            self.atm_p_base[i] = pb[i]
            self.atm_lapse[i] = lp[i]
        self.atm_r0 = static.atm_r0
        self.atm_t86 = static.atm_t86
        self.atm_p86 = static.atm_p86
        self.atm_rho86 = static.atm_rho86
        self.atm_scale86 = static.atm_scale86
        self.atm_r_air = static.atm_r_air
        self.atm_gamma = static.atm_gamma
        self.atm_top = static.atm_top
        self.drag_mach = np.ascontiguousarray(static.drag_mach, dtype=np.float64)
        self.drag_cd = np.ascontiguousarray(static.drag_cd, dtype=np.float64)
        self.n_drag = self.drag_mach.shape[0]
        self.s_ref = static.s_ref
        self.fairing_mass = static.fairing_mass
        self.stage1_dry = static.stage1_dry
        self.stage2_thrust = static.stage2_thrust
        self.stage2_mdot = static.stage2_mdot
        self.stage2_burn = static.stage2_burn
        self.stage2_dry = static.stage2_dry
        self.stage3_thrust = static.stage3_thrust
        self.stage3_mdot = static.stage3_mdot
        self.stage3_burn = static.stage3_burn
        self.aocs_thrust = static.aocs_thrust
        self.aocs_mdot = static.aocs_mdot
        self.aocs_burn = static.aocs_burn
        self.liftoff_duration = static.liftoff_duration
        self.interstage_coast = static.interstage_coast
        self.lat_rad = static.lat_rad
        self.lon_rad = static.lon_rad
        self.q_max = static.q_max
        self.bending_max = static.bending_max
        self.heat_max = static.heat_max
        self.ax1_max = static.ax1_max
        self.ax2_max = static.ax2_max
        self.target_radius = static.target_radius
        self.target_incl = static.target_incl
        self.radius_tol = static.radius_tol
        self.incl_tol = static.incl_tol
        self.rtol = static.rtol
        self.atol = static.atol
        self.sample_dt = static.sample_dt

    cdef void _atmo(self, double h, double* rho, double* p_a, double* a_s) noexcept:
        cdef double decay, hp, dh, lapse, tb, t, p
        cdef int i
        if h < 0.0:
            h = 0.0
        if h > self.atm_top:
            rho[0] = 0.0
            p_a[0] = 0.0
            a_s[0] = sqrt(self.atm_gamma * self.atm_r_air * self.atm_t86)
            return
        if h > 86000.0:
            decay = exp(-(h - 86000.0) / self.atm_scale86)
            rho[0] = self.atm_rho86 * decay
            p_a[0] = self.atm_p86 * decay
            a_s[0] = sqrt(self.atm_gamma * self.atm_r_air * self.atm_t86)
            return
        hp = self.atm_r0 * h / (self.atm_r0 + h)
        i = 6
        while i > 0 and hp < self.atm_h_base[i]:
            i -= 1
        dh = hp - self.atm_h_base[i]
        lapse = self.atm_lapse[i]
        tb = self.atm_t_base[i]
        t = tb + lapse * dh
        if lapse == 0.0:
            p = self.atm_p_base[i] * exp(-self.g0 * dh / (self.atm_r_air * tb))
        else:
            p = self.atm_p_base[i] * pow(tb / t, self.g0 / (self.atm_r_air * lapse))
        rho[0] = p / (self.atm_r_air * t)
        p_a[0] = p
        a_s[0] = sqrt(self.atm_gamma * self.atm_r_air * t)

    cdef double _drag_cd(self, double mach) noexcept:
        cdef int n = self.n_drag
        cdef int i = 1
        cdef double w
        if mach <= self.drag_mach[0]:
            return self.drag_cd[0]
        if mach >= self.drag_mach[n - 1]:
            return self.drag_cd[n - 1]
        while self.drag_mach[i] < mach:
            i += 1
        w = (mach - self.drag_mach[i - 1]) / (self.drag_mach[i] - self.drag_mach[i - 1])
        return self.drag_cd[i - 1] + w * (self.drag_cd[i] - self.drag_cd[i - 1])

    cdef bint _thrust_dir(self, PlanC* p, int arc, double t_s,
                          double rx, double ry, double rz,
                          double vx, double vy, double vz,
                          double wx, double wy, double wz,
                          double* o) noexcept:
        cdef double rn = sqrt(rx * rx + ry * ry + rz * rz)
        cdef double ux, uy, uz, en, ex, ey, nx, ny, nz, t1, t2, fpa, th, ps
        cdef double sth, cth, cps, sps, wn, hx, hy, hz, hn, tx, ty, tz
        cdef double tau, bp, num, den
        if arc == 1:
            o[0] = rx / rn
            o[1] = ry / rn
            o[2] = rz / rn
            return True
        if arc == 2 or arc == 3:
            ux = rx / rn
            uy = ry / rn
            uz = rz / rn
            en = sqrt(ux * ux + uy * uy)
            if en < 1e-12:
                return False
            ex = -uy / en
            ey = ux / en
            nx = uy * 0.0 - uz * ey
            ny = uz * ex - ux * 0.0
            nz = ux * ey - uy * ex
            if arc == 2:
                t1 = self.liftoff_duration
                t2 = p.times[2]
                fpa = 90.0 + (t_s - t1) / (t2 - t1) * (p.kick - 90.0)
            else:
                fpa = p.kick
            th = fpa * (3.141592653589793 / 180.0)
            ps = p.azim * (3.141592653589793 / 180.0)
            sth = sin(th)
            cth = cos(th)
            cps = cos(ps)
            sps = sin(ps)
            o[0] = sth * ux + cth * (cps * nx + sps * ex)
            o[1] = sth * uy + cth * (cps * ny + sps * ey)
            o[2] = sth * uz + cth * (cps * nz + sps * 0.0)
            return True
        if arc == 4 or arc == 6:
            wn = sqrt(wx * wx + wy * wy + wz * wz)
            if wn == 0.0:
                return False
            o[0] = wx / wn
            o[1] = wy / wn
            o[2] = wz / wn
            return True
        hx = ry * vz - rz * vy
        hy = rz * vx - rx * vz
        hz = rx * vy - ry * vx
        hn = sqrt(hx * hx + hy * hy + hz * hz)
        if hn < 1e-12:
            return False
        ux = rx / rn
        uy = ry / rn
        uz = rz / rn
        nx = hx / hn
        ny = hy / hn
        nz = hz / hn
        tx = ny * uz - nz * uy
        ty = nz * ux - nx * uz
        tz = nx * uy - ny * ux
        if arc == 8:
            tau = (t_s - p.times[7]) / (p.times[8] - p.times[7])
            bp = p.base_pow
            num = bp * p.tan7 + (p.tan8 - bp * p.tan7) * tau
            den = bp + (1.0 - bp) * tau
            th = atan(num / den)
            ps = p.az3 * (3.141592653589793 / 180.0)
        else:
            th = p.fpa9 * (3.141592653589793 / 180.0)
            ps = p.az9 * (3.141592653589793 / 180.0)
        sth = sin(th)
        cth = cos(th)
        cps = cos(ps)
        sps = sin(ps)
        o[0] = sth * ux + cth * (cps * tx + sps * nx)
        o[1] = sth * uy + cth * (cps * ty + sps * ny)
        o[2] = sth * uz + cth * (cps * tz + sps * nz)
        return True

    cdef bint _rhs(self, PlanC* p, int arc, int mode, double omega_nd,
                   double m_unit, double t, double* y, double* dy,
                   double* hint, long* nfev) noexcept:
        cdef double rx = y[0]
        cdef double ry = y[1]
        cdef double rz = y[2]
        cdef double vx = y[3]
        cdef double vy = y[4]
        cdef double vz = y[5]
        cdef double m = y[6]
        cdef double rn, inv_r3, ax, ay, az, h_m, t_s, m_kg
        cdef double wx, wy, wz, wn, rho, p_a, a_s, w_si, cd, d_acc, inv_wn
        cdef double thrust_n, mdot, a_t, tdx, tdy, tdz, tvac, vn
        cdef double tdir[3]
        nfev[0] += 1
        rn = sqrt(rx * rx + ry * ry + rz * rz)
        if not (rn > 0.0 and m > 0.0) or not isfinite(rn + vx + vy + vz + m):
            return False
        inv_r3 = 1.0 / (rn * rn * rn)
        ax = -rx * inv_r3
        ay = -ry * inv_r3
        az = -rz * inv_r3

        h_m = (rn - 1.0) * self.re
        t_s = t * self.t_unit
        m_kg = m * m_unit

        wx = vx + omega_nd * ry
        wy = vy - omega_nd * rx
        wz = vz
        wn = sqrt(wx * wx + wy * wy + wz * wz)

        rho = 0.0
        p_a = 0.0
        d_acc = 0.0
        if h_m <= self.atm_top:
            self._atmo(h_m, &rho, &p_a, &a_s)
            if rho > 0.0 and wn > 0.0:
                w_si = wn * self.v_unit
                cd = self._drag_cd(w_si / a_s)
                d_acc = 0.5 * rho * self.s_ref * cd * w_si * w_si / (m_kg * self.acc_unit)
                inv_wn = d_acc / wn
                ax -= inv_wn * wx
                ay -= inv_wn * wy
                az -= inv_wn * wz

        thrust_n = 0.0
        mdot = 0.0
        a_t = 0.0
        tdx = 0.0
        tdy = 0.0
        tdz = 0.0
        if mode != MODE_COAST:
            if mode == MODE_SRM:
                _srm_state(p, t_s, hint, &tvac, &mdot)
                thrust_n = tvac - p_a * p.ae
                if thrust_n < 0.0:
                    thrust_n = 0.0
            elif mode == MODE_STAGE2:
                thrust_n = self.stage2_thrust
                mdot = self.stage2_mdot
            elif mode == MODE_STAGE3:
                thrust_n = self.stage3_thrust
                mdot = self.stage3_mdot
            else:
                thrust_n = self.aocs_thrust
                mdot = self.aocs_mdot
            if not self._thrust_dir(p, arc, t_s, rx, ry, rz, vx, vy, vz,
                                    wx, wy, wz, tdir):
                return False
            tdx = tdir[0]
            tdy = tdir[1]
            tdz = tdir[2]
            a_t = thrust_n / (m_kg * self.acc_unit)
            ax += a_t * tdx
            ay += a_t * tdy
            az += a_t * tdz

        dy[0] = vx
        dy[1] = vy
        dy[2] = vz
        dy[3] = ax
        dy[4] = ay
        dy[5] = az
        dy[6] = -mdot * self.t_unit / m_unit

        vn = sqrt(vx * vx + vy * vy + vz * vz)
        dy[7] = a_t
        if vn > 0.0:
            dy[8] = (rx * vx + ry * vy + rz * vz) * inv_r3 / vn
            dy[9] = d_acc * (wx * vx + wy * vy + wz * vz) / (wn * vn) if d_acc > 0.0 else 0.0
            dy[10] = a_t * (1.0 - (tdx * vx + tdy * vy + tdz * vz) / vn) if a_t > 0.0 else 0.0
        else:
            dy[8] = 0.0
            dy[9] = 0.0
            dy[10] = 0.0
        return True

    cdef void _take(self, PlanC* p, int arc, int mode, double omega_nd,
                    double m_unit, double t, double* y, double* hint,
                    Peak* pk_q, Peak* pk_qa, Peak* pk_heat,
                    Peak* pk_ax1, Peak* pk_ax2, double* last_t,
                    bint dense, double[:, ::1] rows, long* n_rows) noexcept:
        cdef double rx = y[0]
        cdef double ry = y[1]
        cdef double rz = y[2]
        cdef double vx = y[3]
        cdef double vy = y[4]
        cdef double vz = y[5]
        cdef double m = y[6]
        cdef double rn, h_m, t_s, m_kg, wx, wy, wz, wn, w_si
        cdef double rho, p_a, a_s, q, heat, alpha, axial, tvac, thrust_n
        cdef double c, inv_r3, gax, gay, gaz, cd, d_acc, f, a_t
        cdef double lat, lon, vn, fpa, azm, ux, uy, uz, en, ex, ey, nx, ny, nz, s
        cdef double tdir[3]
        cdef bint has_dir
        cdef long idx
        last_t[0] = t
        rn = sqrt(rx * rx + ry * ry + rz * rz)
        h_m = (rn - 1.0) * self.re
        t_s = t * self.t_unit
        m_kg = m * m_unit

        wx = vx + omega_nd * ry
        wy = vy - omega_nd * rx
        wz = vz
        wn = sqrt(wx * wx + wy * wy + wz * wz)
        w_si = wn * self.v_unit

        rho = 0.0
        p_a = 0.0
        a_s = 1.0
        if h_m <= self.atm_top:
            self._atmo(h_m, &rho, &p_a, &a_s)
        q = 0.5 * rho * w_si * w_si
        heat = q * w_si

        alpha = 0.0
        axial = 0.0
        has_dir = False
        if mode != MODE_COAST:
            if mode == MODE_SRM:
                _srm_state(p, t_s, hint, &tvac, &thrust_n)
                thrust_n = tvac - p_a * p.ae
                if thrust_n < 0.0:
                    thrust_n = 0.0
            elif mode == MODE_STAGE2:
                thrust_n = self.stage2_thrust
            elif mode == MODE_STAGE3:
                thrust_n = self.stage3_thrust
            else:
                thrust_n = self.aocs_thrust
            has_dir = self._thrust_dir(p, arc, t_s, rx, ry, rz, vx, vy, vz,
                                       wx, wy, wz, tdir)
            if has_dir:
                if wn > 0.0 and thrust_n > 0.0:
                    c = (tdir[0] * wx + tdir[1] * wy + tdir[2] * wz) / wn
                    if c > 1.0:
                        c = 1.0
                    elif c < -1.0:
                        c = -1.0
                    alpha = acos(c) * (180.0 / 3.141592653589793)
                inv_r3 = 1.0 / (rn * rn * rn)
                gax = -rx * inv_r3
                gay = -ry * inv_r3
                gaz = -rz * inv_r3
                if rho > 0.0 and wn > 0.0:
                    cd = self._drag_cd(w_si / a_s)
                    d_acc = 0.5 * rho * self.s_ref * cd * w_si * w_si / (m_kg * self.acc_unit)
                    f = d_acc / wn
                    gax -= f * wx
                    gay -= f * wy
                    gaz -= f * wz
                a_t = thrust_n / (m_kg * self.acc_unit)
                gax += a_t * tdir[0]
                gay += a_t * tdir[1]
                gaz += a_t * tdir[2]
                axial = (gax * tdir[0] + gay * tdir[1] + gaz * tdir[2]) \
                    * self.acc_unit / self.g0

        if arc <= 7:
            peak_push(pk_q, q, t_s)
            peak_push(pk_qa, q * alpha, t_s)
        if arc >= 7:
            peak_push(pk_heat, heat, t_s)
        if arc <= 4:
            peak_push(pk_ax1, axial, t_s)
        else:
            peak_push(pk_ax2, axial, t_s)

        if dense:
            s = rz / rn
            if s > 1.0:
                s = 1.0
            elif s < -1.0:
                s = -1.0
            lat = asin(s) * (180.0 / 3.141592653589793)
            lon = atan2(ry, rx) * (180.0 / 3.141592653589793) \
                - self.omega * t_s * (180.0 / 3.141592653589793)
            lon = fmod(lon + 180.0, 360.0)
            if lon < 0.0:
                lon += 360.0
            lon -= 180.0
            vn = sqrt(vx * vx + vy * vy + vz * vz)
            if mode == MODE_COAST:
                if wn > 0.0:
                    tdir[0] = wx / wn
                    tdir[1] = wy / wn
                    tdir[2] = wz / wn
                    has_dir = True
                else:
                    has_dir = False
            if not has_dir:
                fpa = 90.0
                azm = 0.0
            else:
                ux = rx / rn
                uy = ry / rn
                uz = rz / rn
                en = sqrt(ux * ux + uy * uy)
                if en < 1e-12:
                    fpa = 90.0
                    azm = 0.0
                else:
                    ex = -uy / en
                    ey = ux / en
                    nx = -uz * ey
                    ny = uz * ex
                    nz = ux * ey - uy * ex
                    s = tdir[0] * ux + tdir[1] * uy + tdir[2] * uz
                    if s > 1.0:
                        s = 1.0
                    elif s < -1.0:
                        s = -1.0
                    fpa = asin(s) * (180.0 / 3.141592653589793)
                    azm = atan2(tdir[0] * ex + tdir[1] * ey,
                                tdir[0] * nx + tdir[1] * ny + tdir[2] * nz) \
                        * (180.0 / 3.141592653589793)
            idx = n_rows[0]
            if idx < rows.shape[0]:
                rows[idx, 0] = t_s
                rows[idx, 1] = arc
                rows[idx, 2] = h_m
                rows[idx, 3] = lat
                rows[idx, 4] = lon
                rows[idx, 5] = vn * self.v_unit
                rows[idx, 6] = w_si
                rows[idx, 7] = m_kg
                rows[idx, 8] = q
                rows[idx, 9] = alpha
                rows[idx, 10] = q * alpha
                rows[idx, 11] = axial
                rows[idx, 12] = heat
                rows[idx, 13] = fpa
                rows[idx, 14] = azm
                n_rows[0] = idx + 1

    def run(self, plan, bint dense=False):
        """Propagate one flight plan; mirrors `_pykernel.propagate`."""
        cdef PlanC P
        cdef int i, j, s, arc, mode
        cdef double[::1] tv = np.ascontiguousarray(plan.times, dtype=np.float64)
        cdef double[::1] kv = np.ascontiguousarray(plan.law_knots, dtype=np.float64)
        cdef double[:, ::1] cv = np.ascontiguousarray(plan.law_coeffs, dtype=np.float64)
        for i in range(11):
            P.times[i] = tv[i]
        for i in range(7):
            P.knots[i] = kv[i]
        for i in range(6):
            for j in range(3):
                P.coeffs[i][j] = cv[i, j]
        P.m0 = plan.m0
        P.drop1 = plan.drop_stage1
        P.drop2 = plan.drop_stage2
        P.kick = plan.kick_angle
        P.azim = plan.launch_azimuth
        P.tan7 = plan.tan_fpa7
        P.tan8 = plan.tan_fpa8
        P.base_pow = plan.base_pow
        P.az3 = plan.stage3_azimuth
        P.fpa9 = plan.injection_fpa
        P.az9 = plan.injection_azimuth
        P.p_ref = plan.p_ref
        P.burn_time = plan.burn_time
        P.at0 = plan.throat_area_0
        P.rbar = plan.erosion_ratio
        P.ae = plan.exit_area
        P.gamma = plan.gamma
        P.thr_eff = plan.thrust_eff
        P.c_star = plan.c_star

        out_arr = np.zeros(OUT_SIZE)
        bnd_arr = np.zeros((11, 8))
        cdef double[::1] out = out_arr
        cdef double[:, ::1] bnd = bnd_arr

        cdef double omega_nd = self.omega * self.t_unit
        cdef double m_unit = P.m0
        cdef double hint = 0.0
        cdef long nfev = 0

        cdef double y[11]
        cdef double ynew[11]
        cdef double ytmp[11]
        cdef double k[7][11]
        cdef double times_nd[11]
        cdef double cl, w

        if plan.start_state is not None:
            sv = np.ascontiguousarray(plan.start_state, dtype=np.float64)
            for i in range(11):
                y[i] = sv[i]
        else:
            for i in range(11):
                y[i] = 0.0
            cl = cos(self.lat_rad)
            y[0] = cl * cos(self.lon_rad)
            y[1] = cl * sin(self.lon_rad)
            y[2] = sin(self.lat_rad)
            w = self.omega * self.t_unit
            y[3] = -w * y[1]
            y[4] = w * y[0]
            y[6] = 1.0
        for i in range(11):
            times_nd[i] = P.times[i] / self.t_unit

        # dense row buffer sized from the sampling grids
        cdef long cap = 0
        cdef double span_s, dts
        rows_arr = None
        cdef double[:, ::1] rows = None
        if dense:
            for arc in range(1, 11):
                span_s = P.times[arc] - P.times[arc - 1]
                if span_s <= 0.0:
                    continue
                if arc == 9:
                    dts = self.sample_dt
                    if (P.times[9] - P.times[8]) / 2000.0 > dts:
                        dts = (P.times[9] - P.times[8]) / 2000.0
                else:
                    dts = self.sample_dt
                cap += <long> (span_s / dts) + 3
            rows_arr = np.zeros((cap, 15))
            rows = rows_arr
        else:
            rows_arr = np.zeros((0, 15))
            rows = rows_arr
        cdef long n_rows = 0

        cdef Peak pk_q, pk_qa, pk_heat, pk_ax1, pk_ax2
        peak_init(&pk_q, self.sample_dt)
        peak_init(&pk_qa, self.sample_dt)
        peak_init(&pk_heat, self.sample_dt)
        peak_init(&pk_ax1, self.sample_dt)
        peak_init(&pk_ax2, self.sample_dt)
        cdef double last_sample_t = -INFINITY

        out[O_VI] = sqrt(y[3] * y[3] + y[4] * y[4] + y[5] * y[5]) * self.v_unit
        cdef double crash_rn = 1.0 - 1000.0 / self.re

        bnd[0, 0] = 0.0
        for i in range(3):
            bnd[0, 1 + i] = y[i] * self.re
            bnd[0, 4 + i] = y[3 + i] * self.v_unit
        bnd[0, 7] = y[6] * m_unit

        cdef double status = STAT_OK
        cdef double t = times_nd[0]
        cdef double t_a, t_b, span, dt_s, dt_nd, next_s, h, err, e, sc
        cdef double t_new, theta, acc, rn_new, alt_a, alt_b
        cdef double f0n[11]
        cdef double d0, d1, d2, h0, h1, dm
        cdef bint last, bad, do_sample, always_sample, ok_elem
        cdef long steps
        cdef double arc_status
        cdef double sma, ecc, incl, rp, ra, energy, hmagv

        for arc in range(1, 11):
            mode = ARC_MODE_TAB[arc - 1]
            t_a = times_nd[arc - 1]
            t_b = times_nd[arc]
            span = t_b - t_a
            if span <= 0.0:
                bnd[arc, 0] = t_b * self.t_unit
                for i in range(3):
                    bnd[arc, 1 + i] = y[i] * self.re
                    bnd[arc, 4 + i] = y[3 + i] * self.v_unit
                bnd[arc, 7] = y[6] * m_unit
                continue

            if dense and arc == 9:
                dt_s = self.sample_dt
                if (P.times[9] - P.times[8]) / 2000.0 > dt_s:
                    dt_s = (P.times[9] - P.times[8]) / 2000.0
            else:
                dt_s = self.sample_dt
            dt_nd = dt_s / self.t_unit
            pk_q.dt = dt_s
            pk_qa.dt = dt_s
            pk_heat.dt = dt_s
            pk_ax1.dt = dt_s
            pk_ax2.dt = dt_s
            peak_break(&pk_q)
            peak_break(&pk_qa)
            peak_break(&pk_heat)
            peak_break(&pk_ax1)
            peak_break(&pk_ax2)

            always_sample = arc != 9 or dense
            self._take(&P, arc, mode, omega_nd, m_unit, t_a, y, &hint,
                       &pk_q, &pk_qa, &pk_heat, &pk_ax1, &pk_ax2,
                       &last_sample_t, dense, rows, &n_rows)
            next_s = t_a + dt_nd

            if not self._rhs(&P, arc, mode, omega_nd, m_unit, t_a, y, k[0],
                             &hint, &nfev):
                status = STAT_NONFINITE
                out[O_CRASH_T] = t_a * self.t_unit
                break

            # initial step (Hairer-style two-probe heuristic)
            d0 = 0.0
            d1 = 0.0
            for i in range(NSTATE):
                sc = self.atol + self.rtol * fabs(y[i])
                d0 += (y[i] / sc) * (y[i] / sc)
                d1 += (k[0][i] / sc) * (k[0][i] / sc)
            d0 = sqrt(d0 / NSTATE)
            d1 = sqrt(d1 / NSTATE)
            h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
            if h0 > span:
                h0 = span
            for i in range(NSTATE):
                ytmp[i] = y[i] + h0 * k[0][i]
            if self._rhs(&P, arc, mode, omega_nd, m_unit, t_a + h0, ytmp,
                         f0n, &hint, &nfev):
                d2 = 0.0
                for i in range(NSTATE):
                    sc = self.atol + self.rtol * fabs(y[i])
                    d2 += ((f0n[i] - k[0][i]) / sc) * ((f0n[i] - k[0][i]) / sc)
                d2 = sqrt(d2 / NSTATE) / h0
                dm = d1 if d1 > d2 else d2
                if dm <= 1e-15:
                    h1 = h0 * 1e-3 if h0 * 1e-3 > 1e-6 else 1e-6
                else:
                    h1 = pow(0.01 / dm, 0.2)
                h = 100.0 * h0
                if h1 < h:
                    h = h1
                if span < h:
                    h = span
            else:
                h = 1e-6 if 1e-6 < span else span

            t = t_a
            steps = 0
            arc_status = STAT_OK
            while t < t_b:
                steps += 1
                if steps > MAX_STEPS:
                    arc_status = STAT_STALLED
                    break
                if t + h >= t_b:
                    h = t_b - t
                    last = True
                else:
                    last = False
                bad = False
                for s in range(1, 7):
                    for i in range(NSTATE):
                        acc = 0.0
                        for j in range(s):
                            acc += A_TAB[s][j] * k[j][i]
                        ytmp[i] = y[i] + h * acc
                    if not self._rhs(&P, arc, mode, omega_nd, m_unit,
                                     t + C_NODE[s] * h, ytmp, k[s], &hint, &nfev):
                        bad = True
                        break
                if bad:
                    h *= 0.25
                    if h < 1e-14 * span:
                        arc_status = STAT_NONFINITE
                        break
                    continue
                for i in range(NSTATE):
                    ynew[i] = ytmp[i]
                err = 0.0
                for i in range(NSTATE):
                    e = 0.0
                    for s in range(7):
                        e += E_TAB[s] * k[s][i]
                    e *= h
                    sc = self.atol + self.rtol * (fabs(y[i]) if fabs(y[i]) > fabs(ynew[i]) else fabs(ynew[i]))
                    err += (e / sc) * (e / sc)
                err = sqrt(err / NSTATE)
                if not isfinite(err):
                    h *= 0.25
                    if h < 1e-14 * span:
                        arc_status = STAT_NONFINITE
                        break
                    continue
                if err > 1.0:
                    e = 0.9 * pow(err, -0.2)
                    h *= 0.2 if e < 0.2 else e
                    if h < 1e-14 * span:
                        arc_status = STAT_STALLED
                        break
                    continue
                t_new = t_b if last else t + h
                do_sample = always_sample
                if arc == 9 and not dense:
                    alt_a = (sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]) - 1.0) * self.re
                    alt_b = (sqrt(ynew[0] * ynew[0] + ynew[1] * ynew[1] + ynew[2] * ynew[2]) - 1.0) * self.re
                    do_sample = (alt_a if alt_a < alt_b else alt_b) < SAMPLE_ALT
                if do_sample:
                    while next_s <= t_new + 1e-14 * span:
                        theta = (next_s - t) / h
                        if theta > 1.0:
                            theta = 1.0
                        for i in range(NSTATE):
                            acc = 0.0
                            for s in range(7):
                                acc += k[s][i] * (theta * (P_TAB[s][0] + theta * (
                                    P_TAB[s][1] + theta * (P_TAB[s][2] + theta * P_TAB[s][3]))))
                            ytmp[i] = y[i] + h * acc
                        self._take(&P, arc, mode, omega_nd, m_unit, next_s,
                                   ytmp, &hint, &pk_q, &pk_qa, &pk_heat,
                                   &pk_ax1, &pk_ax2, &last_sample_t, dense,
                                   rows, &n_rows)
                        next_s += dt_nd
                else:
                    while next_s <= t_new + 1e-14 * span:
                        next_s += dt_nd
                    peak_break(&pk_q)
                    peak_break(&pk_qa)
                    peak_break(&pk_heat)
                    peak_break(&pk_ax1)
                    peak_break(&pk_ax2)
                rn_new = sqrt(ynew[0] * ynew[0] + ynew[1] * ynew[1] + ynew[2] * ynew[2])
                if rn_new < crash_rn:
                    arc_status = STAT_CRASH
                    t = t_new
                    break
                for i in range(NSTATE):
                    y[i] = ynew[i]
                    k[0][i] = k[6][i]
                t = t_new
                if not last:
                    e = 0.9 * pow(err, -0.2)
                    if e < 0.2:
                        e = 0.2
                    elif e > 5.0:
                        e = 5.0
                    h *= e
                    if t + h > t_b:
                        h = t_b - t

            if arc_status != STAT_OK:
                status = arc_status
                out[O_CRASH_T] = t * self.t_unit
                break

            if t_b - last_sample_t > 1e-9 * dt_nd:
                self._take(&P, arc, mode, omega_nd, m_unit, t_b, y, &hint,
                           &pk_q, &pk_qa, &pk_heat, &pk_ax1, &pk_ax2,
                           &last_sample_t, dense, rows, &n_rows)
            t = t_b
            if arc == 4:
                y[6] -= P.drop1 / m_unit
            elif arc == 6:
                y[6] -= P.drop2 / m_unit
            bnd[arc, 0] = t_b * self.t_unit
            for i in range(3):
                bnd[arc, 1 + i] = y[i] * self.re
                bnd[arc, 4 + i] = y[3 + i] * self.v_unit
            bnd[arc, 7] = y[6] * m_unit
            if arc == 8:
                ok_elem = _elements(y[0], y[1], y[2], y[3], y[4], y[5],
                                    &sma, &ecc, &incl, &rp, &ra, &energy, &hmagv)
                out[O_ELEM8_OK] = 1.0 if ok_elem else 0.0
                out[O_SMA_T8] = sma * self.re
                out[O_ECC_T8] = ecc
                out[O_RP_T8] = rp * self.re
                out[O_RA_T8] = ra * self.re
            if y[6] <= 0.0:
                status = STAT_NONFINITE
                out[O_CRASH_T] = t_b * self.t_unit
                break

        out[O_STATUS] = status
        out[O_T_END] = t * self.t_unit
        out[O_NFEV] = <double> nfev
        out[O_MASS_F] = y[6] * m_unit
        out[O_VF] = sqrt(y[3] * y[3] + y[4] * y[4] + y[5] * y[5]) * self.v_unit
        out[O_DV_PROP] = y[7] * self.v_unit
        out[O_DV_GRAV] = y[8] * self.v_unit
        out[O_DV_AERO] = y[9] * self.v_unit
        out[O_DV_MIS] = y[10] * self.v_unit

        ok_elem = _elements(y[0], y[1], y[2], y[3], y[4], y[5],
                            &sma, &ecc, &incl, &rp, &ra, &energy, &hmagv)
        out[O_ELEM_OK] = 1.0 if ok_elem else 0.0
        out[O_SMA] = sma * self.re
        out[O_ECC] = ecc
        out[O_INCL] = incl
        out[O_RP] = rp * self.re
        out[O_RA] = ra * self.re
        out[O_ENERGY] = energy

        cdef double pv, pt
        peak_result(&pk_q, &pv, &pt)
        out[O_WQ] = pv
        out[O_WQ_T] = pt
        peak_result(&pk_qa, &pv, &pt)
        out[O_WQA] = pv
        out[O_WQA_T] = pt
        peak_result(&pk_heat, &pv, &pt)
        out[O_WHEAT] = pv
        out[O_WHEAT_T] = pt
        peak_result(&pk_ax1, &pv, &pt)
        out[O_WAX1] = pv
        out[O_WAX1_T] = pt
        peak_result(&pk_ax2, &pv, &pt)
        out[O_WAX2] = pv
        out[O_WAX2_T] = pt

        if dense:
            return out_arr, bnd_arr, rows_arr[:n_rows].copy()
        return out_arr, bnd_arr, None
