"""Pure-python trajectory propagation kernel.

Reference implementation of the hot evaluation path: ten arcs integrated
with an adaptive Dormand-Prince 5(4) scheme in nondimensional units, dense
constraint sampling every 0.1 s with quadratic peak refinement, staging mass
drops, velocity-budget quadratures carried as extra states, and terminal
orbital elements.  The compiled kernel (`ascentopt._core`) mirrors this file
expression-for-expression; scalar math is deliberately written out so both
backends perform the same floating-point operations in the same order.
"""

from __future__ import annotations

import math

import numpy as np

from ._kernelspec import (ARC_MODES, MODE_AOCS, MODE_COAST, MODE_SRM,
                          MODE_STAGE2, MODE_STAGE3, OUT_SIZE, O_CRASH_T,
                          O_DV_AERO, O_DV_GRAV, O_DV_MIS, O_DV_PROP, O_ECC,
                          O_ECC_T8, O_ELEM8_OK, O_ELEM_OK, O_ENERGY, O_INCL,
                          O_MASS_F, O_NFEV, O_RA, O_RA_T8, O_RP, O_RP_T8,
                          O_SMA, O_SMA_T8, O_STATUS, O_T_END, O_VF, O_VI,
                          O_WAX1, O_WAX1_T, O_WAX2, O_WAX2_T, O_WHEAT,
                          O_WHEAT_T, O_WQ, O_WQ_T, O_WQA, O_WQA_T,
                          SAMPLE_ALTITUDE, STATUS_CRASHED, STATUS_NONFINITE,
                          STATUS_OK, STATUS_STALLED, FlightPlan, StaticTables,
                          initial_state)

__all__ = ["propagate"]

_NSTATE = 11

# Dormand-Prince 5(4) tableau (FSAL; the error estimate uses the trailing
# stage, the quartic interpolant reuses all seven)
_C = (0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0)
_A = (
    (),
    (0.2,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
     11.0 / 84.0),
)
_E = (71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
      -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
_P = (
    (1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0),
    (0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0),
    (0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0),
    (0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0),
    (0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0,
     69997945.0 / 29380423.0),
)

_MAX_STEPS = 500_000


def _atmo(st: StaticTables, h: float) -> tuple[float, float, float]:
    """(density, pressure, speed of sound) at geometric altitude h [m]."""
    if h < 0.0:
        h = 0.0
    if h > st.atm_top:
        return 0.0, 0.0, math.sqrt(st.atm_gamma * st.atm_r_air * st.atm_t86)
    if h > 86000.0:
        decay = math.exp(-(h - 86000.0) / st.atm_scale86)
        return (st.atm_rho86 * decay, st.atm_p86 * decay,
                math.sqrt(st.atm_gamma * st.atm_r_air * st.atm_t86))
    hp = st.atm_r0 * h / (st.atm_r0 + h)
    hb = st.atm_h_base
    i = 6
    while i > 0 and hp < hb[i]:
        i -= 1
    dh = hp - hb[i]
    lapse = st.atm_lapse[i]
    tb = st.atm_t_base[i]
    t = tb + lapse * dh
    if lapse == 0.0:
        p = st.atm_p_base[i] * math.exp(-st.g0 * dh / (st.atm_r_air * tb))
    else:
        p = st.atm_p_base[i] * (tb / t) ** (st.g0 / (st.atm_r_air * lapse))
    return p / (st.atm_r_air * t), p, math.sqrt(st.atm_gamma * st.atm_r_air * t)


def _drag_cd(st: StaticTables, mach: float) -> float:
    m = st.drag_mach
    c = st.drag_cd
    n = len(m)
    if mach <= m[0]:
        return float(c[0])
    if mach >= m[n - 1]:
        return float(c[n - 1])
    i = 1
    while m[i] < mach:
        i += 1
    w = (mach - m[i - 1]) / (m[i] - m[i - 1])
    return float(c[i - 1] + w * (c[i] - c[i - 1]))


def _exit_ratio(gamma: float, area_ratio: float, hint: float) -> float:
    """Supersonic exit/chamber pressure ratio (same iteration as srm.py)."""
    gg = math.sqrt(gamma) * (2.0 / (gamma + 1.0)) ** ((gamma + 1.0) / (2.0 * (gamma - 1.0)))
    ex_a = 2.0 / gamma
    ex_b = (gamma - 1.0) / gamma
    two_g = 2.0 * gamma / (gamma - 1.0)
    crit = (2.0 / (gamma + 1.0)) ** (gamma / (gamma - 1.0))
    lo = 0.0
    hi = crit
    x = hint if 0.0 < hint < crit else 0.25 * crit
    for _ in range(200):
        xa = x ** ex_a
        xb = x ** ex_b
        g = two_g * xa * (1.0 - xb)
        f = gg - area_ratio * math.sqrt(g)
        if f > 0.0:
            lo = x
        else:
            hi = x
        dg = two_g * (ex_a * xa / x * (1.0 - xb) - ex_b * xa * xb / x)
        df = -area_ratio * dg / (2.0 * math.sqrt(g))
        xn = x - f / df
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-12 * xn:
            return xn
        x = xn
    return x


def _srm_state(plan: FlightPlan, t_s: float, hint: list) -> tuple[float, float]:
    """(vacuum thrust N, mass flow kg/s) of the first-stage motor at t_s."""
    eta = t_s / plan.burn_time
    if eta < 0.0:
        eta = 0.0
    elif eta > 1.0:
        eta = 1.0
    kn = plan.law_knots
    leg = 0
    while leg < 5 and eta > kn[leg + 1]:
        leg += 1
    cf = plan.law_coeffs
    level = cf[leg, 0] + eta * (cf[leg, 1] + eta * cf[leg, 2])
    if level <= 0.0:
        return 0.0, 0.0
    p_c = plan.p_ref * level
    e_frozen = eta if eta < kn[5] else kn[5]
    grow = 1.0 + plan.erosion_ratio * e_frozen
    a_t = plan.throat_area_0 * grow * grow
    ratio = _exit_ratio(plan.gamma, plan.exit_area / a_t, hint[0])
    hint[0] = ratio
    gamma = plan.gamma
    gg = math.sqrt(gamma) * (2.0 / (gamma + 1.0)) ** ((gamma + 1.0) / (2.0 * (gamma - 1.0)))
    cf_vac = (plan.thrust_eff * gg
              * math.sqrt(2.0 * gamma / (gamma - 1.0)
                          * (1.0 - ratio ** ((gamma - 1.0) / gamma)))
              + ratio * plan.exit_area / a_t)
    return p_c * a_t * cf_vac, p_c * a_t / plan.c_star


def _thrust_dir(st: StaticTables, plan: FlightPlan, arc: int, t_s: float,
                r, v, vrel) -> tuple[float, float, float] | None:
    """Unit thrust direction on ``arc``; None when coasting or degenerate."""
    rx, ry, rz = r
    rn = math.sqrt(rx * rx + ry * ry + rz * rz)
    if arc == 1:
        return rx / rn, ry / rn, rz / rn
    if arc == 2 or arc == 3:
        ux, uy, uz = rx / rn, ry / rn, rz / rn
        en = math.sqrt(ux * ux + uy * uy)
        if en < 1e-12:
            return None
        ex, ey = -uy / en, ux / en
        nx = uy * 0.0 - uz * ey
        ny = uz * ex - ux * 0.0
        nz = ux * ey - uy * ex
        if arc == 2:
            t1 = st.liftoff_duration
            t2 = plan.times[2]
            fpa = 90.0 + (t_s - t1) / (t2 - t1) * (plan.kick_angle - 90.0)
        else:
            fpa = plan.kick_angle
        th = math.radians(fpa)
        ps = math.radians(plan.launch_azimuth)
        sth = math.sin(th)
        cth = math.cos(th)
        cps = math.cos(ps)
        sps = math.sin(ps)
        return (sth * ux + cth * (cps * nx + sps * ex),
                sth * uy + cth * (cps * ny + sps * ey),
                sth * uz + cth * (cps * nz + sps * 0.0))
    if arc == 4 or arc == 6:
        wx, wy, wz = vrel
        wn = math.sqrt(wx * wx + wy * wy + wz * wz)
        if wn == 0.0:
            return None
        return wx / wn, wy / wn, wz / wn
    # RTN-framed arcs
    vx, vy, vz = v
    hx = ry * vz - rz * vy
    hy = rz * vx - rx * vz
    hz = rx * vy - ry * vx
    hn = math.sqrt(hx * hx + hy * hy + hz * hz)
    if hn < 1e-12:
        return None
    ux, uy, uz = rx / rn, ry / rn, rz / rn
    nx, ny, nz = hx / hn, hy / hn, hz / hn
    tx = ny * uz - nz * uy
    ty = nz * ux - nx * uz
    tz = nx * uy - ny * ux
    if arc == 8:
        tau = (t_s - plan.times[7]) / (plan.times[8] - plan.times[7])
        bp = plan.base_pow
        num = bp * plan.tan_fpa7 + (plan.tan_fpa8 - bp * plan.tan_fpa7) * tau
        den = bp + (1.0 - bp) * tau
        th = math.atan(num / den)
        ps = math.radians(plan.stage3_azimuth)
    else:
        th = math.radians(plan.injection_fpa)
        ps = math.radians(plan.injection_azimuth)
    sth = math.sin(th)
    cth = math.cos(th)
    cps = math.cos(ps)
    sps = math.sin(ps)
    return (sth * ux + cth * (cps * tx + sps * nx),
            sth * uy + cth * (cps * ty + sps * ny),
            sth * uz + cth * (cps * tz + sps * nz))


def _rhs(st: StaticTables, plan: FlightPlan, arc: int, mode: int,
         omega_nd: float, m_unit: float, t: float, y, dy, hint,
         nfev_box) -> bool:
    """Nondimensional state derivative; False on a non-finite state."""
    nfev_box[0] += 1
    rx, ry, rz = y[0], y[1], y[2]
    vx, vy, vz = y[3], y[4], y[5]
    m = y[6]
    rn = math.sqrt(rx * rx + ry * ry + rz * rz)
    if not (rn > 0.0 and m > 0.0) or not math.isfinite(rn + vx + vy + vz + m):
        return False
    inv_r3 = 1.0 / (rn * rn * rn)
    ax = -rx * inv_r3
    ay = -ry * inv_r3
    az = -rz * inv_r3

    h_m = (rn - 1.0) * st.re
    t_s = t * st.t_unit
    m_kg = m * m_unit

    wx = vx + omega_nd * ry
    wy = vy - omega_nd * rx
    wz = vz
    wn = math.sqrt(wx * wx + wy * wy + wz * wz)

    rho = 0.0
    p_a = 0.0
    d_acc = 0.0
    if h_m <= st.atm_top:
        rho, p_a, a_s = _atmo(st, h_m)
        if rho > 0.0 and wn > 0.0:
            w_si = wn * st.v_unit
            cd = _drag_cd(st, w_si / a_s)
            d_acc = 0.5 * rho * st.s_ref * cd * w_si * w_si / (m_kg * st.acc_unit)
            inv_wn = d_acc / wn
            ax -= inv_wn * wx
            ay -= inv_wn * wy
            az -= inv_wn * wz

    thrust_n = 0.0
    mdot = 0.0
    a_t = 0.0
    tdx = tdy = tdz = 0.0
    if mode != MODE_COAST:
        if mode == MODE_SRM:
            tvac, mdot = _srm_state(plan, t_s, hint)
            thrust_n = tvac - p_a * plan.exit_area
            if thrust_n < 0.0:
                thrust_n = 0.0
        elif mode == MODE_STAGE2:
            thrust_n = st.stage2_thrust
            mdot = st.stage2_mdot
        elif mode == MODE_STAGE3:
            thrust_n = st.stage3_thrust
            mdot = st.stage3_mdot
        else:
            thrust_n = st.aocs_thrust
            mdot = st.aocs_mdot
        tdir = _thrust_dir(st, plan, arc, t_s, (rx, ry, rz), (vx, vy, vz),
                           (wx, wy, wz))
        if tdir is None:
            return False
        tdx, tdy, tdz = tdir
        a_t = thrust_n / (m_kg * st.acc_unit)
        ax += a_t * tdx
        ay += a_t * tdy
        az += a_t * tdz

    dy[0] = vx
    dy[1] = vy
    dy[2] = vz
    dy[3] = ax
    dy[4] = ay
    dy[5] = az
    dy[6] = -mdot * st.t_unit / m_unit

    vn = math.sqrt(vx * vx + vy * vy + vz * vz)
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


class _Peak:
    """Running maximum with quadratic refinement around the worst sample."""

    __slots__ = ("dt", "best", "best_t", "best_dt", "prev_v", "prev_t",
                 "best_prev", "prev_ok", "best_next", "next_ok", "pending")

    def __init__(self, dt: float):
        self.dt = dt
        self.best = -math.inf
        self.best_t = math.nan
        self.best_dt = dt
        self.prev_v = math.nan
        self.prev_t = math.nan
        self.best_prev = math.nan
        self.prev_ok = False
        self.best_next = math.nan
        self.next_ok = False
        self.pending = False

    def push(self, v: float, t: float) -> None:
        gap_ok = (not math.isnan(self.prev_t)
                  and abs((t - self.prev_t) - self.dt) < 1e-6 * self.dt)
        if self.pending:
            self.best_next = v
            self.next_ok = gap_ok
            self.pending = False
        if v > self.best:
            self.best = v
            self.best_t = t
            self.best_dt = self.dt
            self.best_prev = self.prev_v
            self.prev_ok = gap_ok
            self.pending = True
            self.next_ok = False
        self.prev_v = v
        self.prev_t = t

    def break_run(self) -> None:
        self.prev_t = math.nan
        self.prev_v = math.nan

    def result(self) -> tuple[float, float]:
        """(refined maximum, its time)."""
        if self.best == -math.inf:
            return 0.0, math.nan
        if self.prev_ok and self.next_ok:
            y0, y1, y2 = self.best_prev, self.best, self.best_next
            denom = y0 - 2.0 * y1 + y2
            if denom < 0.0:
                b = 0.5 * (y2 - y0)
                tau = -b / denom
                if -1.0 < tau < 1.0:
                    return y1 - b * b / (2.0 * denom), self.best_t + tau * self.best_dt
        return self.best, self.best_t


def _elements(rx, ry, rz, vx, vy, vz):
    """Nondimensional two-body elements: (ok, sma, ecc, incl_deg, rp, ra,
    energy, hmag)."""
    rn = math.sqrt(rx * rx + ry * ry + rz * rz)
    v2 = vx * vx + vy * vy + vz * vz
    energy = 0.5 * v2 - 1.0 / rn
    hx = ry * vz - rz * vy
    hy = rz * vx - rx * vz
    hz = rx * vy - ry * vx
    hn = math.sqrt(hx * hx + hy * hy + hz * hz)
    if hn < 1e-12:
        return False, 0.0, 0.0, 0.0, 0.0, 0.0, energy, hn
    incl = math.degrees(math.acos(max(-1.0, min(1.0, hz / hn))))
    rv = rx * vx + ry * vy + rz * vz
    coef = v2 - 1.0 / rn
    ex = coef * rx - rv * vx
    ey = coef * ry - rv * vy
    ez = coef * rz - rv * vz
    ecc = math.sqrt(ex * ex + ey * ey + ez * ez)
    if energy >= 0.0 or ecc >= 1.0:
        return False, 0.0, ecc, incl, 0.0, 0.0, energy, hn
    sma = -0.5 / energy
    return True, sma, ecc, incl, sma * (1.0 - ecc), sma * (1.0 + ecc), energy, hn


class _Sampler:
    """Dense 0.1-s sampling: constraint peaks and optional export rows."""

    def __init__(self, st: StaticTables, plan: FlightPlan, omega_nd: float,
                 m_unit: float, hint, dense: bool):
        self.st = st
        self.plan = plan
        self.omega_nd = omega_nd
        self.m_unit = m_unit
        self.hint = hint
        self.dense = dense
        self.rows: list[list[float]] | None = [] if dense else None
        self.last_t = -math.inf
        dt = st.sample_dt
        self.peak_q = _Peak(dt)
        self.peak_qa = _Peak(dt)
        self.peak_heat = _Peak(dt)
        self.peak_ax1 = _Peak(dt)
        self.peak_ax2 = _Peak(dt)

    def break_run(self) -> None:
        for p in (self.peak_q, self.peak_qa, self.peak_heat,
                  self.peak_ax1, self.peak_ax2):
            p.break_run()

    def take(self, arc: int, mode: int, t: float, y) -> None:
        st = self.st
        plan = self.plan
        self.last_t = t
        rx, ry, rz = y[0], y[1], y[2]
        vx, vy, vz = y[3], y[4], y[5]
        m = y[6]
        rn = math.sqrt(rx * rx + ry * ry + rz * rz)
        h_m = (rn - 1.0) * st.re
        t_s = t * st.t_unit
        m_kg = m * self.m_unit

        wx = vx + self.omega_nd * ry
        wy = vy - self.omega_nd * rx
        wz = vz
        wn = math.sqrt(wx * wx + wy * wy + wz * wz)
        w_si = wn * st.v_unit

        rho = 0.0
        p_a = 0.0
        a_s = 1.0
        if h_m <= st.atm_top:
            rho, p_a, a_s = _atmo(st, h_m)
        q = 0.5 * rho * w_si * w_si
        heat = q * w_si

        alpha = 0.0
        axial = 0.0
        if mode != MODE_COAST:
            if mode == MODE_SRM:
                tvac, _ = _srm_state(plan, t_s, self.hint)
                thrust_n = tvac - p_a * plan.exit_area
                if thrust_n < 0.0:
                    thrust_n = 0.0
            elif mode == MODE_STAGE2:
                thrust_n = st.stage2_thrust
            elif mode == MODE_STAGE3:
                thrust_n = st.stage3_thrust
            else:
                thrust_n = st.aocs_thrust
            tdir = _thrust_dir(st, plan, arc, t_s, (rx, ry, rz), (vx, vy, vz),
                               (wx, wy, wz))
            if tdir is not None:
                tdx, tdy, tdz = tdir
                if wn > 0.0 and thrust_n > 0.0:
                    c = (tdx * wx + tdy * wy + tdz * wz) / wn
                    alpha = math.degrees(math.acos(max(-1.0, min(1.0, c))))
                # total acceleration projected on the thrust axis
                inv_r3 = 1.0 / (rn * rn * rn)
                gax = -rx * inv_r3
                gay = -ry * inv_r3
                gaz = -rz * inv_r3
                if rho > 0.0 and wn > 0.0:
                    cd = _drag_cd(st, w_si / a_s)
                    d_acc = 0.5 * rho * st.s_ref * cd * w_si * w_si / (m_kg * st.acc_unit)
                    f = d_acc / wn
                    gax -= f * wx
                    gay -= f * wy
                    gaz -= f * wz
                a_t = thrust_n / (m_kg * st.acc_unit)
                gax += a_t * tdx
                gay += a_t * tdy
                gaz += a_t * tdz
                axial = (gax * tdx + gay * tdy + gaz * tdz) * st.acc_unit / st.g0

        if arc <= 7:
            self.peak_q.push(q, t_s)
            self.peak_qa.push(q * alpha, t_s)
        if arc >= 7:
            self.peak_heat.push(heat, t_s)
        if arc <= 4:
            self.peak_ax1.push(axial, t_s)
        else:
            self.peak_ax2.push(axial, t_s)

        if self.dense:
            lat = math.degrees(math.asin(max(-1.0, min(1.0, rz / rn))))
            lon = math.degrees(math.atan2(ry, rx)) - math.degrees(st.omega * t_s)
            lon = (lon + 180.0) % 360.0 - 180.0
            vn = math.sqrt(vx * vx + vy * vy + vz * vz)
            if mode != MODE_COAST:
                dvec = _thrust_dir(st, plan, arc, t_s, (rx, ry, rz),
                                   (vx, vy, vz), (wx, wy, wz))
            else:
                dvec = (wx / wn, wy / wn, wz / wn) if wn > 0.0 else None
            if dvec is None:
                fpa, azm = 90.0, 0.0
            else:
                ux, uy, uz = rx / rn, ry / rn, rz / rn
                en = math.sqrt(ux * ux + uy * uy)
                if en < 1e-12:
                    fpa, azm = 90.0, 0.0
                else:
                    ex, ey = -uy / en, ux / en
                    nx = -uz * ey
                    ny = uz * ex
                    nz = ux * ey - uy * ex
                    s = max(-1.0, min(1.0, dvec[0] * ux + dvec[1] * uy + dvec[2] * uz))
                    fpa = math.degrees(math.asin(s))
                    azm = math.degrees(math.atan2(dvec[0] * ex + dvec[1] * ey,
                                                  dvec[0] * nx + dvec[1] * ny + dvec[2] * nz))
            self.rows.append([t_s, float(arc), h_m, lat, lon, vn * st.v_unit,
                              w_si, m_kg, q, alpha, q * alpha, axial, heat,
                              fpa, azm])


def _initial_step(st, t0, f0, y0, span, rhs):
    n = _NSTATE
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = st.atol + st.rtol * abs(y0[i])
        d0 += (y0[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = math.sqrt(d0 / n)
    d1 = math.sqrt(d1 / n)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    if h0 > span:
        h0 = span
    y1 = [y0[i] + h0 * f0[i] for i in range(n)]
    f1 = [0.0] * n
    ok = rhs(t0 + h0, y1, f1)
    if not ok:
        return min(1e-6, span)
    d2 = 0.0
    for i in range(n):
        sc = st.atol + st.rtol * abs(y0[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = math.sqrt(d2 / n) / h0
    dm = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
    return min(100.0 * h0, h1, span)


def propagate(static: StaticTables, plan: FlightPlan, dense: bool = False
              ) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Propagate all ten arcs.

    Returns the flat output slots, the 11x8 boundary-state table
    (t, position, velocity, mass in SI units) and, in dense mode, the export
    sample rows.
    """
    st = static
    out = np.zeros(OUT_SIZE)
    bnd = np.zeros((11, 8))
    omega_nd = st.omega * st.t_unit
    m_unit = plan.m0
    hint = [0.0]
    nfev = [0]

    if plan.start_state is not None:
        y = [float(v) for v in plan.start_state]
    else:
        y = list(initial_state(st, plan.m0))
    times_nd = [plan.times[i] / st.t_unit for i in range(11)]
    sampler = _Sampler(st, plan, omega_nd, m_unit, hint, dense)

    out[O_VI] = math.sqrt(y[3] ** 2 + y[4] ** 2 + y[5] ** 2) * st.v_unit
    crash_rn = 1.0 - 1000.0 / st.re

    def record_boundary(i: int, t: float) -> None:
        bnd[i, 0] = t * st.t_unit
        for k in range(3):
            bnd[i, 1 + k] = y[k] * st.re
            bnd[i, 4 + k] = y[3 + k] * st.v_unit
        bnd[i, 7] = y[6] * m_unit

    record_boundary(0, 0.0)

    status = STATUS_OK
    t = times_nd[0]
    for arc in range(1, 11):
        mode = ARC_MODES[arc - 1]
        t_a = times_nd[arc - 1]
        t_b = times_nd[arc]
        span = t_b - t_a
        if span <= 0.0:
            record_boundary(arc, t_b)
            continue

        def rhs(tt, yy, dd, _arc=arc, _mode=mode):
            return _rhs(st, plan, _arc, _mode, omega_nd, m_unit, tt, yy, dd,
                        hint, nfev)

        if dense and arc == 9:
            dt_s = max(st.sample_dt, (plan.times[9] - plan.times[8]) / 2000.0)
        else:
            dt_s = st.sample_dt
        dt_nd = dt_s / st.t_unit
        for p in (sampler.peak_q, sampler.peak_qa, sampler.peak_heat,
                  sampler.peak_ax1, sampler.peak_ax2):
            p.dt = dt_s
        sampler.break_run()

        always_sample = arc != 9 or dense
        sampler.take(arc, mode, t_a, y)
        next_s = t_a + dt_nd

        k = [[0.0] * _NSTATE for _ in range(7)]
        if not rhs(t_a, y, k[0]):
            status = STATUS_NONFINITE
            out[O_CRASH_T] = t_a * st.t_unit
            break
        h = _initial_step(st, t_a, k[0], y, span, rhs)
        t = t_a
        ynew = [0.0] * _NSTATE
        ytmp = [0.0] * _NSTATE
        steps = 0
        arc_status = STATUS_OK
        while t < t_b:
            steps += 1
            if steps > _MAX_STEPS:
                arc_status = STATUS_STALLED
                break
            if t + h >= t_b:
                h = t_b - t
                last = True
            else:
                last = False
            bad = False
            for s in range(1, 7):
                a_row = _A[s]
                for i in range(_NSTATE):
                    acc = 0.0
                    for j in range(s):
                        acc += a_row[j] * k[j][i]
                    ytmp[i] = y[i] + h * acc
                if not rhs(t + _C[s] * h, ytmp, k[s]):
                    bad = True
                    break
            if bad:
                h *= 0.25
                if h < 1e-14 * span:
                    arc_status = STATUS_NONFINITE
                    break
                continue
            # the sixth stage lands on the 5th-order solution; the seventh is
            # the FSAL derivative there
            for i in range(_NSTATE):
                ynew[i] = ytmp[i]
            err = 0.0
            for i in range(_NSTATE):
                e = 0.0
                for s in range(7):
                    e += _E[s] * k[s][i]
                e *= h
                sc = st.atol + st.rtol * max(abs(y[i]), abs(ynew[i]))
                err += (e / sc) ** 2
            err = math.sqrt(err / _NSTATE)
            if not math.isfinite(err):
                h *= 0.25
                if h < 1e-14 * span:
                    arc_status = STATUS_NONFINITE
                    break
                continue
            if err > 1.0:
                h *= max(0.2, 0.9 * err ** -0.2)
                if h < 1e-14 * span:
                    arc_status = STATUS_STALLED
                    break
                continue
            # accepted
            t_new = t_b if last else t + h
            do_sample = always_sample
            if arc == 9 and not dense:
                alt_a = (math.sqrt(y[0] ** 2 + y[1] ** 2 + y[2] ** 2) - 1.0) * st.re
                alt_b = (math.sqrt(ynew[0] ** 2 + ynew[1] ** 2 + ynew[2] ** 2) - 1.0) * st.re
                do_sample = min(alt_a, alt_b) < SAMPLE_ALTITUDE
            if do_sample:
                while next_s <= t_new + 1e-14 * span:
                    theta = (next_s - t) / h
                    if theta > 1.0:
                        theta = 1.0
                    for i in range(_NSTATE):
                        acc = 0.0
                        for s in range(7):
                            pp = _P[s]
                            acc += k[s][i] * (theta * (pp[0] + theta * (
                                pp[1] + theta * (pp[2] + theta * pp[3]))))
                        ytmp[i] = y[i] + h * acc
                    sampler.take(arc, mode, next_s, ytmp)
                    next_s += dt_nd
            else:
                while next_s <= t_new + 1e-14 * span:
                    next_s += dt_nd
                sampler.break_run()
            rn_new = math.sqrt(ynew[0] ** 2 + ynew[1] ** 2 + ynew[2] ** 2)
            if rn_new < crash_rn:
                arc_status = STATUS_CRASHED
                t = t_new
                break
            for i in range(_NSTATE):
                y[i] = ynew[i]
                k[0][i] = k[6][i]
            t = t_new
            if not last:
                h *= min(5.0, max(0.2, 0.9 * err ** -0.2))
                if t + h > t_b:
                    h = t_b - t

        if arc_status != STATUS_OK:
            status = arc_status
            out[O_CRASH_T] = t * st.t_unit
            break

        if t_b - sampler.last_t > 1e-9 * dt_nd:
            sampler.take(arc, mode, t_b, y)
        t = t_b
        if arc == 4:
            y[6] -= plan.drop_stage1 / m_unit
        elif arc == 6:
            y[6] -= plan.drop_stage2 / m_unit
        record_boundary(arc, t_b)
        if arc == 8:
            ok, sma, ecc, _incl, rp, ra, _en, _hn = _elements(
                y[0], y[1], y[2], y[3], y[4], y[5])
            out[O_ELEM8_OK] = 1.0 if ok else 0.0
            out[O_SMA_T8] = sma * st.re
            out[O_ECC_T8] = ecc
            out[O_RP_T8] = rp * st.re
            out[O_RA_T8] = ra * st.re
        if y[6] <= 0.0:
            status = STATUS_NONFINITE
            out[O_CRASH_T] = t_b * st.t_unit
            break

    out[O_STATUS] = status
    out[O_T_END] = t * st.t_unit
    out[O_NFEV] = float(nfev[0])
    out[O_MASS_F] = y[6] * m_unit
    out[O_VF] = math.sqrt(y[3] ** 2 + y[4] ** 2 + y[5] ** 2) * st.v_unit
    out[O_DV_PROP] = y[7] * st.v_unit
    out[O_DV_GRAV] = y[8] * st.v_unit
    out[O_DV_AERO] = y[9] * st.v_unit
    out[O_DV_MIS] = y[10] * st.v_unit

    ok, sma, ecc, incl, rp, ra, energy, _hn = _elements(
        y[0], y[1], y[2], y[3], y[4], y[5])
    out[O_ELEM_OK] = 1.0 if ok else 0.0
    out[O_SMA] = sma * st.re
    out[O_ECC] = ecc
    out[O_INCL] = incl
    out[O_RP] = rp * st.re
    out[O_RA] = ra * st.re
    out[O_ENERGY] = energy

    out[O_WQ], out[O_WQ_T] = sampler.peak_q.result()
    out[O_WQA], out[O_WQA_T] = sampler.peak_qa.result()
    out[O_WHEAT], out[O_WHEAT_T] = sampler.peak_heat.result()
    out[O_WAX1], out[O_WAX1_T] = sampler.peak_ax1.result()
    out[O_WAX2], out[O_WAX2_T] = sampler.peak_ax2.result()

    samples = None
    if dense:
        samples = np.array(sampler.rows) if sampler.rows else np.zeros((0, 15))
    return out, bnd, samples
