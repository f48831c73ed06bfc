#!/usr/bin/env python3
"""Independent oracle computations for the C++ test suite.

Every closed-form or derived number asserted in the C++ tests is computed here
first, with mpmath high-precision arithmetic or scipy reference solvers, and
frozen into the tests as literals.  This script shares no code with the C++
implementation; it exists so the expected values can be regenerated and
audited independently.

Run:  python3 tools/oracles.py
"""

import mpmath as mp
import numpy as np

mp.mp.dps = 40


# ----------------------------------------------------------------------------
# Point-vortex interaction energy in the unit disc (image-corrected), and the
# induced velocity field.  Conventions used by the whole project:
#   W(b,d)  = +pi * sum_{j!=k} d_j d_k log|b_j-b_k|
#             -pi * sum_{j,k}  d_j d_k log|1-conj(b_j) b_k|
#   velocity: conj(db_l/dt) = -2i * (A_l + B_l),
#   A_l = sum_{k!=l} d_k/(b_l-b_k),  B_l = sum_k d_k conj(b_k)/(1-conj(b_k)b_l)
# ----------------------------------------------------------------------------

def W(b, d):
    N = len(b)
    s = mp.mpf(0)
    for j in range(N):
        for k in range(N):
            if j != k:
                s += d[j] * d[k] * mp.log(abs(b[j] - b[k]))
    t = mp.mpf(0)
    for j in range(N):
        for k in range(N):
            t += d[j] * d[k] * mp.log(abs(1 - mp.conj(b[j]) * b[k]))
    return mp.pi * s - mp.pi * t


def grad_W_fd(b, d, h=mp.mpf("1e-12")):
    """Central finite differences of W; returns complex (dW/dx + i dW/dy)."""
    out = []
    for l in range(len(b)):
        bp = list(b); bm = list(b)
        bp[l] = b[l] + h; bm[l] = b[l] - h
        gx = (W(bp, d) - W(bm, d)) / (2 * h)
        bp[l] = b[l] + 1j * h; bm[l] = b[l] - 1j * h
        gy = (W(bp, d) - W(bm, d)) / (2 * h)
        out.append(gx + 1j * gy)
    return out


def velocity(b, d):
    out = []
    for l in range(len(b)):
        A = mp.mpc(0)
        for k in range(len(b)):
            if k != l:
                A += d[k] / (b[l] - b[k])
        B = mp.mpc(0)
        for k in range(len(b)):
            B += d[k] * mp.conj(b[k]) / (1 - mp.conj(b[k]) * b[l])
        out.append(mp.conj(-2j * (A + B)))
    return out


def momentum_J0(b, d):
    return -mp.mpf(1) / 2 * mp.fsum(d[j] * abs(b[j]) ** 2 for j in range(len(b)))


def ring_config(k, rings):
    """rings: list of (rho, phi, degree) -> expanded (b, d) lists."""
    b, d = [], []
    for rho, phi, deg in rings:
        for beta in range(k):
            b.append(rho * mp.e ** (1j * (phi + 2 * mp.pi * beta / k)))
            d.append(deg)
    return b, d


def single_ring_omega(n, rho):
    """Rotation speed of one ring of n unit vortices at radius rho."""
    return (-2 / rho ** 2) * (mp.mpf(n - 1) / 2 + n * rho ** (2 * n) / (1 - rho ** (2 * n)))


def r0(k):
    return (mp.sqrt(4 * k ** 2 + 1) - 2 * k) ** (mp.mpf(1) / (2 * k))


def fmt(x, digits=17):
    return mp.nstr(x, digits, strip_zeros=False)


def fmtc(z, digits=17):
    return "(%s, %s)" % (fmt(mp.re(z), digits), fmt(mp.im(z), digits))


print("== closed-form speeds ==")
print("omega(1, 0.5) =", fmt(single_ring_omega(1, mp.mpf("0.5"))), " exact -8/3 =", fmt(mp.mpf(-8) / 3))
print("omega(2, 0.5) =", fmt(single_ring_omega(2, mp.mpf("0.5"))), " exact -76/15 =", fmt(mp.mpf(-76) / 15))
print("omega(1, 1e-8) =", fmt(single_ring_omega(1, mp.mpf("1e-8"))))
print("omega(3, 0.5) =", fmt(single_ring_omega(3, mp.mpf("0.5"))))
print("omega(4, 0.5) =", fmt(single_ring_omega(4, mp.mpf("0.5"))))

print()
print("== energy values ==")
print("W({0.5},{+1})        =", fmt(W([mp.mpf("0.5")], [1])), " = -pi ln 0.75 =", fmt(-mp.pi * mp.log(mp.mpf("0.75"))))
print("W({.5,-.5},{+1,+1})  =", fmt(W([mp.mpf("0.5"), mp.mpf("-0.5")], [1, 1])),
      " = -2pi ln 0.9375 =", fmt(-2 * mp.pi * mp.log(mp.mpf("0.9375"))))
b3 = [mp.mpc("0.31", "0.2"), mp.mpc("-0.4", "0.12"), mp.mpc("0.05", "-0.55")]
d3 = [1, -1, 1]
print("W(frozen 3-vortex mixed) =", fmt(W(b3, d3)))
print("J0(frozen 3-vortex mixed) =", fmt(momentum_J0(b3, d3)))
g = grad_W_fd(b3, d3)
print("gradW(frozen) FD:")
for z in g:
    print("   ", fmtc(z, 13))
v = velocity(b3, d3)
print("velocity(frozen):")
for z in v:
    print("   ", fmtc(z, 15))
print("hamiltonian check  d_j*i*v_j  vs  -(1/pi)grad_j:")
for j in range(3):
    print("   ", fmtc(d3[j] * 1j * v[j], 12), fmtc(-g[j] / mp.pi, 12))

print()
print("== velocities ==")
print("v({0.5},{+1}) =", fmtc(velocity([mp.mpf("0.5")], [1])[0]), " expect (0, 4/3)")
b_poly, d_poly = ring_config(3, [(mp.mpf("0.5"), mp.mpf(0), 1)])
om3 = single_ring_omega(3, mp.mpf("0.5"))
vv = velocity(b_poly, d_poly)
print("polygon n=3 rho=0.5: v_0 =", fmtc(vv[0]), "  -i*omega*b_0 =", fmtc(-1j * om3 * b_poly[0]))

print()
print("== staggered equal-radius pairs: critical radius and gradient norms ==")
for k in range(1, 5):
    rr = r0(k)
    print("r0(%d) = %s" % (k, fmt(rr)))
    for shift in (mp.mpf(0), mp.mpf("0.05"), mp.mpf("-0.05")):
        rho = rr + shift
        b, d = ring_config(k, [(rho, mp.mpf(0), 1), (rho, mp.pi / k, -1)])
        gn = mp.sqrt(mp.fsum(abs(z) ** 2 for z in grad_W_fd(b, d)))
        print("   |gradW| at r0%+0.2f = %s" % (float(shift), fmt(gn, 8)))

print()
print("== momentum inversions ==")
print("rho(n=1, p=-1/8) =", fmt(mp.sqrt(2 * mp.mpf("0.125") / 1)))
print("J0 ring n=2 rho=0.5 =", fmt(momentum_J0(*ring_config(2, [(mp.mpf("0.5"), 0, 1)]))))
print("pi*J0 (criterion target) =", fmt(mp.pi * momentum_J0(*ring_config(2, [(mp.mpf("0.5"), 0, 1)]))))


# ----------------------------------------------------------------------------
# Ring-system residual (independent reduction): for ring r with generator
# zeta_r, q_r = zeta_r * (A+B at the generator).  Radial balance requires
# 2*Re q_r + (omega/m_rot)*rho_r^2 = 0; reality requires Im q_r = 0.
# Cross-check Im q_r against the explicit phase-difference sum, using
# P(t) = 2t/(1 - 2t cos(k psi) + t^2) evaluated at mu^k and nu^k.
# ----------------------------------------------------------------------------

def ring_q(k, rings, r):
    b, d = ring_config(k, rings)
    l = r * k  # index of the generator of ring r
    A = mp.mpc(0)
    for kk in range(len(b)):
        if kk != l:
            A += d[kk] / (b[l] - b[kk])
    B = mp.mpc(0)
    for kk in range(len(b)):
        B += d[kk] * mp.conj(b[kk]) / (1 - mp.conj(b[kk]) * b[l])
    return b[l] * (A + B)


def im_q_via_phase_sum(k, rings, r):
    rho_r, phi_r, _ = rings[r]
    s = mp.mpf(0)
    for sdx, (rho_s, phi_s, d_s) in enumerate(rings):
        if sdx == r:
            continue
        psi = phi_s - phi_r
        mu = (rho_s / rho_r) ** k
        nu = (rho_s * rho_r) ** k
        P = lambda t: 2 * t / (1 - 2 * t * mp.cos(k * psi) + t ** 2)
        s += d_s * mp.sin(k * psi) * (P(mu) - P(nu))
    return k * s / 2


print()
print("== ring reduction cross-checks ==")
rings_pert = [(mp.mpf("0.35"), mp.mpf(0), 1), (mp.mpf("0.62"), mp.pi / 2 / 1.7, -1)]
for k in (2, 3):
    for r in (0, 1):
        q = ring_q(k, rings_pert, r)
        print("k=%d ring %d:  Im q = %s   phase-sum = %s" % (k, r, fmt(mp.im(q), 12), fmt(im_q_via_phase_sum(k, rings_pert, r), 12)))

# single-ring consistency: 2*Re q + omega*rho^2 = 0 with the closed form
for n in (1, 2, 3):
    rho = mp.mpf("0.5")
    q = ring_q(n, [(rho, mp.mpf(0), 1)], 0)
    om = single_ring_omega(n, rho)
    print("n=%d: 2 Re q + omega rho^2 = %s" % (n, fmt(2 * mp.re(q) + om * rho ** 2, 8)))


# ----------------------------------------------------------------------------
# Newton solves (independent): staggered pairs and aligned two-ring families.
# Unknowns x = (rho1, rho2, omega_rot); equations: two radial balances plus a
# pinning constraint.  All in mpmath with numerical Jacobian.
# ----------------------------------------------------------------------------

def newton(F, x0, tol=mp.mpf("1e-30"), itmax=80):
    x = [mp.mpf(xi) for xi in x0]
    for _ in range(itmax):
        f = F(x)
        nrm = mp.sqrt(mp.fsum(fi ** 2 for fi in f))
        if nrm < tol:
            break
        n = len(x)
        J = mp.matrix(n, n)
        h = mp.mpf("1e-20")
        for j in range(n):
            xp = list(x); xm = list(x)
            xp[j] += h; xm[j] -= h
            fp, fm = F(xp), F(xm)
            for i in range(n):
                J[i, j] = (fp[i] - fm[i]) / (2 * h)
        dx = mp.lu_solve(J, mp.matrix(f))
        for j in range(n):
            x[j] -= dx[j]
        for j in range(len(x) - 1):  # radii stay in (0,1)
            x[j] = min(max(x[j], mp.mpf("1e-3")), mp.mpf("0.999"))
    return x


def staggered_F(k, r_pin, d1, d2):
    def F(x):
        rho1, rho2, om = x
        rings = [(rho1, mp.mpf(0), d1), (rho2, mp.pi / k, d2)]
        res = []
        for r, (rho, _, dd) in enumerate(rings):
            q = ring_q(k, rings, r)
            res.append(dd * (2 * mp.re(q) + om * rho ** 2))
        res.append(rho1 * rho2 - r_pin ** 2)
        return res
    return F


print()
print("== staggered-pair solves (rho1, rho2, omega_rot) ==")
for (k, rp, d1, d2) in [(1, "0.3", 1, -1), (2, "0.3", 1, -1), (2, "0.45", 1, -1),
                        (2, "0.55", 1, -1), (2, "0.7", -1, 1), (3, "0.35", 1, -1)]:
    rr = mp.mpf(rp)
    x = newton(staggered_F(k, rr, d1, d2), [rr - mp.mpf("0.1"), rr + mp.mpf("0.1"), mp.mpf("0.5")])
    print("k=%d r=%s d=(%+d,%+d): rho1=%s rho2=%s omega_rot=%s" %
          (k, rp, d1, d2, fmt(x[0]), fmt(x[1]), fmt(x[2])))


def aligned_F(k, M, p_target):
    def F(x):
        rhos, om = x[:M], x[M]
        rings = [(rhos[r], mp.mpf(0), 1) for r in range(M)]
        res = []
        for r in range(M):
            q = ring_q(k, rings, r)
            res.append(2 * mp.re(q) + om * rhos[r] ** 2)
        res.append(-k / mp.mpf(2) * mp.fsum(rh ** 2 for rh in rhos) - p_target)
        return res
    return F


print()
print("== aligned two-ring solve, k=2, J0 target p=-0.5 ==")
x = newton(aligned_F(2, 2, mp.mpf("-0.5")), [mp.mpf("0.3"), mp.mpf("0.6"), mp.mpf("-4")])
print("rho1=%s rho2=%s omega_rot=%s" % (fmt(x[0]), fmt(x[1]), fmt(x[2])))
rho1, rho2, om_al = x[0], x[1], x[2]
lhs = -om_al * (rho1 ** 2 + rho2 ** 2)
k_ = 2
rhs = 2 * (2 * mp.mpf(k_ - 1) / 2 + k_ * 1 +
           k_ * mp.fsum((ra * rb) ** k_ / (1 - (ra * rb) ** k_) for ra in (rho1, rho2) for rb in (rho1, rho2)))
print("sum rule: -omega*sum rho^2 =", fmt(lhs, 14), "  rhs =", fmt(rhs, 14))


# ----------------------------------------------------------------------------
# Hessians of H = W/pi - (omega0/m_rot) J0 in generating coordinates
# (one representative vortex per ring; copies rotate rigidly).
# Central second differences of H directly (independent of the C++ route,
# which differences the analytic gradient).
# ----------------------------------------------------------------------------

def H_mod(b, d, om_rot):
    return W(b, d) / mp.pi - om_rot * momentum_J0(b, d)


def expand_gen(k, gens, degs):
    b, d = [], []
    for g, deg in zip(gens, degs):
        for beta in range(k):
            b.append(g * mp.e ** (2j * mp.pi * beta / k))
            d.append(deg)
    return b, d


def hessian_gen(k, gens, degs, om_rot, h=mp.mpf("1e-7")):
    nR = len(gens)
    dim = 2 * nR

    def Hx(xs):
        gg = [mp.mpc(xs[2 * r], xs[2 * r + 1]) for r in range(nR)]
        b, d = expand_gen(k, gg, degs)
        return H_mod(b, d, om_rot)

    x0 = []
    for g in gens:
        x0 += [mp.re(g), mp.im(g)]
    Hm = mp.matrix(dim, dim)
    for i in range(dim):
        for j in range(dim):
            xpp = list(x0); xpm = list(x0); xmp = list(x0); xmm = list(x0)
            xpp[i] += h; xpp[j] += h
            xpm[i] += h; xpm[j] -= h
            xmp[i] -= h; xmp[j] += h
            xmm[i] -= h; xmm[j] -= h
            Hm[i, j] = (Hx(xpp) - Hx(xpm) - Hx(xmp) + Hx(xmm)) / (4 * h ** 2)
    return Hm


print()
print("== single-ring Hessian eigenvalues (generating coords, 2x2) ==")
for n in range(1, 5):
    rho = mp.mpf("0.5")
    om = single_ring_omega(n, rho)
    Hm = hessian_gen(n, [rho], [1], om)
    ev = mp.eig(Hm, left=False, right=False)
    ev = sorted([mp.re(e) for e in ev])
    print("n=%d omega0=%s eig = [%s, %s]" % (n, fmt(om, 10), fmt(ev[0], 10), fmt(ev[1], 10)))

print()
print("== staggered equal-radius pair Hessian (k=1..2, omega=0) ==")
for k in (1, 2):
    rr = r0(k)
    Hm = hessian_gen(k, [rr, rr * mp.e ** (1j * mp.pi / k)], [1, -1], mp.mpf(0))
    ev = sorted([mp.re(e) for e in mp.eig(Hm, left=False, right=False)])
    print("k=%d eig =" % k, "[" + ", ".join(fmt(e, 8) for e in ev) + "]")

print()
print("== aligned two-ring (k=2, p=-0.5) Hessian ==")
Hm = hessian_gen(2, [rho1, rho2], [1, 1], om_al)
ev = sorted([mp.re(e) for e in mp.eig(Hm, left=False, right=False)])
print("eig =", "[" + ", ".join(fmt(e, 8) for e in ev) + "]")


# ----------------------------------------------------------------------------
# Field-side closed forms.
# ----------------------------------------------------------------------------

# ----------------------------------------------------------------------------
# Forecasts for the long gradient-flow runs.  The field dynamics couples
# same-sign vortex pairs repulsively, i.e. with pair term -pi d_j d_k log|.|
# (sign opposite to the ring-system convention used above).  Full Hessians in
# *all* vortex coordinates (not just generating ones) locate the unstable
# directions that seed symmetry-breaking or annihilation in the flow.
# ----------------------------------------------------------------------------

def W_field(b, d):
    N = len(b)
    s = mp.mpf(0)
    for j in range(N):
        for k in range(N):
            if j != k:
                s += d[j] * d[k] * mp.log(abs(b[j] - b[k]))
    t = mp.mpf(0)
    for j in range(N):
        for k in range(N):
            t += d[j] * d[k] * mp.log(abs(1 - mp.conj(b[j]) * b[k]))
    return -mp.pi * s - mp.pi * t


def full_hessian(b0, d, om_rot, energy, h=mp.mpf("1e-6")):
    N = len(b0)
    dim = 2 * N

    def Hx(xs):
        b = [mp.mpc(xs[2 * j], xs[2 * j + 1]) for j in range(N)]
        return energy(b, d) / mp.pi - om_rot * momentum_J0(b, d)

    x0 = []
    for z in b0:
        x0 += [mp.re(z), mp.im(z)]
    Hm = mp.matrix(dim, dim)
    for i in range(dim):
        for j in range(dim):
            xpp = list(x0); xpm = list(x0); xmp = list(x0); xmm = list(x0)
            xpp[i] += h; xpp[j] += h
            xpm[i] += h; xpm[j] -= h
            xmp[i] -= h; xmp[j] += h
            xmm[i] -= h; xmm[j] -= h
            Hm[i, j] = (Hx(xpp) - Hx(xpm) - Hx(xmp) + Hx(xmm)) / (4 * h ** 2)
    return Hm


print()
print("== full Hessians: ring-system convention vs field convention ==")
b2, d2 = ring_config(2, [(mp.mpf("0.5"), 0, 1)])
om2 = single_ring_omega(2, mp.mpf("0.5"))
for name, en in (("ring-system", W), ("field", W_field)):
    ev = sorted(mp.re(e) for e in mp.eig(full_hessian(b2, d2, om2, en), left=False, right=False))
    print("n=2 polygon rho=.5 omega=%s [%s]: eig = [%s]" % (fmt(om2, 6), name, ", ".join(fmt(e, 6) for e in ev)))


def stag_field_F(k, r_pin, d1, d2):
    """Radial balance of the field-convention energy for the staggered pair
    (in-sector: radii free, phases fixed), with product pinning."""
    def F(x):
        rho1, rho2, om = x
        h = mp.mpf("1e-9")

        def Hval(a, bb):
            b, d = ring_config(k, [(a, mp.mpf(0), d1), (bb, mp.pi / k, d2)])
            return W_field(b, d) / mp.pi - om * momentum_J0(b, d)

        g1 = (Hval(rho1 + h, rho2) - Hval(rho1 - h, rho2)) / (2 * h)
        g2 = (Hval(rho1, rho2 + h) - Hval(rho1, rho2 - h)) / (2 * h)
        return [g1, g2, rho1 * rho2 - r_pin ** 2]
    return F


print()
print("== field-convention staggered k=2 radial equilibria (exist?) ==")
mp.mp.dps = 25
for rp in ("0.45", "0.55", "0.65"):
    try:
        x = newton(stag_field_F(2, mp.mpf(rp), 1, -1), [mp.mpf(rp) - mp.mpf("0.08"), mp.mpf(rp) + mp.mpf("0.08"), mp.mpf("0")],
                   tol=mp.mpf("1e-18"), itmax=60)
        rho1, rho2, om = x

        def Hsec(a, bb):
            b, d = ring_config(2, [(a, mp.mpf(0), 1), (bb, mp.pi / 2, -1)])
            return W_field(b, d) / mp.pi - om * momentum_J0(b, d)

        h = mp.mpf("1e-5")
        H11 = (Hsec(rho1 + h, rho2) - 2 * Hsec(rho1, rho2) + Hsec(rho1 - h, rho2)) / h ** 2
        H22 = (Hsec(rho1, rho2 + h) - 2 * Hsec(rho1, rho2) + Hsec(rho1, rho2 - h)) / h ** 2
        H12 = (Hsec(rho1 + h, rho2 + h) - Hsec(rho1 + h, rho2 - h) - Hsec(rho1 - h, rho2 + h) + Hsec(rho1 - h, rho2 - h)) / (4 * h ** 2)
        tr = H11 + H22
        det = H11 * H22 - H12 ** 2
        print("r=%s: rho1=%s rho2=%s om=%s | radial-2dof Hess tr=%s det=%s" %
              (rp, fmt(rho1, 8), fmt(rho2, 8), fmt(om, 8), fmt(tr, 6), fmt(det, 6)))
    except Exception as e:
        print("r=%s: no convergence (%s)" % (rp, type(e).__name__))
mp.mp.dps = 40

print()
print("== field energies ==")
for eps in ("0.1", "0.05"):
    e = mp.mpf(eps)
    print("E(r e^{i theta}, eps=%s) = pi + pi/(12 eps^2) = %s" % (eps, fmt(mp.pi + mp.pi / (12 * e ** 2))))

print()
print("== two-vortex energy-difference targets (equal separation 1) ==")
p_cfg = [mp.mpf("0.5"), mp.mpf("-0.5")]
q_cfg = [mp.mpc("0.15", "0.5"), mp.mpc("0.15", "-0.5")]
Wp = W(p_cfg, [1, 1]); Wq = W(q_cfg, [1, 1])
print("W(p) =", fmt(Wp), " W(q) =", fmt(Wq), " W(p)-W(q) =", fmt(Wp - Wq))

print()
print("== radial heat decay rates (first Bessel zeros squared) ==")
for j in (1, 2):
    a = mp.besseljzero(j, 1)
    print("j=%d: alpha=%s alpha^2=%s" % (j, fmt(a), fmt(a ** 2)))

print()
print("== bump test-function pairing targets (criterion: jacobian estimate) ==")


def bump(z, z0, R):
    t = abs(z - z0) ** 2 / R ** 2
    if t >= 1:
        return mp.mpf(0)
    return mp.e ** (1 - 1 / (1 - t))


cfg_b = [mp.mpf("0.5"), mp.mpf("-0.5")]
cfg_d = [1, 1]
bumps = [(mp.mpc("0.5", "0"), mp.mpf("0.35")), (mp.mpc("-0.5", "0"), mp.mpf("0.35")), (mp.mpc("0", "0"), mp.mpf("0.8"))]
for i, (z0, R) in enumerate(bumps):
    target = mp.pi * mp.fsum(cfg_d[j] * bump(cfg_b[j], z0, R) for j in range(2))
    print("bump %d at %s R=%s: pi*sum d_i phi(p_i) = %s" % (i, fmtc(z0, 3), fmt(R, 3), fmt(target, 12)))


# ----------------------------------------------------------------------------
# Degree-1 radial core profile: I(t) and the core constant.
# Reference solve with scipy's collocation BVP solver (independent of the C++
# damped-Newton route):  f'' + f'/r - f/r^2 + f(1-f^2)/t^2 = 0, f(0)=0, f(1)=1.
# I(t) = pi * int (f'^2 + f^2/r^2) r dr + pi/(2 t^2) int (1-f^2)^2 r dr.
# gamma = lim_{t->0} I(t) + pi log t.
# ----------------------------------------------------------------------------

from scipy.integrate import solve_bvp
from scipy.integrate import simpson


def core_I(t, nmesh=4001):
    def rhs(r, y):
        f, fp = y
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.vstack([fp, -fp / r + f / r ** 2 - f * (1 - f ** 2) / t ** 2])
        return out

    def bc(ya, yb):
        return np.array([ya[0], yb[0] - 1.0])

    r = np.linspace(1e-9, 1.0, nmesh)
    finit = r / np.sqrt(r ** 2 + 2 * t ** 2)
    y0 = np.vstack([finit, np.gradient(finit, r)])
    sol = solve_bvp(rhs, bc, r, y0, tol=1e-12, max_nodes=400000)
    rr = np.linspace(1e-9, 1.0, 20001)
    f = sol.sol(rr)[0]
    fp = sol.sol(rr)[1]
    grad = np.pi * simpson((fp ** 2 + (f / rr) ** 2) * rr, x=rr)
    pot = np.pi / (2 * t ** 2) * simpson((1 - f ** 2) ** 2 * rr, x=rr)
    return grad + pot


print()
print("== core constant ==")
vals = []
for t in (0.1, 0.05, 0.025, 0.0125):
    I = core_I(t)
    g = I + np.pi * np.log(t)
    vals.append((t, g))
    print("t=%-7g I(t)=%.12f  I+pi log t = %.12f" % (t, I, g))
(t1, g1), (t2, g2) = vals[-2], vals[-1]
gex = (t1 ** 2 * g2 - t2 ** 2 * g1) / (t1 ** 2 - t2 ** 2)
print("Richardson (t^2 model) gamma =", "%.12f" % gex)
