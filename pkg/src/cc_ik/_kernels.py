"""Numba-compiled numeric core shared by the public API and the solve loop.

Everything here works on plain float64 arrays. Twists are 6-vectors in
[omega; v] order (angular part first); rigid transforms are 4x4 homogeneous
matrices. The public modules (liegroup, cc_model, solvers) wrap these
kernels with typed containers and validation.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# Bending axis when phi = 0 (y-axis) and the reference direction of the
# curvature-center offset (x-axis).
BEND_AXIS = np.array([0.0, 1.0, 0.0])
PHI_REF = np.array([1.0, 0.0, 0.0])

# Below this rotation angle the closed forms switch to series expansions.
SMALL_ANGLE = 1e-6
# Bending angles |kappa*l| below this use the straight-segment limits.
SMALL_BEND = 1e-6
# Solve-loop status codes.
STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_LOG_BRANCH = 2
# Method codes.
METHOD_JACOBIAN = 0
METHOD_DLS = 1
METHOD_VVL = 2


@njit(cache=True)
def skew(v):
    m = np.zeros((3, 3))
    m[0, 1] = -v[2]
    m[0, 2] = v[1]
    m[1, 0] = v[2]
    m[1, 2] = -v[0]
    m[2, 0] = -v[1]
    m[2, 1] = v[0]
    return m


@njit(cache=True)
def rotz(a):
    c = np.cos(a)
    s = np.sin(a)
    m = np.eye(3)
    m[0, 0] = c
    m[0, 1] = -s
    m[1, 0] = s
    m[1, 1] = c
    return m


@njit(cache=True)
def exp_se3(V):
    """Matrix exponential of hat(V) for a twist V = [omega; v]."""
    w = V[:3]
    th = np.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
    W = skew(w)
    W2 = W @ W
    if th < SMALL_ANGLE:
        t2 = th * th
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0          # sin(th)/th
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0          # (1-cos th)/th^2
        c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0  # (th-sin th)/th^3
    else:
        a = np.sin(th) / th
        b = (1.0 - np.cos(th)) / (th * th)
        c = (th - np.sin(th)) / (th * th * th)
    T = np.eye(4)
    T[:3, :3] = np.eye(3) + a * W + b * W2
    T[:3, 3] = (np.eye(3) + b * W + c * W2) @ V[3:]
    return T


@njit(cache=True)
def log_se3(T):
    """Principal logarithm of a rigid transform.

    Returns (twist, ok); ok is False when the rotation angle is within
    1e-6 of pi, where the axis is not uniquely recoverable.
    """
    out = np.zeros(6)
    R = T[:3, :3]
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    c = (tr - 1.0) * 0.5
    if c > 1.0:
        c = 1.0
    if c < -1.0:
        c = -1.0
    th = np.arccos(c)
    if th > np.pi - 1e-6:
        return out, False
    w = np.empty(3)
    w[0] = R[2, 1] - R[1, 2]
    w[1] = R[0, 2] - R[2, 0]
    w[2] = R[1, 0] - R[0, 1]
    if th < SMALL_ANGLE:
        w *= 0.5 * (1.0 + th * th / 6.0)
        g = 1.0 / 12.0 + th * th / 720.0
    else:
        w *= th / (2.0 * np.sin(th))
        g = (1.0 - 0.5 * th * np.sin(th) / (1.0 - np.cos(th))) / (th * th)
    W = skew(w)
    Vinv = np.eye(3) - 0.5 * W + g * (W @ W)
    out[:3] = w
    out[3:] = Vinv @ T[:3, 3]
    return out, True


@njit(cache=True)
def inv_tf(T):
    Ti = np.eye(4)
    R = T[:3, :3]
    Ti[:3, :3] = R.T
    Ti[:3, 3] = -(R.T @ T[:3, 3])
    return Ti


@njit(cache=True)
def adjoint_tf(T):
    A = np.zeros((6, 6))
    R = T[:3, :3]
    A[:3, :3] = R
    A[3:, 3:] = R
    A[3:, :3] = skew(T[:3, 3]) @ R
    return A


@njit(cache=True)
def ad_twist(V):
    A = np.zeros((6, 6))
    W = skew(V[:3])
    A[:3, :3] = W
    A[3:, 3:] = W
    A[3:, :3] = skew(V[3:])
    return A


@njit(cache=True)
def segment_twist(kappa, phi, ell):
    """Finite strain twist of one constant-curvature segment."""
    Rp = rotz(phi)
    V = np.empty(6)
    V[:3] = ell * kappa * (Rp @ BEND_AXIS)
    V[3:] = ell * (Rp @ (skew(PHI_REF) @ BEND_AXIS))
    return V


@njit(cache=True)
def partial_twist_kappa(kappa, phi, ell):
    """Right-trivialized derivative of the segment exponential w.r.t. kappa.

    Linear part is kappa^-2 R(phi) (e^{th*W} - th*W - I) q_hat with
    th = kappa*ell and W = skew(bend axis); the series branch evaluates the
    same expression without cancellation for small bending angles.
    """
    Rp = rotz(phi)
    th = kappa * ell
    W = skew(BEND_AXIS)
    W2 = W @ W
    V = np.empty(6)
    V[:3] = ell * (Rp @ BEND_AXIS)
    if np.abs(th) < 1e-4:
        t2 = th * th
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0          # (1-cos th)/th^2
        c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0  # (th-sin th)/th^3
        V[3:] = (ell * ell) * (Rp @ ((b * W2 - c * th * W) @ PHI_REF))
    else:
        E = np.eye(3) + np.sin(th) * W + (1.0 - np.cos(th)) * W2
        V[3:] = (1.0 / (kappa * kappa)) * (Rp @ ((E - th * W - np.eye(3)) @ PHI_REF))
    return V


@njit(cache=True)
def dexp_coefficients(th):
    """Coefficients of the closed-form right dexp operator on se(3):
    I + c1*ad + c2*ad^2 + c3*ad^3 + c4*ad^4 for a twist of rotation angle th.
    Limits at th=0 are 1/2, 1/6, 1/24, 1/120.
    """
    if np.abs(th) < 1e-3:
        t2 = th * th
        c1 = 0.5 - t2 / 24.0 + t2 * t2 / 720.0
        c2 = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
        c3 = 1.0 / 24.0 - t2 / 360.0 + t2 * t2 / 13440.0
        c4 = 1.0 / 120.0 - t2 / 1260.0 + t2 * t2 / 60480.0
        return c1, c2, c3, c4
    s = np.sin(th)
    c = np.cos(th)
    t2 = th * th
    c1 = (4.0 - th * s - 4.0 * c) / (2.0 * t2)
    c2 = (4.0 * th - 5.0 * s + th * c) / (2.0 * t2 * th)
    c3 = (2.0 - th * s - 2.0 * c) / (2.0 * t2 * t2)
    c4 = (2.0 * th - 3.0 * s + th * c) / (2.0 * t2 * t2 * th)
    return c1, c2, c3, c4


@njit(cache=True)
def partial_twist_phi(kappa, phi, ell):
    """Right-trivialized derivative of the segment exponential w.r.t. phi."""
    c = np.cos(phi)
    s = np.sin(phi)
    dRp = np.zeros((3, 3))
    dRp[0, 0] = -s
    dRp[0, 1] = -c
    dRp[1, 0] = c
    dRp[1, 1] = -s
    dV = np.empty(6)
    dV[:3] = ell * kappa * (dRp @ BEND_AXIS)
    dV[3:] = ell * (dRp @ (skew(PHI_REF) @ BEND_AXIS))
    V = segment_twist(kappa, phi, ell)
    A = ad_twist(V)
    c1, c2, c3, c4 = dexp_coefficients(kappa * ell)
    A2 = A @ A
    r = dV + c1 * (A @ dV) + c2 * (A2 @ dV) + c3 * (A2 @ (A @ dV)) + c4 * (A2 @ (A2 @ dV))
    return r


@njit(cache=True)
def partial_twist_length(kappa, phi, ell):
    """Derivative w.r.t. segment length; commutes, so it is V_i / l_i."""
    return segment_twist(kappa, phi, ell) / ell


@njit(cache=True)
def forward_kinematics(kappa, phi, ell):
    """Product of exponentials, base to tip."""
    T = np.eye(4)
    for i in range(kappa.shape[0]):
        T = T @ exp_se3(segment_twist(kappa[i], phi[i], ell[i]))
    return T


@njit(cache=True)
def jacobian(kappa, phi, ell, with_length):
    """Spatial Jacobian and tip transform.

    with_length=False: 6 x 2n, columns interleaved (k1, p1, k2, p2, ...).
    with_length=True:  6 x 3n, columns grouped (k1..kn, p1..pn, l1..ln).
    """
    n = kappa.shape[0]
    m = 3 * n if with_length else 2 * n
    J = np.empty((6, m))
    T = np.eye(4)
    for i in range(n):
        Ad = adjoint_tf(T)
        ck = Ad @ partial_twist_kappa(kappa[i], phi[i], ell[i])
        cp = Ad @ partial_twist_phi(kappa[i], phi[i], ell[i])
        if with_length:
            J[:, i] = ck
            J[:, n + i] = cp
            J[:, 2 * n + i] = Ad @ partial_twist_length(kappa[i], phi[i], ell[i])
        else:
            J[:, 2 * i] = ck
            J[:, 2 * i + 1] = cp
        T = T @ exp_se3(segment_twist(kappa[i], phi[i], ell[i]))
    return J, T


@njit(cache=True)
def pinv_apply(M, r):
    """x = pinv(M) @ r via SVD, zeroing singular values below
    1e-10 * max(m, n) * sigma_max."""
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    cut = 1e-10 * max(M.shape) * s[0]
    k = s.shape[0]
    y = np.zeros(k)
    for i in range(k):
        if s[i] > cut:
            y[i] = (U[:, i] @ r) / s[i]
    return Vt.T @ y


@njit(cache=True)
def solve_loop(kappa, phi, ell, L, T_target, method, beta, lam, tol,
               max_iter, floor_frac, vvl_step_limit, record,
               traj_params, traj_err):
    """Iterative IK loop. Mutates kappa/phi/ell in place.

    Returns (status, iterations, final_error, deadlock_flags, n_recorded).
    When record is True, traj_params (max_iter+1, 3, n) and traj_err
    (max_iter+1,) receive one row per convergence check.
    """
    n = kappa.shape[0]
    dead = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        if np.abs(kappa[i] * ell[i]) >= 2.0 * np.pi:
            dead[i] = True
    n_rec = 0
    e_v = np.inf
    for it in range(max_iter + 1):
        J, T = jacobian(kappa, phi, ell, method == METHOD_VVL)
        VD, ok = log_se3(T_target @ inv_tf(T))
        if not ok:
            return STATUS_LOG_BRANCH, it, np.inf, dead, n_rec
        e_v = np.sqrt(np.sum(VD * VD))
        if record:
            traj_params[n_rec, 0, :] = kappa
            traj_params[n_rec, 1, :] = phi
            traj_params[n_rec, 2, :] = ell
            traj_err[n_rec] = e_v
            n_rec += 1
        if method == METHOD_VVL:
            res = np.empty(6 + n)
            res[:6] = VD
            res[6:] = L - ell
            if np.sqrt(np.sum(res * res)) <= tol:
                # Snap lengths to nominal and require the error to hold.
                T_nom = forward_kinematics(kappa, phi, L)
                VD2, ok2 = log_se3(T_target @ inv_tf(T_nom))
                if ok2:
                    e2 = np.sqrt(np.sum(VD2 * VD2))
                    if e2 <= tol:
                        ell[:] = L
                        return STATUS_CONVERGED, it, e2, dead, n_rec
            if it == max_iter:
                break
            Ja = np.zeros((6 + n, 3 * n))
            Ja[:6, :] = J
            for i in range(n):
                Ja[6 + i, 2 * n + i] = 1.0
            dx = beta * pinv_apply(Ja, res)
            if vvl_step_limit > 0.0:
                norm = np.sqrt(np.sum(dx[:2 * n] * dx[:2 * n]))
                if norm > vvl_step_limit:
                    dx[:2 * n] *= vvl_step_limit / norm
            for i in range(n):
                kappa[i] += dx[i]
                phi[i] += dx[n + i]
                ell[i] += dx[2 * n + i]
                if ell[i] < floor_frac * L[i]:
                    ell[i] = floor_frac * L[i]
        else:
            if e_v <= tol:
                return STATUS_CONVERGED, it, e_v, dead, n_rec
            if it == max_iter:
                break
            if method == METHOD_DLS:
                G = J @ J.T + (lam * lam) * np.eye(6)
                dx = beta * (J.T @ np.linalg.solve(G, VD))
            else:
                dx = beta * pinv_apply(J, VD)
            for i in range(n):
                kappa[i] += dx[2 * i]
                phi[i] += dx[2 * i + 1]
        for i in range(n):
            if np.abs(kappa[i] * ell[i]) >= 2.0 * np.pi:
                dead[i] = True
    return STATUS_MAX_ITER, max_iter, e_v, dead, n_rec


def warmup():
    """Force-compile every kernel (results are disk-cached by numba)."""
    k = np.array([0.3, -0.2])
    p = np.array([0.1, 0.4])
    l = np.array([1.0, 1.0])
    L = np.array([1.0, 1.0])
    T = forward_kinematics(k, p, l)
    jacobian(k, p, l, True)
    log_se3(T)
    pinv_apply(np.eye(3), np.ones(3))
    tp = np.zeros((1, 3, 2))
    te = np.zeros(1)
    solve_loop(k.copy(), p.copy(), l.copy(), L, T, METHOD_JACOBIAN,
               0.5, 0.01, 1e-6, 5, 0.05, 0.0, False, tp, te)
    solve_loop(k.copy(), p.copy(), l.copy() / 3, L, T, METHOD_VVL,
               0.5, 0.01, 1e-6, 5, 0.05, 1.0, False, tp, te)
    solve_loop(k.copy(), p.copy(), l.copy(), L, T, METHOD_DLS,
               0.5, 0.01, 1e-6, 5, 0.05, 0.0, False, tp, te)
