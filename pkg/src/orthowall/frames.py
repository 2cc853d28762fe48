"""B-dependent linear frames for the slow and fast sides of the connection.

The slow frame diagonalizes the linearization transported along the branch
A = sqrt(1 - (1+delta^2) B^2); the fast frame does the same along A = 0 for
(1+delta^2) B^2 > 1.  Both come with mutually inverse coordinate changes,
the first-integral resolution of the neutral coordinate, and a bound check
for the transition (monodromy) operator of the slow rotation block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .params import Params

_SLOW_ROWS = (0, 1, 2, 3, 5)


class FrameDomainError(ValueError):
    pass


class FrameDegeneracyError(ValueError):
    """The complex eigenvalue pairs coalesce (discriminant condition fails)."""


@dataclass(frozen=True)
class SlowFrame:
    """Eigen-data and basis at a base point B0 of the slow branch."""

    b0: float
    a_star: float
    lam_r: float
    lam_i: float
    sigma: float
    eps: float
    delta: float

    @property
    def zbar10(self) -> float:
        """Leading factor of the resolved neutral coordinate."""
        return math.sqrt(1.0 + self.delta**2 * self.b0**2 / (2.0 * self.a_star**2))

    def basis_matrix(self) -> np.ndarray:
        """Columns (Z0, Z1, Vr+, Vi+, Vr-, Vi-) of the frame basis."""
        lr, li, a, b0, d = self.lam_r, self.lam_i, self.a_star, self.b0, self.delta
        g1 = 1.0 + d**2
        e2 = self.eps**2
        # regular forms of the entries carrying 1/B0 factors
        w1 = e2 * b0 * g1 / a
        w2 = e2**2 * b0**3 * g1**3 / a
        z0 = np.array([0.0, 0.0, 0.0, 0.0, a, 0.0])
        z1 = np.array([0.0, -g1 * b0, 0.0, 0.0, 0.0, a])
        dd = lr * lr - li * li

        def vr(s):
            return np.array([
                -s * lr * (lr * lr - 3.0 * li * li) / (2.0 * a * a),
                1.0,
                s * lr,
                dd,
                -s * lr * w1,
                -w2,
            ])

        def vi(s):
            return np.array([
                -(3.0 * lr * lr - li * li) / (2.0 * a * a),
                0.0,
                1.0,
                s * 2.0 * lr,
                -w1,
                -s * 2.0 * lr * w1,
            ])

        return np.column_stack([z0, z1, vr(1.0), vi(1.0), vr(-1.0), vi(-1.0)])

    def _coord_matrix(self) -> np.ndarray:
        """5x5 map (x1, x2, y1, y2, z1) -> deviation rows (A0~, A1, A2, A3, B1)."""
        basis = self.basis_matrix()
        cols = np.column_stack([
            basis[:, 2],                 # Vr+
            self.lam_i * basis[:, 3],    # lam_i Vi+
            basis[:, 4],                 # Vr-
            self.lam_i * basis[:, 5],    # lam_i Vi-
            basis[:, 1],                 # Z1
        ])
        return self.b0 * cols[list(_SLOW_ROWS), :]


def lambda_pair(b0: float, p: Params) -> tuple[float, float]:
    """(lam_r, lam_i) of the slow-frame rotation block at base point b0."""
    astar2 = 1.0 - p.g1 * b0 * b0
    if astar2 <= 0.0:
        raise FrameDomainError(f"1 - (1+delta^2) B^2 = {astar2:.3e} <= 0 at B = {b0}")
    astar = math.sqrt(astar2)
    q = p.epsilon**2 * b0 * b0 * p.g1**2
    if q > astar:
        raise FrameDegeneracyError(
            f"eps^2 B^2 (1+delta^2)^2 = {q:.3e} exceeds {astar:.3e}; complex pairs lost"
        )
    lam_r = math.sqrt(0.5 * (math.sqrt(2.0) * astar + q))
    lam_i = math.sqrt(0.5 * (math.sqrt(2.0) * astar - q))
    return lam_r, lam_i


def slow_frame(b0: float, p: Params, alpha: float | None = None) -> SlowFrame:
    """Construct the slow frame at base point ``b0``.

    ``alpha`` optionally enforces the validity floor a_star >= alpha*delta
    below which the frame entries (growing like a_star^-2) are rejected.
    """
    lam_r, lam_i = lambda_pair(b0, p)
    astar = math.sqrt(1.0 - p.g1 * b0 * b0)
    if alpha is not None and astar < alpha * p.delta * (1.0 - 1e-12):
        raise FrameDomainError(
            f"a_star = {astar:.3e} below validity floor alpha*delta = {alpha * p.delta:.3e}"
        )
    eff_alpha = astar / p.delta if alpha is None else alpha
    sigma = math.sqrt(eff_alpha * p.delta) / 2.0**0.25
    return SlowFrame(
        b0=float(b0), a_star=astar, lam_r=lam_r, lam_i=lam_i,
        sigma=sigma, eps=p.epsilon, delta=p.delta,
    )


def to_slow_coords(s: np.ndarray, frame: SlowFrame) -> np.ndarray:
    """State -> (x1, x2, y1, y2, z1) on the 5-D leaf through frame.b0."""
    if frame.b0 <= 0.0:
        raise FrameDomainError("slow coordinates degenerate at B = 0")
    s = np.asarray(s, dtype=float)
    dev = np.array([s[0] - frame.a_star, s[1], s[2], s[3], s[5]])
    return np.linalg.solve(frame._coord_matrix(), dev)


def from_slow_coords(c: np.ndarray, frame: SlowFrame) -> np.ndarray:
    """(x1, x2, y1, y2, z1) -> state; inverse of :func:`to_slow_coords`."""
    dev = frame._coord_matrix() @ np.asarray(c, dtype=float)
    return np.array([
        frame.a_star + dev[0], dev[1], dev[2], dev[3], frame.b0, dev[4],
    ])


def z1_resolve(c4, frame: SlowFrame, p: Params) -> float:
    """Neutral coordinate z1 >= 0 resolved from the first integral W = 0.

    ``c4`` holds (x1, x2, y1, y2); the positive square root is selected so
    that the reconstructed B' is positive along the growing branch.
    """
    x1, x2, y1, y2 = (float(v) for v in c4)
    lr, li, a, b0 = frame.lam_r, frame.lam_i, frame.a_star, frame.b0
    dd = lr * lr - li * li
    e2 = p.epsilon**2
    g1 = p.g1

    # deviation components divided by their common B0 factor
    a0t = (-lr * (lr * lr - 3.0 * li * li) * (x1 - y1)
           - li * (3.0 * lr * lr - li * li) * (x2 + y2)) / (2.0 * a * a)
    a2 = lr * (x1 - y1) + li * (x2 + y2)
    a3 = dd * (x1 + y1) + 2.0 * lr * li * (x2 - y2)

    rhs = (
        e2 * p.delta**2 * a * a * frame.zbar10**2
        + 2.0 * e2 * a3 * (x1 + y1)
        - e2**2 * g1**2 * a3 * a3 * b0 * b0 / (a * a)
        - e2 * a2 * a2
        + 2.0 * e2 * a * a * a0t * a0t
        + 2.0 * e2 * a * a0t**3 * b0
        + 0.5 * e2 * a0t**4 * b0 * b0
    )
    if rhs < 0.0:
        raise ValueError(
            f"first-integral residual negative ({rhs:.3e}); state off the "
            "admissible region of W = 0"
        )
    return math.sqrt(rhs) / a


def scaled_coords(c: np.ndarray, alpha: float, p: Params) -> np.ndarray:
    """Optional rescaled view of slow coordinates.

    The fast pairs carry the natural size alpha^(3/2) * delta and the
    neutral coordinate eps * delta; dividing them out gives order-one
    quantities for ball checks and reporting.
    """
    c = np.asarray(c, dtype=float)
    out = c.copy()
    out[:4] = c[:4] / (alpha**1.5 * p.delta)
    out[4] = c[4] / (p.epsilon * p.delta)
    return out


@dataclass(frozen=True)
class FastFrame:
    """Basis data on the fast side, where (1+delta^2) B^2 > 1."""

    b0: float
    delta_tilde: float
    eps: float
    delta: float

    def basis_matrix(self) -> np.ndarray:
        """Columns (Vr+, Vi+, Vr-, Vi-, W1-, W1+)."""
        dt = self.delta_tilde
        r2 = math.sqrt(2.0)
        vr_p = np.array([1.0, dt / r2, 0.0, -dt**3 / r2, 0.0, 0.0])
        vr_m = np.array([1.0, -dt / r2, 0.0, dt**3 / r2, 0.0, 0.0])
        vi_p = np.array([0.0, dt / r2, dt**2, dt**3 / r2, 0.0, 0.0])
        vi_m = np.array([0.0, -dt / r2, dt**2, -dt**3 / r2, 0.0, 0.0])
        w1_m = np.array([0.0, 0.0, 0.0, 0.0, 1.0, -self.eps * r2])
        w1_p = np.array([0.0, 0.0, 0.0, 0.0, 1.0, self.eps * r2])
        return np.column_stack([vr_p, vi_p, vr_m, vi_m, w1_m, w1_p])


def fast_frame(b0: float, p: Params) -> FastFrame:
    dt4 = p.g1 * b0 * b0 - 1.0
    if dt4 <= 0.0:
        raise FrameDomainError(
            f"(1+delta^2) B^2 - 1 = {dt4:.3e} <= 0 at B = {b0}; fast frame undefined"
        )
    return FastFrame(b0=float(b0), delta_tilde=dt4**0.25, eps=p.epsilon, delta=p.delta)


def to_fast_coords(s: np.ndarray, frame: FastFrame) -> np.ndarray:
    """State -> (x1, x2, y1, y2, z0, z1) anchored at (A, B) = (0, 1)."""
    a0, a1, a2, a3, b0, b1 = np.asarray(s, dtype=float)
    dt = frame.delta_tilde
    r2 = math.sqrt(2.0)
    u = -r2 * a1 / dt
    w = r2 * a3 / dt**3
    d_a = 0.5 * (u + w)          # x1 - y1
    d_b = 0.5 * (u - w)          # x2 - y2
    s_b = a2 / dt**2             # x2 + y2
    x1 = 0.5 * (a0 + d_a)
    y1 = 0.5 * (a0 - d_a)
    x2 = 0.5 * (s_b + d_b)
    y2 = 0.5 * (s_b - d_b)
    z0 = 0.5 * ((b0 - 1.0) - b1 / (frame.eps * r2))
    z1 = 0.5 * ((b0 - 1.0) + b1 / (frame.eps * r2))
    return np.array([x1, x2, y1, y2, z0, z1])


def from_fast_coords(c: np.ndarray, frame: FastFrame) -> np.ndarray:
    x1, x2, y1, y2, z0, z1 = np.asarray(c, dtype=float)
    dt = frame.delta_tilde
    r2 = math.sqrt(2.0)
    return np.array([
        x1 + y1,
        -dt / r2 * (x1 - y1 + x2 - y2),
        dt**2 * (x2 + y2),
        dt**3 / r2 * (x1 - y1 - x2 + y2),
        1.0 + z0 + z1,
        frame.eps * r2 * (z1 - z0),
    ])


@dataclass(frozen=True)
class MonodromyReport:
    max_ratio: float
    sigma: float
    closed_form_error: float
    n_samples: int

    @property
    def bound_satisfied(self) -> bool:
        return self.max_ratio <= 1.0 + 1e-8


def monodromy_check(b0_path, p: Params, x_lo: float, x_hi: float,
                    n_samples: int = 200, rtol: float = 1e-12) -> MonodromyReport:
    """Check the exponential bound on the slow rotation block's transition map.

    Integrates M' = L0(B(x)) M with L0 = [[lr, li], [-li, lr]] backward from
    x_hi; the bound requires |S(x, x_hi)| <= exp(sigma (x - x_hi)) for
    x < x_hi with sigma = sqrt(alpha_min * delta)/2^(1/4) and
    alpha_min * delta = min a_star along the path.  The transition map also
    has the exact scaled-rotation form built from the running integrals of
    lam_r and lam_i, which is compared against the integrated map.
    """
    xs = np.linspace(x_hi, x_lo, n_samples)
    astars = np.array([
        math.sqrt(1.0 - p.g1 * float(b0_path(x)) ** 2) for x in xs
    ])
    if np.any(astars <= 0.0):
        raise FrameDomainError("path leaves the slow-frame domain")
    sigma = math.sqrt(astars.min()) / 2.0**0.25

    def rhs(x, y):
        lr, li = lambda_pair(float(b0_path(x)), p)
        m = y[:4].reshape(2, 2)
        dm = np.array([[lr, li], [-li, lr]]) @ m
        return np.concatenate([dm.ravel(), [lr, li]])

    y0 = np.concatenate([np.eye(2).ravel(), [0.0, 0.0]])
    sol = solve_ivp(rhs, (x_hi, x_lo), y0, method="DOP853",
                    dense_output=True, rtol=rtol, atol=1e-14)
    if not sol.success:
        raise RuntimeError(f"monodromy integration failed: {sol.message}")

    max_ratio = 0.0
    cf_err = 0.0
    for x in xs:
        y = sol.sol(x)
        m = y[:4].reshape(2, 2)
        phi_r, phi_i = y[4], y[5]
        norm = np.linalg.norm(m, 2)
        max_ratio = max(max_ratio, norm * math.exp(-sigma * (x - x_hi)))
        rot = np.array([
            [math.cos(phi_i), math.sin(phi_i)],
            [-math.sin(phi_i), math.cos(phi_i)],
        ])
        cf_err = max(cf_err, np.abs(m - math.exp(phi_r) * rot).max())
    return MonodromyReport(
        max_ratio=float(max_ratio), sigma=float(sigma),
        closed_form_error=float(cf_err), n_samples=n_samples,
    )
