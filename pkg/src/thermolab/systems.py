"""Invertible maps of the d-torus: linear automorphisms, slowdown and
Mane-style local perturbations, affine and external maps, plus the metric,
potentials, and nonnegative weight functions used by the decomposition and
pressure machinery.

All point data are numpy arrays with coordinates in [0, 1); arithmetic wraps
mod 1.  The metric is the sup of per-coordinate circle distances, so metric
balls are cubes and a closed ball of radius r has Haar measure (2r)^d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


def wrap(x):
    """Reduce coordinates mod 1 into [0, 1)."""
    return np.mod(x, 1.0)


def wrap_diff(u):
    """Shortest lift of a displacement: each coordinate in [-0.5, 0.5)."""
    return np.mod(np.asarray(u, dtype=float) + 0.5, 1.0) - 0.5


def torus_distance(a, b):
    """Sup-metric distance on the torus: max over coordinates of the circle
    distance min(|a_i-b_i|, 1-|a_i-b_i|).  Always <= 0.5."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = np.abs(a - b) % 1.0
    return float(np.max(np.minimum(d, 1.0 - d)))


def torus_distance_many(A, B):
    """Rowwise sup-metric distance between two (N, d) arrays."""
    d = np.abs(A - B) % 1.0
    return np.minimum(d, 1.0 - d).max(axis=-1)


def _int_matrix(M):
    M = np.asarray(M)
    Mi = np.rint(M).astype(np.int64)
    if not np.array_equal(Mi, M):
        raise ValueError("matrix entries must be integers")
    return Mi


def _integer_inverse(M):
    """Exact inverse of an integer matrix with |det| = 1."""
    M = _int_matrix(M)
    det = int(round(np.linalg.det(M.astype(float))))
    if abs(det) != 1:
        raise ValueError(f"matrix must have determinant +-1, got {det}")
    inv = np.rint(np.linalg.inv(M.astype(float)) * 1.0).astype(np.int64)
    if not np.array_equal(M @ inv, np.eye(len(M), dtype=np.int64)):
        raise ValueError("failed to invert integer matrix exactly")
    return inv


@dataclass
class Profile:
    """Radial slowdown profile.

    The local chart map rescales the displacement u from the fixed point by
    psi(t)/t where t = |u|_sup / rho.  psi is piecewise polynomial:

        psi(t) = t + (c - 1) * t * (1 - t/t0)^2   for t < t0
        psi(t) = t                                 for t >= t0

    so psi'(0) = c and psi(t) = t near the boundary.  psi is strictly
    increasing (hence the chart map is a homeomorphism) iff 0 < c < 4.
    The derivative scale c is theta / theta_base where theta_base is the
    reference eigenvalue of the linear part ("max" for a slow-down of the
    expansion, "center" for a Mane-style push of the weak direction).
    """

    theta: float
    reference: str = "max"  # "max" or "center"
    t0: float = 0.8

    def scale_for(self, eigenvalues) -> float:
        mods = sorted(abs(e) for e in eigenvalues)
        if self.reference == "max":
            base = mods[-1]
        elif self.reference == "center":
            base = mods[-2]
        else:
            raise ValueError(f"unknown profile reference {self.reference!r}")
        c = self.theta / base
        if not (0.0 < c < 4.0):
            raise ValueError(
                f"profile scale {c:.4f} outside (0, 4): local map not injective"
            )
        return c

    def psi(self, t, c):
        t = np.asarray(t, dtype=float)
        out = np.where(t >= self.t0, t, t + (c - 1.0) * t * (1.0 - t / self.t0) ** 2)
        return out

    def psi_inv(self, u, c, tol=1e-15):
        """Invert psi by bisection on [0, 1]; psi is strictly increasing."""
        if u >= self.t0:
            return u
        lo, hi = 0.0, self.t0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if float(self.psi(mid, c)) < u:
                lo = mid
            else:
                hi = mid
            if hi - lo < tol:
                break
        return 0.5 * (lo + hi)


@dataclass
class DynSystem:
    """An invertible self-map of the d-torus.

    kind is one of 'linear', 'slowdown', 'perturbed-linear', 'affine',
    'product', 'external'.  Local perturbation kinds agree with their linear
    base outside B(p, rho) on the same floating evaluation path.
    """

    kind: str
    dimension: int
    matrix: Optional[np.ndarray] = None
    matrix_inv: Optional[np.ndarray] = None
    fixed_point: Optional[np.ndarray] = None
    rho: float = 0.0
    profile: Optional[Profile] = None
    profile_scale: float = 1.0
    shift: Optional[np.ndarray] = None
    forward: Optional[Callable] = None
    backward: Optional[Callable] = None
    components: Optional[tuple] = None
    seed: int = 0
    label: str = ""

    # -- single forward/backward sweep over an (N, d) batch ---------------

    def _linear_step(self, X):
        return np.mod(X @ self.matrix.T.astype(float), 1.0)

    def _linear_step_back(self, X):
        return np.mod(X @ self.matrix_inv.T.astype(float), 1.0)

    def _chart_in(self, X):
        """Apply the local profile homeomorphism h (identity outside the ball)."""
        U = wrap_diff(X - self.fixed_point)
        r = np.abs(U).max(axis=-1)
        t = r / self.rho
        inside = t < self.profile.t0
        if not np.any(inside):
            return X, inside
        Y = X.copy()
        ti = t[inside]
        scale = np.ones_like(ti)
        pos = ti > 0
        scale[pos] = self.profile.psi(ti[pos], self.profile_scale) / ti[pos]
        Y[inside] = np.mod(self.fixed_point + U[inside] * scale[:, None], 1.0)
        return Y, inside

    def _chart_out(self, X):
        """Inverse of the profile homeomorphism."""
        U = wrap_diff(X - self.fixed_point)
        r = np.abs(U).max(axis=-1)
        t = r / self.rho
        inside = t < self.profile.t0
        if not np.any(inside):
            return X
        Y = X.copy()
        idx = np.where(inside)[0]
        for i in idx:
            ti = t[i]
            if ti <= 0:
                continue
            s = self.profile.psi_inv(ti, self.profile_scale) / ti
            Y[i] = np.mod(self.fixed_point + U[i] * s, 1.0)
        return Y

    def step(self, X):
        """One forward iterate of an (N, d) batch."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind in ("linear",):
            return self._linear_step(X)
        if self.kind in ("slowdown", "perturbed-linear"):
            if self.profile_scale == 1.0:
                return self._linear_step(X)
            Y = self._linear_step(X)
            Xh, inside = self._chart_in(X)
            if np.any(inside):
                Y[inside] = self._linear_step(Xh[inside])
            return Y
        if self.kind == "affine":
            return np.mod(X @ self.matrix.T.astype(float) + self.shift, 1.0)
        if self.kind == "product":
            s1, s2 = self.components
            d1 = s1.dimension
            return np.hstack([s1.step(X[:, :d1]), s2.step(X[:, d1:])])
        if self.kind == "external":
            return np.atleast_2d(self.forward(X))
        raise ValueError(f"unknown system kind {self.kind!r}")

    def step_back(self, X):
        """One backward iterate of an (N, d) batch."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "linear":
            return self._linear_step_back(X)
        if self.kind in ("slowdown", "perturbed-linear"):
            if self.profile_scale == 1.0:
                return self._linear_step_back(X)
            Y = self._linear_step_back(X)
            U = wrap_diff(Y - self.fixed_point)
            t = np.abs(U).max(axis=-1) / self.rho
            inside = t < self.profile.t0
            if np.any(inside):
                Y[inside] = self._chart_out(Y[inside])
            return Y
        if self.kind == "affine":
            return np.mod((X - self.shift) @ self.matrix_inv.T.astype(float), 1.0)
        if self.kind == "product":
            s1, s2 = self.components
            d1 = s1.dimension
            return np.hstack([s1.step_back(X[:, :d1]), s2.step_back(X[:, d1:])])
        if self.kind == "external":
            if self.backward is None:
                raise ValueError("external system has no inverse configured")
            return np.atleast_2d(self.backward(X))
        raise ValueError(f"unknown system kind {self.kind!r}")

    def apply(self, x, k=1):
        """k-th iterate of a single point (k may be negative)."""
        X = np.atleast_2d(np.asarray(x, dtype=float))
        stepper = self.step if k >= 0 else self.step_back
        for _ in range(abs(int(k))):
            X = stepper(X)
        return X[0]

    def orbit_block(self, X, n):
        """Forward orbit positions f^0..f^{n-1} of an (N, d) batch -> (N, n, d)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty((X.shape[0], n, X.shape[1]))
        cur = X
        for k in range(n):
            out[:, k, :] = cur
            if k + 1 < n:
                cur = self.step(cur)
        return out

    def two_sided_block(self, X, K):
        """Orbit positions f^{-K}..f^{K} -> (N, 2K+1, d)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty((X.shape[0], 2 * K + 1, X.shape[1]))
        out[:, K, :] = X
        cur = X
        for k in range(1, K + 1):
            cur = self.step(cur)
            out[:, K + k, :] = cur
        cur = X
        for k in range(1, K + 1):
            cur = self.step_back(cur)
            out[:, K - k, :] = cur
        return out

    def jacobian(self, x, h=1e-6):
        """Derivative matrix; exact for linear kinds, forward differences else."""
        if self.kind in ("linear", "affine"):
            return self.matrix.astype(float)
        if self.kind in ("slowdown", "perturbed-linear") and self.profile_scale == 1.0:
            return self.matrix.astype(float)
        x = np.asarray(x, dtype=float)
        fx = self.apply(x)
        J = np.empty((self.dimension, self.dimension))
        for j in range(self.dimension):
            e = np.zeros(self.dimension)
            e[j] = h
            J[:, j] = wrap_diff(self.apply(wrap(x + e)) - fx) / h
        return J


# -- constructors ---------------------------------------------------------


def linear_system(matrix, label="", seed=0):
    M = _int_matrix(matrix)
    eigs = np.linalg.eigvals(M.astype(float))
    if np.any(np.isclose(np.abs(eigs), 1.0, atol=1e-12)):
        raise ValueError("linear system has an eigenvalue of modulus 1")
    return DynSystem(
        kind="linear",
        dimension=len(M),
        matrix=M,
        matrix_inv=_integer_inverse(M),
        seed=seed,
        label=label or "linear",
    )


def cat_map(seed=0):
    """Arnold cat map [[2,1],[1,1]] on the 2-torus."""
    return linear_system([[2, 1], [1, 1]], label="cat", seed=seed)


def identity_system(dimension):
    fwd = lambda X: np.mod(X, 1.0)
    return DynSystem(kind="external", dimension=dimension, forward=fwd,
                     backward=fwd, label="identity")


def affine_system(matrix, shift, label="affine", seed=0):
    base = linear_system(matrix)
    return DynSystem(
        kind="affine",
        dimension=base.dimension,
        matrix=base.matrix,
        matrix_inv=base.matrix_inv,
        shift=np.asarray(shift, dtype=float),
        seed=seed,
        label=label,
    )


def make_slowdown_system(base, p, rho, theta, reference="max", t0=0.8,
                         kind="slowdown", seed=0):
    """Perturb a linear system inside B(p, rho) by a radial profile.

    The returned map equals the base outside the ball exactly (identical
    floating path); at p the differential is c*A where c = theta/theta_base,
    moving the reference eigenvalue to theta.  Raises if the profile would
    not be injective or p is not a fixed point of the base.
    """
    if base.kind != "linear":
        raise ValueError("slowdown base must be a linear system")
    p = np.asarray(p, dtype=float)
    if torus_distance(base.apply(p), p) > 1e-12:
        raise ValueError("p must be a fixed point of the base system")
    if not (0.0 < rho < 0.25):
        raise ValueError("rho must lie in (0, 0.25), below the chart scale")
    prof = Profile(theta=theta, reference=reference, t0=t0)
    eigs = np.linalg.eigvals(base.matrix.astype(float))
    c = prof.scale_for(eigs)
    return DynSystem(
        kind=kind,
        dimension=base.dimension,
        matrix=base.matrix,
        matrix_inv=base.matrix_inv,
        fixed_point=p,
        rho=float(rho),
        profile=prof,
        profile_scale=c,
        seed=seed,
        label=f"{kind}(theta={theta})",
    )


def mane_cat_model(rho=0.05, theta=1.02, seed=0):
    """Mane-style local perturbation of the cat map at the origin: the weak
    (second) eigendirection is pushed to expansion theta > 1 inside the ball."""
    return make_slowdown_system(cat_map(), [0.0, 0.0], rho, theta,
                                reference="center", kind="perturbed-linear",
                                seed=seed)


def katok_slowdown_model(rho=0.1, theta=1.5, seed=0):
    """Katok-style slowdown of the cat map: expansion reduced toward 1 at p."""
    return make_slowdown_system(cat_map(), [0.0, 0.0], rho, theta,
                                reference="max", kind="slowdown", seed=seed)


# -- unstable direction and geometric potential ---------------------------


def unstable_directions(system, X, window=30):
    """Numerically computed unstable direction at each point of an (N, d)
    batch, via pushing a fixed vector forward along the orbit ending at X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N, d = X.shape
    if system.kind == "linear":
        eigs, vecs = np.linalg.eig(system.matrix.astype(float))
        i = int(np.argmax(np.abs(eigs)))
        v = np.real(vecs[:, i])
        v = v / np.linalg.norm(v)
        return np.tile(v, (N, 1))
    # backward orbit, then push a generic vector forward through Jacobians
    back = [X]
    cur = X
    for _ in range(window):
        cur = system.step_back(cur)
        back.append(cur)
    V = np.tile(np.array([1.0] + [0.5] * (d - 1)) / math.sqrt(1 + 0.25 * (d - 1)),
                (N, 1))
    for k in range(window, 0, -1):
        pts = back[k]
        for i in range(N):
            V[i] = system.jacobian(pts[i]) @ V[i]
        V /= np.linalg.norm(V, axis=1, keepdims=True)
    return V


def geometric_potential(system, X, window=30):
    """-log of the expansion factor along the numerically computed unstable
    direction.  For a linear hyperbolic map this is -log(spectral radius)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    V = unstable_directions(system, X, window=window)
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        J = system.jacobian(X[i])
        out[i] = -math.log(np.linalg.norm(J @ V[i]) / np.linalg.norm(V[i]))
    return out


# -- potentials and lambda weights ----------------------------------------


@dataclass
class Potential:
    """Bounded real-valued observable on the torus; fn maps (N, d) -> (N,)."""

    fn: Callable
    label: str = ""
    holder_exponent: Optional[float] = None

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self.fn(X), dtype=float)


@dataclass
class LambdaFunction:
    """Nonnegative bounded weight; zero_ball, if set, is (center, radius) and
    the function is the indicator of the complement of that closed ball."""

    fn: Callable
    sup_bound: float
    zero_ball: Optional[tuple] = None
    label: str = ""

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self.fn(X), dtype=float)


def zero_potential():
    return Potential(fn=lambda X: np.zeros(X.shape[0]), label="zero")


def constant_potential(c):
    return Potential(fn=lambda X: np.full(X.shape[0], float(c)), label=f"const({c})")


def cosine_potential(index=0):
    return Potential(fn=lambda X: np.cos(2.0 * np.pi * X[:, index]),
                     label=f"cos(2*pi*x{index})", holder_exponent=1.0)


def constant_lambda(value=1.0):
    v = float(value)
    return LambdaFunction(fn=lambda X: np.full(X.shape[0], v),
                          sup_bound=max(v, 1e-300), label=f"const({value})")


def ball_complement_lambda(center, radius):
    """Indicator of the complement of the closed sup-metric ball B(center, radius):
    lambda(x) = 0 iff d(x, center) <= radius."""
    c = np.asarray(center, dtype=float)
    r = float(radius)

    def fn(X):
        d = np.abs(X - c) % 1.0
        dist = np.minimum(d, 1.0 - d).max(axis=-1)
        return (dist > r).astype(float)

    return LambdaFunction(fn=fn, sup_bound=1.0, zero_ball=(c, r),
                          label=f"chi_outside_ball(r={radius})")


# -- Mane matrix search (test oracle utility) ------------------------------


def mane_matrix_search(entry_bound=2, limit=1):
    """Brute-force search for integer 3x3 matrices with |det| = 1 whose
    characteristic polynomial is irreducible over Q with three distinct
    positive real roots, exactly one of modulus > 1.

    Irreducibility of a monic integer cubic with constant term +-1 follows
    from p(1) != 0 != p(-1), which also certifies the roots irrational.
    Returns the first `limit` matrices in deterministic scan order.
    """
    found = []
    rng = range(-entry_bound, entry_bound + 1)
    for a in rng:
        for b in rng:
            for c in rng:
                for dd in rng:
                    for e in rng:
                        for f in rng:
                            for g in rng:
                                for h in rng:
                                    for i in rng:
                                        M = np.array([[a, b, c], [dd, e, f], [g, h, i]],
                                                     dtype=np.int64)
                                        det = int(round(np.linalg.det(M.astype(float))))
                                        if abs(det) != 1:
                                            continue
                                        tr = a + e + i
                                        # p(x) = x^3 - tr x^2 + m2 x - det
                                        m2 = (e * i - f * h) + (a * i - c * g) + (a * e - b * dd)
                                        p1 = 1 - tr + m2 - det
                                        pm1 = -1 - tr - m2 - det
                                        if p1 == 0 or pm1 == 0:
                                            continue
                                        eigs = np.linalg.eigvals(M.astype(float))
                                        if np.any(np.abs(eigs.imag) > 1e-9):
                                            continue
                                        re = np.sort(eigs.real)
                                        if re[0] <= 0:
                                            continue
                                        if np.min(np.diff(re)) < 1e-9:
                                            continue
                                        if not (re[2] > 1.0 and re[1] < 1.0):
                                            continue
                                        found.append(M)
                                        if len(found) >= limit:
                                            return found
    return found


# -- serialization ---------------------------------------------------------


def system_to_dict(system):
    doc = {"kind": system.kind, "dimension": system.dimension, "seed": system.seed}
    if system.matrix is not None:
        doc["matrix"] = system.matrix.tolist()
    if system.fixed_point is not None:
        doc["fixedPoint"] = system.fixed_point.tolist()
    if system.rho:
        doc["rho"] = system.rho
    if system.profile is not None:
        doc["profile"] = {"theta": system.profile.theta,
                          "reference": system.profile.reference,
                          "t0": system.profile.t0}
    if system.shift is not None:
        doc["shift"] = system.shift.tolist()
    return doc


def system_from_dict(doc):
    kind = doc["kind"]
    seed = int(doc.get("seed", 0))
    if kind == "linear":
        return linear_system(doc["matrix"], seed=seed)
    if kind in ("slowdown", "perturbed-linear"):
        prof = doc.get("profile", {})
        return make_slowdown_system(
            linear_system(doc["matrix"]),
            doc["fixedPoint"],
            doc["rho"],
            prof.get("theta", 1.0),
            reference=prof.get("reference", "max"),
            t0=prof.get("t0", 0.8),
            kind=kind,
            seed=seed,
        )
    if kind == "affine":
        return affine_system(doc["matrix"], doc["shift"], seed=seed)
    raise ValueError(f"cannot build system of kind {kind!r} from JSON")
