"""Fritz John optimality certification.

Both extremal-ellipsoid problems share one optimality system: an ellipsoid
E(X, c) is extremal for a body K exactly when there are contact points
u_i on the boundary of both K and E and multipliers lambda_i >= 0 with

    sum_i lambda_i (u_i - c)(u_i - c)^T = X^(-1)
    sum_i lambda_i (u_i - c) = 0

(taking traces gives sum lambda_i = n).  These conditions are sufficient,
so a passing certificate establishes optimality, not just feasibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .core import Ellipsoid, Polytope, unit_ball
from .errors import NotNonnegative, NotOptimal

MULTIPLIER_PRUNE = 1e-10


@dataclass(frozen=True)
class ContactCertificate:
    """Contact points and multipliers witnessing extremality."""

    contacts: np.ndarray
    multipliers: np.ndarray
    kind: str  # "ce" or "ie"

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.contacts, dtype=float))
        lam = np.atleast_1d(np.asarray(self.multipliers, dtype=float))
        object.__setattr__(self, "contacts", u)
        object.__setattr__(self, "multipliers", lam)
        if self.kind not in ("ce", "ie"):
            raise ValueError(f"kind must be 'ce' or 'ie', got {self.kind!r}")
        k, n = u.shape
        if lam.shape[0] != k:
            raise ValueError("one multiplier per contact point required")
        if k < 1 or k > n * (n + 3) // 2:
            raise ValueError(f"contact count {k} outside [1, {n * (n + 3) // 2}]")
        if np.any(lam < 0.0):
            raise ValueError("multipliers must be nonnegative")


@dataclass(frozen=True)
class CertResult:
    """Outcome of a certification run; passed iff every residual is in tolerance."""

    passed: bool
    residuals: dict
    certificate: ContactCertificate | None = None
    worst_point: np.ndarray | None = None

    def to_dict(self) -> dict:
        out = {
            "passed": bool(self.passed),
            "residuals": {k: float(v) for k, v in sorted(self.residuals.items())},
            "contacts": [],
            "multipliers": [],
        }
        if self.certificate is not None:
            out["contacts"] = [[float(v) for v in row]
                               for row in self.certificate.contacts]
            out["multipliers"] = [float(v) for v in self.certificate.multipliers]
        return out


def _symmetric_root(x: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(x)
    return (v * np.sqrt(w)) @ v.T


def recover_multipliers(e: Ellipsoid, contacts: np.ndarray) -> np.ndarray:
    """Nonnegative least squares fit of the Fritz John system.

    Solved in the normalized frame u_bar = X^(1/2)(u - c), where the target
    matrix is the identity; the multipliers are frame independent.  Rows:
    upper triangle of u_bar u_bar^T (off-diagonal weighted by sqrt(2) so the
    residual matches the Frobenius norm), the centroid rows, and the trace
    row sum(lambda) = n.
    """
    n = e.dim
    u = np.atleast_2d(contacts)
    k = u.shape[0]
    ubar = (u - e.center) @ _symmetric_root(e.shape).T

    iu, ju = np.triu_indices(n)
    weights = np.where(iu == ju, 1.0, math.sqrt(2.0))
    rows_mat = ubar[:, iu] * ubar[:, ju] * weights  # (k, n(n+1)/2)
    target_mat = np.where(iu == ju, 1.0, 0.0) * weights

    a = np.zeros((rows_mat.shape[1] + n + 1, k))
    b = np.zeros(rows_mat.shape[1] + n + 1)
    a[:rows_mat.shape[1], :] = rows_mat.T
    b[:rows_mat.shape[1]] = target_mat
    a[rows_mat.shape[1]:rows_mat.shape[1] + n, :] = ubar.T
    a[-1, :] = 1.0
    b[-1] = float(n)
    lam, _ = nnls(a, b)
    return lam


def fritz_john_residuals(e: Ellipsoid, contacts: np.ndarray,
                         multipliers: np.ndarray) -> dict:
    """Residuals of the two Fritz John equations plus the trace identity."""
    diff = np.atleast_2d(contacts) - e.center
    lam = np.asarray(multipliers, dtype=float)
    x_inv = np.linalg.inv(e.shape)
    outer = (diff.T * lam) @ diff
    return {
        "matrix_eq": float(np.linalg.norm(outer - x_inv) / np.linalg.norm(x_inv)),
        "centroid_eq": float(np.linalg.norm(lam @ diff)),
        "multiplier_sum": float(abs(lam.sum() - e.dim)),
    }


def _body_points(body) -> np.ndarray:
    if isinstance(body, Polytope):
        if not body.is_vform:
            raise NotOptimal("circumscription certificates need points, not halfspaces")
        return body.vertices
    return np.atleast_2d(np.asarray(body, dtype=float))


def certify_ce(body, e: Ellipsoid, tol: float = 1e-8) -> CertResult:
    """Certify E as the minimum-volume ellipsoid circumscribing the body.

    The body is a V-polytope or a sampled boundary (stack of points).
    Contact candidates are the points whose quadratic form reaches
    1 - sqrt(tol); form error is second order in boundary displacement,
    hence the square root.
    """
    pts = _body_points(body)
    forms = e.quadratic_form(pts)
    feasibility = float(max(forms.max() - 1.0, 0.0))
    mask = forms >= 1.0 - math.sqrt(tol)
    residuals = {
        "matrix_eq": math.inf,
        "centroid_eq": math.inf,
        "multiplier_sum": math.inf,
        "contact_membership": math.inf,
        "feasibility": feasibility,
    }
    if not mask.any():
        return CertResult(False, residuals, None, pts[int(np.argmax(forms))])

    contacts = pts[mask]
    lam = recover_multipliers(e, contacts)
    keep = lam > MULTIPLIER_PRUNE
    if not keep.any():
        return CertResult(False, residuals, None, contacts[0])
    contacts, lam = contacts[keep], lam[keep]

    residuals.update(fritz_john_residuals(e, contacts, lam))
    residuals["contact_membership"] = float(
        np.max(np.abs(e.quadratic_form(contacts) - 1.0)))
    cert = ContactCertificate(contacts, lam, "ce")
    passed = _within_tolerances(residuals, e.dim, tol)
    worst = pts[int(np.argmax(forms))] if not passed else None
    return CertResult(passed, residuals, cert, worst)


def certify_ie(body: Polytope, e: Ellipsoid, tol: float = 1e-8) -> CertResult:
    """Certify E as the maximum-volume ellipsoid inscribed in an H-polytope.

    Feasibility is the per-facet support inequality
    <c, a_i> + <X^(-1) a_i, a_i>^(1/2) <= b_i; contacts are the tangency
    points of the active facets.
    """
    if not isinstance(body, Polytope) or body.is_vform:
        raise NotOptimal("inscription certificates need an H-form polytope")
    scale = np.linalg.norm(body.normals, axis=1)
    a_hat = body.normals / scale[:, None]
    b_hat = body.offsets / scale

    x_inv = np.linalg.inv(e.shape)
    ya = a_hat @ x_inv  # rows X^(-1) a_i
    s = np.sqrt(np.einsum("ij,ij->i", ya, a_hat))
    support = a_hat @ e.center + s
    gaps = b_hat - support
    feasibility = float(max(-gaps.min(), 0.0))

    active = gaps <= math.sqrt(tol)
    residuals = {
        "matrix_eq": math.inf,
        "centroid_eq": math.inf,
        "multiplier_sum": math.inf,
        "contact_membership": math.inf,
        "feasibility": feasibility,
    }
    if not active.any():
        return CertResult(False, residuals, None, None)

    contacts = e.center + ya[active] / s[active, None]
    lam = recover_multipliers(e, contacts)
    keep = lam > MULTIPLIER_PRUNE
    if not keep.any():
        return CertResult(False, residuals, None, None)
    contacts, lam = contacts[keep], lam[keep]

    residuals.update(fritz_john_residuals(e, contacts, lam))
    residuals["contact_membership"] = float(
        np.max(np.abs(e.quadratic_form(contacts) - 1.0)))
    cert = ContactCertificate(contacts, lam, "ie")
    passed = _within_tolerances(residuals, e.dim, tol)
    return CertResult(passed, residuals, cert, None)


def _within_tolerances(residuals: dict, n: int, tol: float) -> bool:
    return (residuals["feasibility"] <= tol
            and residuals["contact_membership"] <= math.sqrt(tol)
            and residuals["matrix_eq"] <= tol
            and residuals["centroid_eq"] <= tol * n
            and residuals["multiplier_sum"] <= tol * n)


def _scaled(e: Ellipsoid, factor: float) -> Ellipsoid:
    """Scale the ellipsoid about its center by ``factor`` (semi-axes times factor)."""
    return Ellipsoid(e.center, e.shape / factor ** 2)


def john_factors(body, e: Ellipsoid, kind: str, symmetric: bool,
                 tol: float = 1e-8) -> CertResult:
    """Containment checks for the John shrink/blow factors.

    CE: the ellipsoid shrunk by n (sqrt(n) for centrally symmetric bodies)
    must fit inside the body.  IE: the ellipsoid blown up by the same
    factor must contain the body.
    """
    n = e.dim
    factor = math.sqrt(n) if symmetric else float(n)
    if kind == "ce":
        shrunk = _scaled(e, 1.0 / factor)
        if isinstance(body, Polytope) and not body.is_vform:
            normals, offsets = body.normals, body.offsets
        else:
            from scipy.spatial import ConvexHull

            pts = _body_points(body)
            hull = ConvexHull(pts)
            normals = hull.equations[:, :-1]
            offsets = -hull.equations[:, -1]
        x_inv = np.linalg.inv(shrunk.shape)
        s = np.sqrt(np.einsum("ij,jk,ik->i", normals, x_inv, normals))
        viol = normals @ shrunk.center + s - offsets
        worst = int(np.argmax(viol))
        residual = float(max(viol[worst], 0.0) / np.linalg.norm(normals[worst]))
        point = shrunk.center + (x_inv @ normals[worst]) / s[worst]
    elif kind == "ie":
        blown = _scaled(e, factor)
        if isinstance(body, Polytope) and not body.is_vform:
            from scipy.spatial import HalfspaceIntersection

            from .core import chebyshev_center

            interior, _ = chebyshev_center(body)
            halfspaces = np.hstack([body.normals, -body.offsets[:, None]])
            pts = HalfspaceIntersection(halfspaces, interior).intersections
        else:
            pts = _body_points(body)
        forms = blown.quadratic_form(pts)
        worst = int(np.argmax(forms))
        residual = float(max(forms[worst] - 1.0, 0.0))
        point = pts[worst]
    else:
        raise ValueError(f"kind must be 'ce' or 'ie', got {kind!r}")
    passed = residual <= tol
    residuals = {"feasibility": residual}
    return CertResult(passed, residuals, None, None if passed else point)


def breadth_diameter(body, tol: float = 1e-6, directions: int = 500) -> float:
    """Minimal breadth of the contact polytope of a body in John position.

    The body must already be normalized so that its circumscribed ellipsoid
    is the unit ball (certified here).  Returns min over random unit d of
    s(d) + s(-d) evaluated on the contact points, which is at least
    2/sqrt(n); violation raises NotOptimal.
    """
    pts = _body_points(body)
    n = pts.shape[1]
    result = certify_ce(pts, unit_ball(n))
    if not result.passed:
        raise NotOptimal("body is not in circumscribed-unit-ball position")
    # the full touching set, not the sparse multiplier support: the breadth
    # statement is about every contact point
    ball = unit_ball(n)
    u = pts[ball.quadratic_form(pts) >= 1.0 - math.sqrt(1e-8)]
    rng = np.random.default_rng(0)
    d = rng.standard_normal((directions, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    sums = np.max(d @ u.T, axis=1) + np.max(-d @ u.T, axis=1)
    value = float(sums.min())
    bound = 2.0 / math.sqrt(n)
    if value < bound - tol:
        raise NotOptimal(f"breadth {value:.12g} below bound {bound:.12g}")
    return value


def lukacs_certificate(q, interval) -> tuple[float, float, float]:
    """Write a quadratic nonnegative on [a, b] as (c u + d)^2 + g (u-a)(b-u).

    ``q`` is (q2, q1, q0) for q(u) = q2 u^2 + q1 u + q0.  Returns (c, d, g)
    with g >= 0; raises NotNonnegative when q dips below zero on the
    interval.
    """
    q2, q1, q0 = (float(v) for v in q)
    a, b = (float(v) for v in interval)
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")

    def q_at(u):
        return (q2 * u + q1) * u + q0

    scale = max(abs(q2), abs(q1), abs(q0), 1.0)
    lowest = min(q_at(a), q_at(b))
    if q2 > 0.0:
        vertex = -q1 / (2.0 * q2)
        if a < vertex < b:
            lowest = min(lowest, q_at(vertex))
    if lowest < -1e-12 * scale:
        raise NotNonnegative(f"q reaches {lowest:.3e} on [{a}, {b}]")

    qa = math.sqrt(max(q_at(a), 0.0))
    qb = math.sqrt(max(q_at(b), 0.0))
    c = (qa + qb) / (b - a)
    d = -(qa * b + qb * a) / (b - a)
    g = c * c - q2
    if g < -1e-10 * scale:
        raise NotNonnegative(f"negative interval weight {g:.3e}")
    g = max(g, 0.0)
    # coefficient identity check: q(u) == (c u + d)^2 + g (u - a)(b - u)
    r2 = c * c - g - q2
    r1 = 2.0 * c * d + g * (a + b) - q1
    r0 = d * d - g * a * b - q0
    if max(abs(r2), abs(r1), abs(r0)) > 1e-10 * scale:
        raise NotNonnegative("certificate coefficients failed to match")
    return c, d, g
