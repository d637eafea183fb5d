"""Finite symmetry groups acting on R^n and group-averaged ellipsoids.

A finite group of isometries determines a circumscribed ellipsoid of an
orbit polytope directly: the center is the orbit average and the inverse
shape matrix is n times the averaged outer product of the centered orbit.
Both are exactly invariant under the group by construction, which makes
this an independent route to the same ellipsoid a numerical solver finds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import AffineMap, Ellipsoid, identity_map
from .errors import SingularShape

_CLOSURE_TOL = 1e-10
_ORBIT_TOL = 1e-9
_INVARIANCE_TOL = 1e-9


def _flatten(maps) -> np.ndarray:
    return np.array([np.concatenate([g.linear.ravel(), g.offset])
                     for g in maps])


@dataclass(frozen=True)
class FiniteGroup:
    """Finite collection of affine isometries, closed under the group laws.

    ``form`` optionally supplies an SPD matrix whose square root conjugates
    the linear parts to orthogonal ones; without it the linear parts must be
    orthogonal as given.  Closure, inverses, and the identity are verified
    eagerly since everything downstream relies on them.
    """

    elements: tuple
    identity_index: int
    form: np.ndarray | None = None

    def __post_init__(self):
        if not self.elements:
            raise ValueError("a group needs at least one element")
        elements = tuple(self.elements)
        object.__setattr__(self, "elements", elements)
        n = elements[0].dim
        if any(g.dim != n for g in elements):
            raise ValueError("group elements must share one dimension")

        if self.form is not None:
            form = np.asarray(self.form, dtype=float)
            object.__setattr__(self, "form", form)
            vals, vecs = np.linalg.eigh(0.5 * (form + form.T))
            if np.any(vals <= 0.0):
                raise ValueError("invariant form must be positive definite")
            root = vecs @ np.diag(np.sqrt(vals)) @ vecs.T
            root_inv = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T
        else:
            root = root_inv = np.eye(n)
        eye = np.eye(n)
        for g in elements:
            conj = root @ g.linear @ root_inv
            if np.max(np.abs(conj.T @ conj - eye)) > _CLOSURE_TOL:
                raise ValueError("group element is not an isometry")

        if not (0 <= self.identity_index < len(elements)):
            raise ValueError("identity index out of range")
        ident = elements[self.identity_index]
        if (np.max(np.abs(ident.linear - eye)) > _CLOSURE_TOL
                or np.max(np.abs(ident.offset)) > _CLOSURE_TOL):
            raise ValueError("identity element missing")

        flat = _flatten(elements)
        linears = np.array([g.linear for g in elements])
        offsets = np.array([g.offset for g in elements])
        for g in elements:
            prod_lin = np.einsum("ik,mkj->mij", g.linear, linears)
            prod_off = g.offset + offsets @ g.linear.T
            prod = np.hstack([prod_lin.reshape(len(elements), -1), prod_off])
            dists = np.abs(prod[:, None, :] - flat[None, :, :]).max(axis=2)
            if np.any(dists.min(axis=1) > _CLOSURE_TOL):
                raise ValueError("group is not closed under composition")
            inv = g.inverse()
            inv_flat = np.concatenate([inv.linear.ravel(), inv.offset])
            if np.abs(flat - inv_flat).max(axis=1).min() > _CLOSURE_TOL:
                raise ValueError("group is not closed under inversion")

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)


def orbit(group: FiniteGroup, x) -> list:
    """Deduplicated orbit {g(x) : g in G}; its size divides the group order."""
    x = np.asarray(x, dtype=float)
    points: list[np.ndarray] = []
    for g in group:
        gx = g(x)
        if all(np.max(np.abs(gx - p)) > _ORBIT_TOL for p in points):
            points.append(gx)
    return points


def invariant_center(group: FiniteGroup, x) -> np.ndarray:
    """Group average of x; fixed by every element."""
    x = np.asarray(x, dtype=float)
    total = np.zeros(group.dim)
    for g in group:
        total += g(x)
    return total / len(group)


def invariant_shape(group: FiniteGroup, x, c) -> np.ndarray:
    """Shape matrix of the averaged circumscribed ellipsoid at center c.

    X^(-1) = n * avg_g (g(x) - c)(g(x) - c)^T.  Invariance under every group
    element holds exactly because left multiplication permutes the terms.
    Raises SingularShape when the orbit fails to span around c.
    """
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    n = group.dim
    avg = np.zeros((n, n))
    for g in group:
        dev = g(x) - c
        avg += np.outer(dev, dev)
    avg /= len(group)
    vals = np.linalg.eigvalsh(0.5 * (avg + avg.T))
    if vals[-1] <= 0.0 or vals[0] <= 1e-12 * vals[-1]:
        raise SingularShape("orbit does not span the space around the center")
    shape = np.linalg.inv(n * avg)
    return 0.5 * (shape + shape.T)


def check_invariant_ellipsoid(group: FiniteGroup, e: Ellipsoid,
                              tol: float = _INVARIANCE_TOL) -> bool:
    """True iff every element fixes the center and conjugates X to itself."""
    if group.dim != e.dim:
        raise ValueError("group and ellipsoid dimensions differ")
    x = e.shape
    scale_x = np.linalg.norm(x)
    scale_c = 1.0 + float(np.linalg.norm(e.center))
    for g in group:
        if np.linalg.norm(g(e.center) - e.center) > tol * scale_c:
            return False
        if np.linalg.norm(g.linear.T @ x @ g.linear - x) > tol * scale_x:
            return False
    return True


# ---------------------------------------------------------------------------
# Built-in groups.

def _linear_group(matrices) -> FiniteGroup:
    n = matrices[0].shape[0]
    zero = np.zeros(n)
    maps = tuple(AffineMap(m, zero) for m in matrices)
    ident = next(i for i, m in enumerate(matrices)
                 if np.array_equal(m, np.eye(n)))
    return FiniteGroup(maps, ident)


def permutation_group(n: int) -> FiniteGroup:
    """All n! coordinate permutations."""
    eye = np.eye(n)
    mats = [eye[list(p)].copy() for p in itertools.permutations(range(n))]
    return _linear_group(mats)


def signed_permutation_group(n: int) -> FiniteGroup:
    """Hyperoctahedral group: coordinate permutations with sign flips."""
    eye = np.eye(n)
    mats = []
    for p in itertools.permutations(range(n)):
        base = eye[list(p)]
        for signs in itertools.product((1.0, -1.0), repeat=n):
            mats.append(np.diag(signs) @ base)
    return _linear_group(mats)


def cyclic_group(m: int) -> FiniteGroup:
    """Planar rotations by multiples of 2*pi/m."""
    if m < 1:
        raise ValueError("order must be positive")
    mats = []
    for k in range(m):
        t = 2.0 * math.pi * k / m
        mats.append(np.array([[math.cos(t), -math.sin(t)],
                              [math.sin(t), math.cos(t)]]))
    mats[0] = np.eye(2)
    return _linear_group(mats)


def dihedral_group(m: int) -> FiniteGroup:
    """Planar rotations and reflections of a regular m-gon."""
    if m < 1:
        raise ValueError("order must be positive")
    flip = np.diag([1.0, -1.0])
    rots = list(cyclic_group(m).elements)
    mats = [g.linear for g in rots] + [g.linear @ flip for g in rots]
    return _linear_group(mats)


def slab_symmetry_group(n: int, flip_axis: bool = False) -> FiniteGroup:
    """Symmetries fixing the first axis: signed permutations transverse to it.

    ``flip_axis`` adds the sign flip of the first coordinate, valid only for
    bodies symmetric about the transverse hyperplane through the origin.
    """
    if n < 2:
        raise ValueError("need dimension at least 2")
    mats = []
    firsts = (1.0, -1.0) if flip_axis else (1.0,)
    for g in signed_permutation_group(n - 1):
        block = np.zeros((n, n))
        block[1:, 1:] = g.linear
        for eps in firsts:
            mat = block.copy()
            mat[0, 0] = eps
            mats.append(mat)
    return _linear_group(mats)


def named_group(name: str, n: int | None = None,
                order: int | None = None) -> FiniteGroup:
    """Build a built-in group from a string key, for serialized inputs."""
    key = name.replace("_", "-").lower()
    if key == "permutation":
        return permutation_group(_require(n, "dim"))
    if key == "signed-permutation":
        return signed_permutation_group(_require(n, "dim"))
    if key == "cyclic":
        return cyclic_group(_require(order, "order"))
    if key == "dihedral":
        return dihedral_group(_require(order, "order"))
    if key == "slab":
        return slab_symmetry_group(_require(n, "dim"))
    if key == "slab-symmetric":
        return slab_symmetry_group(_require(n, "dim"), flip_axis=True)
    raise ValueError(f"unknown group name {name!r}")


def _require(value, what):
    if value is None:
        raise ValueError(f"group requires {what}")
    return value


def group_to_dict(group: FiniteGroup) -> dict:
    return {"elements": [{"linear": g.linear.tolist(),
                          "offset": g.offset.tolist()} for g in group]}


def group_from_dict(payload: dict) -> FiniteGroup:
    elements = []
    ident = None
    for i, item in enumerate(payload["elements"]):
        g = AffineMap(np.asarray(item["linear"], dtype=float),
                      np.asarray(item["offset"], dtype=float))
        elements.append(g)
        if ident is None and np.max(np.abs(g.linear - np.eye(g.dim))) < 1e-12 \
                and np.max(np.abs(g.offset)) < 1e-12:
            ident = i
    if ident is None:
        raise ValueError("serialized group lacks an identity element")
    return FiniteGroup(tuple(elements), ident)
