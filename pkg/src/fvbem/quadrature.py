"""Quadrature rules for segments and triangles.

All rules are returned as (points, weights) in a reference element and
mapped by the callers; the triangle rules use barycentric coordinates so
they can be broadcast over arrays of elements.
"""
import numpy as np


def gauss_legendre(n):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def segment_points(a, b, n):
    """Gauss points and weights on segments [a, b].

    a, b have shape (..., 2); returns points (..., n, 2) and weights
    (..., n) that already include the segment lengths.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t, w = gauss_legendre(n)
    pts = a[..., None, :] + t[:, None] * (b - a)[..., None, :]
    length = np.linalg.norm(b - a, axis=-1)
    return pts, length[..., None] * w


# Symmetric triangle rules in barycentric coordinates: rows (l1, l2, l3, w)
# with weights summing to 1 (multiply by the triangle area).

# degree 2, 3 points (edge midpoints)
_TRI_D2 = np.array([
    [0.5, 0.5, 0.0, 1.0 / 3.0],
    [0.0, 0.5, 0.5, 1.0 / 3.0],
    [0.5, 0.0, 0.5, 1.0 / 3.0],
])

# degree 4, 6 points (Dunavant)
_a1, _b1, _w1 = 0.816847572980459, 0.091576213509771, 0.109951743655322
_a2, _b2, _w2 = 0.108103018168070, 0.445948490915965, 0.223381589678011
_TRI_D4 = np.array([
    [_a1, _b1, _b1, _w1], [_b1, _a1, _b1, _w1], [_b1, _b1, _a1, _w1],
    [_a2, _b2, _b2, _w2], [_b2, _a2, _b2, _w2], [_b2, _b2, _a2, _w2],
])

# degree 6, 12 points (Dunavant)
_c1, _d1, _v1 = 0.873821971016996, 0.063089014491502, 0.050844906370207
_c2, _d2, _v2 = 0.501426509658179, 0.249286745170910, 0.116786275726379
_e1, _e2, _e3 = 0.636502499121399, 0.310352451033785, 0.053145049844816
_v3 = 0.082851075618374
_TRI_D6 = np.array([
    [_c1, _d1, _d1, _v1], [_d1, _c1, _d1, _v1], [_d1, _d1, _c1, _v1],
    [_c2, _d2, _d2, _v2], [_d2, _c2, _d2, _v2], [_d2, _d2, _c2, _v2],
    [_e1, _e2, _e3, _v3], [_e1, _e3, _e2, _v3],
    [_e2, _e1, _e3, _v3], [_e2, _e3, _e1, _v3],
    [_e3, _e1, _e2, _v3], [_e3, _e2, _e1, _v3],
])

_TRI_RULES = {2: _TRI_D2, 4: _TRI_D4, 6: _TRI_D6}


def triangle_rule(degree):
    """Barycentric points (q, 3) and weights (q,) for a triangle rule."""
    rule = _TRI_RULES[degree]
    return rule[:, :3], rule[:, 3]


def triangle_points(p0, p1, p2, degree):
    """Physical quadrature points/weights for triangles (p0, p1, p2).

    The p_i have shape (..., 2); returns points (..., q, 2) and weights
    (..., q) including the triangle areas.
    """
    lam, w = triangle_rule(degree)
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    pts = (lam[:, 0, None] * p0[..., None, :]
           + lam[:, 1, None] * p1[..., None, :]
           + lam[:, 2, None] * p2[..., None, :])
    d1 = p1 - p0
    d2 = p2 - p0
    area = 0.5 * np.abs(d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0])
    return pts, area[..., None] * w


def singular_vertex_subtriangles(v, p, q, levels):
    """Split triangle (v, p, q) into dyadic shells shrinking toward v.

    Used to integrate functions with an integrable singularity at the
    vertex v. Returns an array (k, 3, 2) of sub-triangle corners covering
    (v, p, q) exactly, graded geometrically toward v.
    """
    v = np.asarray(v, float)
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    tris = []
    p_prev, q_prev = p, q
    for lev in range(1, levels + 1):
        lam = 0.5 ** lev
        p_cur = v + lam * (p - v)
        q_cur = v + lam * (q - v)
        tris.append([p_cur, p_prev, q_prev])
        tris.append([p_cur, q_prev, q_cur])
        p_prev, q_prev = p_cur, q_cur
    tris.append([v, p_prev, q_prev])
    return np.array(tris)
