"""Triangulation of simple polygons for custom problem domains."""
import numpy as np

from .mesh import Mesh, refine_rgb


def _is_ear(poly, i):
    n = len(poly)
    a, b, c = poly[(i - 1) % n], poly[i], poly[(i + 1) % n]
    cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if cross <= 1e-14:
        return False
    for j in range(n):
        if j in ((i - 1) % n, i, (i + 1) % n):
            continue
        p = poly[j]
        # barycentric point-in-triangle
        d = ((b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]))
        l1 = ((b[1] - c[1]) * (p[0] - c[0])
              + (c[0] - b[0]) * (p[1] - c[1])) / d
        l2 = ((c[1] - a[1]) * (p[0] - c[0])
              + (a[0] - c[0]) * (p[1] - c[1])) / d
        l3 = 1.0 - l1 - l2
        if l1 > -1e-12 and l2 > -1e-12 and l3 > -1e-12:
            return False
    return True


def mesh_polygon(polygon, target_elements):
    """Ear-clipping triangulation, red-refined until target_elements."""
    polygon = np.asarray(polygon, float)
    x, y = polygon.T
    if 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) < 0:
        polygon = polygon[::-1]

    remaining = list(range(len(polygon)))
    tris = []
    guard = 0
    while len(remaining) > 3:
        guard += 1
        if guard > 10000:
            raise ValueError("polygon triangulation failed")
        for pos in range(len(remaining)):
            pts = polygon[remaining]
            if _is_ear(pts, pos):
                n = len(remaining)
                tris.append([remaining[(pos - 1) % n], remaining[pos],
                             remaining[(pos + 1) % n]])
                del remaining[pos]
                break
        else:
            raise ValueError("polygon is not simple")
    tris.append(list(remaining))

    mesh = Mesh(polygon, np.array(tris), polygon=polygon,
                domain_id="custom")
    while mesh.n_triangles < target_elements:
        mesh, _ = refine_rgb(mesh, np.arange(mesh.n_triangles))
    return mesh
