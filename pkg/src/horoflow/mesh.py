"""Triangle meshes of boundaries in the Klein ball and OBJ output."""

import numpy as np

from .hconvex import RadialBody, SupportBody, klein_project

__all__ = ["AZIMUTH_SEGMENTS", "klein_vertices", "triangulate", "body_mesh", "write_obj", "obj_text"]

# azimuthal resolution of surfaces of revolution built from zonal bodies
AZIMUTH_SEGMENTS = 64


def klein_vertices(body):
    """Klein-model boundary points ``Y`` at the grid nodes."""
    if isinstance(body, SupportBody):
        return klein_project(body)
    if isinstance(body, RadialBody):
        return np.tanh(body.rho)[..., None] * body.grid.directions()
    raise TypeError("expected a SupportBody or RadialBody")


def triangulate(rows, cols):
    """Faces of a closed ``rows x cols`` latitude-longitude mesh.

    Quads between rings are split into two triangles; each polar ring is
    closed by a fan from its first vertex, so no extra vertices are added.
    """
    idx = np.arange(rows * cols).reshape(rows, cols)
    nxt = np.roll(idx, -1, axis=1)
    a, b = idx[:-1], nxt[:-1]
    c, d = idx[1:], nxt[1:]
    quads = np.concatenate(
        [np.stack([a, c, d], axis=-1).reshape(-1, 3), np.stack([a, d, b], axis=-1).reshape(-1, 3)]
    )
    j = np.arange(1, cols - 1)
    top = np.stack([np.zeros_like(j), j, j + 1], axis=-1)
    bottom_ring = idx[-1]
    bottom = np.stack([np.full_like(j, bottom_ring[0]), bottom_ring[j + 1], bottom_ring[j]], axis=-1)
    return np.concatenate([top, quads, bottom])


def _signed_volume(verts, faces):
    p = verts[faces]
    return float(np.sum(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])))) / 6.0


def body_mesh(body):
    """Vertices in the Klein ball and outward-oriented triangular faces.

    Zonal bodies are revolved about the symmetry axis using the meridian
    profile, which gives a surface in ``R^3`` for every ``n``.
    """
    Y = klein_vertices(body)
    grid = body.grid
    if grid.axisymmetric_mode:
        psi = np.arange(AZIMUTH_SEGMENTS) * (2.0 * np.pi / AZIMUTH_SEGMENTS)
        r, z = Y[:, 0], Y[:, -1]
        verts = np.stack(
            [r[:, None] * np.cos(psi), r[:, None] * np.sin(psi), np.broadcast_to(z[:, None], (r.size, psi.size))],
            axis=-1,
        ).reshape(-1, 3)
        rows, cols = grid.n_theta, AZIMUTH_SEGMENTS
    else:
        verts = Y.reshape(-1, 3)
        rows, cols = grid.n_theta, grid.n_phi
    faces = triangulate(rows, cols)
    if _signed_volume(verts, faces) < 0:
        faces = faces[:, ::-1]
    return verts, faces


def obj_text(verts, faces):
    lines = ["# horoflow boundary mesh in the Klein ball"]
    lines += [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in verts]
    lines += [f"f {i + 1} {j + 1} {k + 1}" for i, j, k in faces]
    return "\n".join(lines) + "\n"


def write_obj(path, body):
    verts, faces = body_mesh(body)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(obj_text(verts, faces))
    return verts, faces
