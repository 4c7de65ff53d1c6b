from collections import Counter

import numpy as np
import pytest

from horoflow.hconvex import RadialBody, SupportBody, random_body, sphere_support
from horoflow.mesh import AZIMUTH_SEGMENTS, body_mesh, klein_vertices, obj_text, triangulate, write_obj
from horoflow.sphere import SphereGrid

AXI = SphereGrid.axisymmetric(2, 64)
AXI3 = SphereGrid.axisymmetric(3, 32)
FULL = SphereGrid.full_s2(16, 32)


def signed_volume(verts, faces):
    p = verts[faces]
    return np.sum(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2]))) / 6.0


@pytest.mark.parametrize("r", [0.4, 1.0, 2.5])
def test_sphere_vertices_lie_at_klein_radius(r):
    for grid in (AXI, AXI3, FULL):
        for body in (SupportBody.sphere(grid, r), RadialBody.sphere(grid, r)):
            verts, _ = body_mesh(body)
            assert np.abs(np.linalg.norm(verts, axis=-1) - np.tanh(r)).max() <= 1e-10


def test_vertex_counts():
    assert body_mesh(SupportBody.sphere(FULL, 1.0))[0].shape == (FULL.shape[0] * FULL.shape[1], 3)
    assert body_mesh(SupportBody.sphere(AXI, 1.0))[0].shape == (AXI.n_theta * AZIMUTH_SEGMENTS, 3)


def test_triangulate_face_count():
    faces = triangulate(5, 8)
    assert faces.shape == (2 * 8 * 4 + 2 * 6, 3)
    assert faces.min() == 0 and faces.max() == 39


@pytest.mark.parametrize(
    "body",
    [
        sphere_support(FULL, 1.0, 0.4, axis=np.array([0.6, 0.0, 0.8])),
        random_body(FULL, 3, 1.0, 0.1),
        random_body(AXI, 2, 0.8, 0.1),
        RadialBody(AXI3, 1.0 + 0.05 * np.cos(AXI3.theta)),
    ],
)
def test_mesh_is_closed_and_outward(body):
    verts, faces = body_mesh(body)
    directed = Counter()
    for a, b, c in faces:
        directed.update([(a, b), (b, c), (c, a)])
    # every directed edge is used once and its reverse once
    assert all(v == 1 for v in directed.values())
    assert all((b, a) in directed for a, b in directed)
    centre = verts.mean(axis=0)
    p = verts[faces]
    normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    assert np.all(np.einsum("ij,ij->i", normals, p.mean(axis=1) - centre) > 0)
    assert np.all(np.linalg.norm(verts, axis=-1) < 1.0)


def test_mesh_volume_approximates_klein_ball():
    r = 1.0
    verts, faces = body_mesh(SupportBody.sphere(SphereGrid.full_s2(64, 128), r))
    assert signed_volume(verts, faces) == pytest.approx(4.0 / 3.0 * np.pi * np.tanh(r) ** 3, rel=2e-3)


def test_klein_vertices_of_spheres():
    # the horoball supporting in direction e is centred at the ideal point e,
    # so it touches a centred ball at the antipodal point
    e = FULL.directions()
    np.testing.assert_allclose(klein_vertices(SupportBody.sphere(FULL, 0.9)), -np.tanh(0.9) * e, atol=1e-12)
    np.testing.assert_allclose(klein_vertices(RadialBody.sphere(FULL, 0.9)), np.tanh(0.9) * e, atol=1e-12)
    with pytest.raises(TypeError):
        klein_vertices(np.ones(3))


def test_obj_output(tmp_path):
    body = random_body(FULL, 1, 1.0, 0.1)
    verts, faces = write_obj(tmp_path / "a.obj", body)
    write_obj(tmp_path / "b.obj", body)
    text = (tmp_path / "a.obj").read_bytes()
    assert text == (tmp_path / "b.obj").read_bytes()
    assert text.decode() == obj_text(verts, faces)
    lines = text.decode().splitlines()
    v = np.array([[float(x) for x in ln.split()[1:]] for ln in lines if ln.startswith("v ")])
    f = np.array([[int(x) for x in ln.split()[1:]] for ln in lines if ln.startswith("f ")])
    np.testing.assert_array_equal(v, verts)
    np.testing.assert_array_equal(f - 1, faces)
