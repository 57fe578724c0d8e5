import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from radon3d.geometry import Geometry
from radon3d.phantom import (
    Ellipsoid,
    Phantom,
    builtin_phantom,
    cone_beam_project,
    detector_coordinates,
    load_phantom_json,
    shepp_logan_3d,
    shepp_logan_ellipsoids,
    voxelize,
)


def geom(nx=16, nu=32, n_proj=8):
    return Geometry(sx=64.0, nx=nx, su=256.0, nu=nu, SP=1500.0, SO=1000.0, n_proj=n_proj)


def ball(r=20.0, density=1.0, center=(0.0, 0.0, 0.0)):
    return Phantom([Ellipsoid(center, (r, r, r), 0.0, density)], 64.0)


def test_shepp_logan_center_and_outside():
    vol = shepp_logan_3d(64, 64.0)
    # origin: outer skull (1.0) plus brain (-0.8)
    assert vol[32, 32, 32] == pytest.approx(0.2)
    assert vol[0, 0, 0] == 0.0
    assert vol.shape == (64, 64, 64)
    assert vol.max() == pytest.approx(1.0)


def test_shepp_logan_total_matches_ellipsoid_volumes():
    ph = builtin_phantom("shepp-logan", 64.0)
    want = sum(e.density * 4 / 3 * np.pi * np.prod(e.axes) for e in ph.ellipsoids)
    vol = shepp_logan_3d(64, 64.0)
    assert vol.sum() * 1.0**3 == pytest.approx(want, rel=0.02)


def test_table_angles_are_combined_z_rotations():
    ells = shepp_logan_ellipsoids(64.0)
    assert len(ells) == 10
    assert np.rad2deg(ells[2].angle) == pytest.approx(-8.0)
    assert np.rad2deg(ells[3].angle) == pytest.approx(28.0)


def test_ellipsoid_validation():
    with pytest.raises(ValueError):
        Ellipsoid((0, 0, 0), (1, 0, 1))
    with pytest.raises(ValueError):
        Phantom([Ellipsoid((30, 0, 0), (3, 1, 1))], 64.0)


def test_rotated_ellipsoid_membership():
    e = Ellipsoid((0, 0, 0), (10, 2, 2), np.pi / 2)
    assert e.contains(np.array([0.0, 9.0, 0.0]))
    assert not e.contains(np.array([9.0, 0.0, 0.0]))


def test_zero_phantom_projects_to_zero():
    g = geom()
    assert not np.any(cone_beam_project(Phantom([], 64.0), g))
    assert not np.any(cone_beam_project(np.zeros((16, 16, 16)), g))


def test_central_ray_through_ball():
    g = geom(nu=32, n_proj=1)
    proj = cone_beam_project(ball(10.0), g)
    c = g.nu // 2
    assert proj[0, c, c] == pytest.approx(20.0, rel=1e-9)


def test_off_centre_chords(rng):
    # every ray: chord 2 sqrt(r^2 - d^2), d the distance of the ray to the centre
    g = geom(nu=32, n_proj=3)
    r = 12.0
    proj = cone_beam_project(ball(r), g)
    c = detector_coordinates(g)
    for i, psi in enumerate(g.psi):
        src = g.SO * np.array([np.cos(psi), np.sin(psi), 0.0])
        e_u = np.array([-np.sin(psi), np.cos(psi), 0.0])
        pix = c[:, None, None] * np.array([0, 0, 1.0]) + c[None, :, None] * e_u
        d = pix - src
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        dist = np.linalg.norm(np.cross(-src, d), axis=-1)
        want = 2 * np.sqrt(np.clip(r**2 - dist**2, 0, None))
        assert_allclose(proj[i], want, atol=1e-9)


def test_centred_sphere_projection_is_rotation_invariant():
    proj = cone_beam_project(ball(15.0), geom(n_proj=12))
    assert np.abs(proj - proj[0]).max() <= 1e-9


def test_ray_march_of_voxelised_ball_agrees_on_average():
    g = geom(nx=32, nu=64, n_proj=2)
    ph = ball(20.0)
    a = cone_beam_project(ph, g)
    v = cone_beam_project(voxelize(ph, 32), g)
    assert v.sum() / a.sum() == pytest.approx(1.0, abs=0.01)
    assert np.linalg.norm(a - v) / np.linalg.norm(a) < 0.06


def test_ray_march_error_shrinks_with_resolution():
    errs = []
    for n in (16, 32, 64):
        g = geom(nx=n, nu=64, n_proj=1)
        a = cone_beam_project(ball(20.0), g)
        v = cone_beam_project(voxelize(ball(20.0), n), g)
        errs.append(np.linalg.norm(a - v) / np.linalg.norm(a))
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.xfail(
    strict=True,
    reason="trilinear ray marching of a point-sampled n=32 volume misses sharp "
    "edges; measured 16% relative L2 for Shepp-Logan, 5% for a ball",
)
def test_projectors_agree_within_two_percent_at_n32():
    g = geom(nx=32, nu=64, n_proj=2)
    ph = builtin_phantom("shepp-logan", 64.0)
    a = cone_beam_project(ph, g)
    v = cone_beam_project(voxelize(ph, 32), g)
    assert np.linalg.norm(a - v) / np.linalg.norm(a) <= 0.02


def test_source_inside_object_is_rejected():
    # the phantom's own cube is larger than the scanner's object cube
    g = Geometry(sx=64.0, nx=16, su=256.0, nu=32, SP=1500.0, SO=60.0, n_proj=2)
    with pytest.raises(ValueError):
        cone_beam_project(Phantom([Ellipsoid((0, 0, 0), (70, 1, 1))], 200.0), g)


def test_volume_shape_must_match_geometry():
    with pytest.raises(ValueError):
        cone_beam_project(np.zeros((8, 8, 8)), geom())


def test_json_phantom_round_trip(tmp_path):
    ph = builtin_phantom("head", 32.0)
    path = tmp_path / "head.json"
    ph.to_json(path)
    back = load_phantom_json(path)
    assert back.sx == 32.0
    assert len(back.ellipsoids) == len(ph.ellipsoids)
    assert_allclose(voxelize(back, 16), voxelize(ph, 16))


def test_json_bare_list(tmp_path):
    path = tmp_path / "list.json"
    path.write_text(json.dumps([{"center": [0, 0, 0], "axes": [5, 5, 5]}]))
    ph = load_phantom_json(path)
    assert ph.sx == 10.0
    assert ph.ellipsoids[0].density == 1.0


def test_head_phantom_is_bounded():
    ph = builtin_phantom("head", 32.0)
    vol = voxelize(ph, 32)
    assert vol.max() == pytest.approx(1.0)
    assert vol.min() >= 0.0
    with pytest.raises(ValueError):
        builtin_phantom("zubal", 32.0)
    with pytest.raises(ValueError):
        voxelize(ph, 15)
