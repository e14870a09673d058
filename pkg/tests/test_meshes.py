import numpy as np
import pytest

from oceansim.errors import MeshError
from oceansim.meshes import HULL_PRESETS, TriMesh, box, hull, icosphere, load_obj, preset_hull, save_obj


def test_box_properties():
    m = box((2.0, 1.0, 3.0))
    assert m.volume == pytest.approx(6.0)
    assert m.total_area == pytest.approx(2 * (2 + 6 + 3))
    assert np.allclose(m.extent, [2, 1, 3])
    assert m.height == pytest.approx(1.0)
    m.validate()


def test_box_mass_properties_match_closed_form():
    m = box((2.0, 1.0, 3.0), center=(1.0, -2.0, 0.5))
    mass, com, inertia = m.mass_properties(density=10.0)
    assert mass == pytest.approx(60.0)
    assert np.allclose(com, [1.0, -2.0, 0.5])
    assert np.allclose(inertia, 60.0 / 12.0 * np.diag([1 + 9, 4 + 9, 4 + 1]))


def test_icosphere_volume_and_counts():
    s = icosphere(4)
    assert len(s.vertices) == 2562
    assert s.volume == pytest.approx(4 / 3 * np.pi, rel=5e-3)
    mass, com, inertia = s.mass_properties()
    assert np.allclose(com, 0, atol=1e-12)
    assert np.allclose(inertia, inertia[0, 0] * np.eye(3), atol=1e-9)
    assert inertia[0, 0] == pytest.approx(0.4 * mass, rel=3e-3)


def test_centered_moves_com_to_origin():
    m = preset_hull("sailboat").centered()
    _, com, _ = m.mass_properties()
    assert np.allclose(com, 0, atol=1e-10)


def test_validate_rejects_open_and_flipped():
    m = box()
    with pytest.raises(MeshError, match="not closed"):
        TriMesh(m.vertices, m.triangles[:-1]).validate()
    with pytest.raises(MeshError, match="inward"):
        TriMesh(m.vertices, m.triangles[:, ::-1]).validate()
    flipped = m.triangles.copy()
    flipped[0] = flipped[0, ::-1]
    with pytest.raises(MeshError):
        TriMesh(m.vertices, flipped).validate()
    with pytest.raises(MeshError):
        TriMesh(np.zeros((0, 3)), np.zeros((0, 3), int)).validate()
    with pytest.raises(MeshError):
        TriMesh(m.vertices, m.triangles + 100)


def test_obj_roundtrip(tmp_path):
    m = box((1.0, 2.0, 3.0))
    p = tmp_path / "b.obj"
    save_obj(p, m)
    back = load_obj(p)
    assert np.allclose(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)


def test_obj_errors(tmp_path):
    p = tmp_path / "quad.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(MeshError, match=":5:"):
        load_obj(p)
    p.write_text("v 0 0 x\n")
    with pytest.raises(MeshError, match=":1:"):
        load_obj(p)
    with pytest.raises(MeshError):
        load_obj(tmp_path / "missing.obj")
    p.write_text("# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 -1\n")
    m = load_obj(p, validate=False)
    assert m.triangles.tolist() == [[0, 1, 2]]


@pytest.mark.parametrize("name", sorted(HULL_PRESETS))
def test_hull_presets_closed(name):
    m = preset_hull(name).validate()
    ring, seg, fan = HULL_PRESETS[name][4:]
    assert len(m.triangles) == 2 * ring * (seg + 1) - (0 if fan else 4)
    assert m.n_degenerate == 0
    if ring % 2 == 0:
        assert abs(m.vertices[:, 0].sum()) < 1e-9


def test_bundled_hull_files_match_presets():
    from importlib import resources
    base = resources.files("oceansim") / "scenarios" / "meshes"
    total = 0
    for name in HULL_PRESETS:
        m = load_obj(base / f"{name}.obj")
        assert len(m.triangles) == len(preset_hull(name).triangles)
        total += len(m.triangles)
    assert total == 1148


def test_hull_arguments():
    with pytest.raises(MeshError):
        hull(1, 1, 1, 1, ring=2, segments=3)
    with pytest.raises(MeshError):
        preset_hull("submarine")
