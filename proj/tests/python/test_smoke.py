import math

import pytest

import qoip


def test_mesh_construction_and_refinement():
    mesh = qoip.build_structured_unit_square(2)
    assert mesh.num_elements == 8
    assert mesh.num_vertices == 9
    assert mesh.num_faces == 16
    assert mesh.num_interior_faces == 8
    assert mesh.total_area == pytest.approx(1.0, abs=1e-13)
    assert mesh.validate() == []

    child = qoip.refine_uniform(mesh)
    assert child.num_elements == 32
    assert child.gamma == pytest.approx(mesh.gamma, rel=1e-12)
    assert child.h_max == pytest.approx(mesh.h_max / 2, rel=1e-14)

    with pytest.raises(ValueError):
        qoip.build_structured_unit_square(0)


def test_mesh_io_roundtrip(tmp_path):
    mesh = qoip.build_structured_unit_square(3)
    path = str(tmp_path / "mesh.txt")
    qoip.save_mesh(mesh, path)
    loaded, warnings = qoip.load_mesh(path)
    assert warnings == []
    assert loaded.num_elements == mesh.num_elements
    assert loaded.vertices().shape == (mesh.num_vertices, 2)
    assert loaded.elements().shape == (mesh.num_elements, 3)


def test_barycentric_integration_formula():
    assert qoip.integrate_barycentric_monomial([1, 0, 0], 2) == pytest.approx(1 / 3)
    assert qoip.integrate_barycentric_monomial([4, 4], 1) == pytest.approx(1 / 630)
    pts, w = qoip.quadrature_rule("triangle", 4)
    assert w.sum() == pytest.approx(0.5, abs=1e-14)
    got = sum(wi * p[1] * p[2] for p, wi in zip(pts, w))
    assert got == pytest.approx(qoip.integrate_barycentric_monomial([0, 1, 1], 2, 0.5))


def test_lagrange_kronecker():
    value, _grad = qoip.lagrange_eval(1, 0, [1.0, 0.0, 0.0])
    assert value == pytest.approx(1.0)
    value, _grad = qoip.lagrange_eval(1, 0, [0.0, 1.0, 0.0])
    assert value == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValueError):
        qoip.lagrange_eval(1, 99, [1.0, 0.0, 0.0])


def test_eta_star_scale_invariance():
    mesh = qoip.build_structured_unit_square(2)
    v0 = qoip.estimate_eta_star(mesh, 1, 1)
    assert v0 > 0
    v1 = qoip.estimate_eta_star(qoip.refine_uniform(mesh), 1, 1)
    assert v1 == pytest.approx(v0, rel=0.02)


def test_smoother_check():
    out = qoip.smoother_check(n=2, p=2)
    assert out["face_moment_residual"] <= 1e-10
    assert out["invariance_defect"] <= 1e-10


def test_run_single_poisson_ratio():
    out = qoip.run_single("poisson", "sip", p=1, eta=10.0, load="MS-P1", n=4)
    assert out["ratio"] >= 1.0 - 1e-6
    assert out["ratio"] <= 1.5
    assert out["energy_error"] >= out["best_error"] * (1 - 1e-12)


def test_convergence_study_and_output(tmp_path):
    csv_path = str(tmp_path / "study.csv")
    res = qoip.convergence_study(
        "poisson", "sip", p=1, load="MS-P1", base_n=2, levels=2, out=csv_path
    )
    rows = res["rows"]
    assert len(rows) == 3
    assert rows[-1]["eoc"] == pytest.approx(1.0, abs=0.25)
    header = open(csv_path).readline().strip()
    assert header == "level,h,dofs,energy_error,best_error,ratio,eoc"
    assert res["metadata"]["eta"] == pytest.approx(10.0)
    assert "MS-P1" in qoip.manufactured_names()


def test_compare_variants_decays():
    rows = qoip.compare_variants("MS-E1", base_n=2, levels=2, eta=10.0)
    assert rows[-1]["diff_norm"] < rows[0]["diff_norm"]
