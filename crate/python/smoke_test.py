"""Smoke test for the pycbf extension.

Build and install first, e.g. ``maturin build -m crates/python/Cargo.toml``
followed by ``pip install`` of the wheel, then run ``pytest python``.
"""

import math

import pytest

import pycbf


def test_mesh_basics():
    m = pycbf.Mesh.square(4)
    assert m.n_triangles == 32
    assert m.n_vertices == 25
    assert math.isclose(m.area(), 1.0, rel_tol=1e-14)
    fine = m.refine([0, 5])
    assert fine.n_triangles > m.n_triangles
    assert math.isclose(fine.area(), 1.0, rel_tol=1e-14)
    assert pycbf.Mesh.lshape(2).refine_uniform(2).n_triangles == 4 * pycbf.Mesh.lshape(2).n_triangles


def test_solve_example1():
    step = pycbf.solve("ex1", pycbf.Mesh.square(4))
    assert step.dofs == 162
    assert step.iterations <= 8
    errors = step.errors()
    assert math.isclose(errors["total"], math.hypot(errors["sigma"], errors["u"]))
    assert step.theta1 > 0 and step.theta2hat > 0
    assert len(step.local_indicator("theta2hat")) == step.mesh.n_triangles
    values = step.evaluate(0.3, 0.6)
    assert len(values["u"]) == 2 and len(values["sigma"]) == 4
    with pytest.raises(ValueError):
        step.evaluate(2.0, 2.0)


def test_convergence_rates_near_one():
    steps = pycbf.convergence("ex1", order=0, levels=3)
    rates = pycbf.convergence_rates([s.dofs for s in steps], [s.errors()["total"] for s in steps])
    assert rates[0] is None
    assert 0.8 < rates[-1] < 1.2
    table = pycbf.csv(steps)
    assert table.splitlines()[0].startswith("DOF,h,iter")
    assert len(table.splitlines()) == 4


def test_adaptive_marks_and_refines():
    steps = pycbf.adaptive("ex2", max_steps=2)
    assert len(steps) == 3
    assert steps[0].dofs < steps[1].dofs < steps[2].dofs
    assert steps[0].mark("theta1", 0.75)


def test_bad_arguments_raise_value_error():
    with pytest.raises(ValueError):
        pycbf.solve("ex9")
    with pytest.raises(ValueError):
        pycbf.adaptive("ex1", c_adm=1.5)
    with pytest.raises(ValueError):
        pycbf.solve("ex1", order=3)


def test_fracture_velocity_concentrates(tmp_path):
    step = pycbf.solve("fracture", pycbf.Mesh.fracture())
    speeds = step.mean_speed_by_region()
    assert speeds[1] > speeds[0]
    path = tmp_path / "fracture.vtk"
    step.write_vtk(str(path))
    assert path.read_text().startswith("# vtk DataFile Version 3.0")
