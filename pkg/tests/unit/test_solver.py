# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Unit tests for step assembly, the linear/Picard solves and the energy ledger.

Assumptions:
- A 1 x 1 x N part column with insulated sides reduces to a 1D rod
- With constant properties the step is linear and needs one Picard iteration
- Manufactured solutions are linear in time, so backward Euler adds no
  temporal error and only the spatial order is measured
"""
import numpy as np
import pytest
import scipy.sparse as sp

from tests.conftest import column_mesh, constant_material
from tests.oracle import slab_analytic

AMPLITUDE = 1e6


def _solver(mesh, conditions, initial=20.0, material=None, linear_solver="direct", threads=1):
    from vdatherm.mesh import Region
    from vdatherm.solver import SolverOptions, ThermalSolver

    table = material or constant_material()
    return ThermalSolver(
        mesh,
        {Region.PART: table},
        conditions,
        initial_temperature=initial,
        options=SolverOptions(linear_solver=linear_solver, cg_rtol=1e-12),
        threads=threads,
    )


def _node_z(mesh):
    return mesh.node_coordinates()[:, 2]


@pytest.mark.unit
def test_insulated_block_keeps_its_temperature():
    """Test that a block with no conditions and no source stays put.

    Assumptions:
    - CG starts at the exact answer, so nothing moves
    """
    solver = _solver(column_mesh(3, 3e-3), [], initial=350.0, linear_solver="cg")

    for _ in range(5):
        record = solver.advance(0.1)

    np.testing.assert_allclose(solver.field.temperatures, 350.0, rtol=0, atol=1e-10)
    assert record.picard_iterations == 1
    assert abs(record.energy["residual"]) < 1e-9


@pytest.mark.unit
def test_source_heats_insulated_block_by_energy_over_capacity():
    from vdatherm.solver import HeatSource

    mesh = column_mesh(2, 2e-3)
    solver = _solver(mesh, [], initial=20.0)
    cells = np.arange(mesh.n_cells)
    power_density = 1e9
    dt = 0.01

    record = solver.advance(dt, HeatSource(cells, power_density))

    volume = mesh.volumes.sum()
    expected = 20.0 + power_density * volume * dt / (7900.0 * 500.0 * volume)
    np.testing.assert_allclose(solver.active_temperatures().mean(), expected, rtol=1e-10)
    assert record.energy["input"] == pytest.approx(power_density * volume * dt, rel=1e-12)
    assert record.energy["stored"] == pytest.approx(record.energy["input"], rel=1e-9)


@pytest.mark.unit
def test_dirichlet_block_converges_to_held_temperature():
    from vdatherm.solver import BoundaryCondition

    conditions = [
        BoundaryCondition("base_part", "dirichlet", value=100.0),
        BoundaryCondition("air_part", "dirichlet", value=100.0),
    ]
    solver = _solver(column_mesh(6, 6e-3), conditions, initial=20.0)

    means = []
    for _ in range(60):
        solver.advance(0.5)
        means.append(solver.active_temperatures().mean())

    assert np.all(np.diff(means) >= -1e-12)
    np.testing.assert_allclose(solver.field.temperatures, 100.0, atol=1e-3)


@pytest.mark.unit
@pytest.mark.parametrize("linear_solver", ["direct", "cg"])
def test_unpowered_block_stays_between_initial_and_held_temperatures(linear_solver):
    """Test the discrete maximum principle after every step.

    Assumptions:
    - Cube cells with lumped capacity give an M-matrix, so no over- or undershoot
    - Steps range from a fraction of the cell diffusion time to far beyond it
    """
    from vdatherm.solver import BoundaryCondition

    conditions = [BoundaryCondition("air_part", "dirichlet", value=100.0)]
    solver = _solver(column_mesh(6, 6e-3), conditions, initial=20.0, linear_solver=linear_solver)
    tol = 1e-8

    for dt in [0.01, 0.05, 0.2, 1.0, 5.0, 25.0, 100.0]:
        solver.advance(dt)
        active = solver.active_temperatures()
        assert active.min() >= 20.0 - tol
        assert active.max() <= 100.0 + tol


def _stack(n_part: int, n_bed: int, dz: float, variant: str):
    """1 x 1 column: one plate cell, n_part part cells and, for HF, n_bed powder cells on top."""
    from vdatherm.mesh import Region, StructuredMesh, activate_layer

    region = [Region.BASE] + [Region.PART] * n_part
    layer = [-1] + list(range(n_part))
    if variant == "HF":
        region += [Region.BED] * n_bed
        layer += list(range(n_part, n_part + n_bed))
    z = dz * np.arange(-1, len(region))
    mesh = StructuredMesh(np.array([0.0, 1e-3]), np.array([0.0, 1e-3]), z,
                          np.array(region), np.array(layer), variant=variant)
    for lump in range(mesh.n_layers):
        activate_layer(mesh, lump)
    return mesh


@pytest.mark.unit
def test_wall_copying_the_powder_column_reproduces_the_full_stack():
    """Test the reduced model against the full stack it replaces.

    The full model meshes the powder above the part and holds its top at T0.
    The reduced model drops the powder cells and puts a Dirichlet wall on the
    part top with one element per powder cell, the same thickness and the
    powder phase of the same material.

    Assumptions:
    - Constant properties and a direct solver, so agreement is to round-off
    - The plate bottom is held hot; every side face is insulated
    - Nodes up to the part top are numbered alike in both meshes
    """
    from vdatherm.mesh import Region
    from vdatherm.solver import BoundaryCondition, SolverOptions, ThermalSolver
    from vdatherm.vda import VdaBoundary, VdaParams

    n_part, n_bed, dz = 3, 2, 1e-3
    steel = constant_material()
    powder = steel.as_phase("powder")
    options = SolverOptions(linear_solver="direct")

    full = ThermalSolver(
        _stack(n_part, n_bed, dz, "HF"),
        {Region.PART: steel, Region.BASE: steel, Region.BED: powder},
        [BoundaryCondition("down", "dirichlet", value=200.0),
         BoundaryCondition("air_bed", "dirichlet", value=20.0)],
        initial_temperature=20.0,
        options=options,
    )
    wall = VdaBoundary(
        VdaParams(thickness=n_bed * dz, far_temperature=20.0, variant="GENERAL",
                  n_elements=n_bed, order=1, dirichlet=True),
        powder,
        evaluation="condensed",
    )
    reduced = ThermalSolver(
        _stack(n_part, n_bed, dz, "PP"),
        {Region.PART: steel, Region.BASE: steel},
        [BoundaryCondition("down", "dirichlet", value=200.0),
         BoundaryCondition("air_part", "vda", vda=wall)],
        initial_temperature=20.0,
        options=options,
    )
    top = slice(4 * (n_part + 1), 4 * (n_part + 2))
    shared = reduced.mesh.n_nodes

    for dt in [0.05] * 10 + [0.5] * 10 + [5.0] * 4:
        full.advance(dt)
        reduced.advance(dt)
        np.testing.assert_allclose(
            reduced.field.temperatures[top], full.field.temperatures[top], rtol=1e-6
        )

    np.testing.assert_allclose(
        reduced.field.temperatures, full.field.temperatures[:shared], rtol=1e-6
    )
    assert full.field.temperatures[top].mean() > 25.0


@pytest.mark.unit
def test_steady_slab_matches_linear_profile():
    """Test one very long step against the plane-wall solution.

    Assumptions:
    - dt = 1e10 s makes the capacity term negligible
    - Boundary ledger reports the conducted heat entering at the hot face
    """
    from vdatherm.solver import BoundaryCondition

    length, k = 0.01, 15.0
    mesh = column_mesh(8, length)
    conditions = [
        BoundaryCondition("base_part", "dirichlet", value=100.0),
        BoundaryCondition("air_part", "dirichlet", value=20.0),
    ]
    solver = _solver(mesh, conditions, initial=20.0, material=constant_material(k=k))
    dt = 1e10

    record = solver.advance(dt)

    q, profile = slab_analytic(100.0, 20.0, k, length, _node_z(mesh))
    np.testing.assert_allclose(solver.field.temperatures, profile, rtol=1e-6)
    area = 1e-3 * 1e-3
    losses = record.energy["boundary"]
    assert losses["base_part"] == pytest.approx(-q * area * dt, rel=1e-6)
    assert losses["air_part"] == pytest.approx(q * area * dt, rel=1e-6)


def _manufactured_error(n_cells: int, length: float = 0.01) -> tuple[float, dict]:
    """Max nodal error of T = A z^2 t on an N-cell rod after ten steps."""
    from vdatherm.solver import BoundaryCondition, HeatSource

    rho, c, k = 1000.0, 1.0, 10.0
    dt, steps = 0.005, 10
    t_end = dt * steps
    mesh = column_mesh(n_cells, length)
    conditions = [
        BoundaryCondition("base_part", "dirichlet", value=0.0),
        BoundaryCondition(
            "air_part", "dirichlet", value=[(0.0, 0.0), (t_end, AMPLITUDE * length**2 * t_end)]
        ),
    ]
    solver = _solver(mesh, conditions, initial=0.0, material=constant_material(rho=rho, c=c, k=k))

    def density(points, time):
        z = points[..., 2]
        return AMPLITUDE * (rho * c * z**2 - 2.0 * k * time)

    source = HeatSource(np.arange(mesh.n_cells), density)
    worst = 0.0
    for _ in range(steps):
        record = solver.advance(dt, source)
        scale = max(abs(record.energy["input"]), abs(record.energy["stored"]),
                    max(abs(v) for v in record.energy["boundary"].values()))
        worst = max(worst, abs(record.energy["residual"]) / scale)
    exact = AMPLITUDE * _node_z(mesh) ** 2 * t_end
    return float(np.max(np.abs(solver.field.temperatures - exact))), {"residual": worst}


@pytest.mark.unit
def test_manufactured_solution_converges_at_second_order():
    """Test spatial convergence on a rod with T = A z^2 t.

    Assumptions:
    - Source rho c A z^2 - 2 k A t, ends held at the exact values
    - Observed order on N = 4, 8, 16 is at least 1.9
    """
    errors = [_manufactured_error(n)[0] for n in (4, 8, 16)]

    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert errors[0] > 0.0
    assert np.all(orders >= 1.9), orders


@pytest.mark.unit
def test_energy_ledger_closes_with_direct_solver():
    _, ledger = _manufactured_error(8)

    assert ledger["residual"] <= 1e-8


@pytest.mark.unit
def test_newton_cooling_loss_is_reported_per_label():
    from vdatherm.solver import BoundaryCondition

    conditions = [
        BoundaryCondition("air_part", "newton", h=50.0, ambient=20.0),
        BoundaryCondition("bed_part", "newton", h=10.0, ambient=20.0),
    ]
    solver = _solver(column_mesh(4, 4e-3), conditions, initial=200.0)

    record = solver.advance(0.5)

    losses = record.energy["boundary"]
    assert set(losses) == {"air_part", "bed_part"}
    assert losses["air_part"] > 0.0
    assert losses["bed_part"] > losses["air_part"]
    assert abs(record.energy["residual"]) <= 1e-8 * abs(record.energy["stored"])
    assert solver.active_temperatures().max() < 200.0


@pytest.mark.unit
def test_temperature_dependent_conductivity_needs_picard_iterations():
    from vdatherm.materials import MaterialTable, PropertyTable
    from vdatherm.mesh import Region
    from vdatherm.solver import BoundaryCondition, SolverOptions, ThermalSolver

    table = MaterialTable(
        "alloy",
        PropertyTable.constant(7900.0),
        PropertyTable.constant(500.0),
        PropertyTable.from_breakpoints([(0.0, 5.0), (1000.0, 50.0)]),
    )
    conditions = [
        BoundaryCondition("base_part", "dirichlet", value=900.0),
        BoundaryCondition("air_part", "dirichlet", value=100.0),
    ]
    solver = ThermalSolver(
        column_mesh(8, 0.01), {Region.PART: table}, conditions, 100.0,
        SolverOptions(linear_solver="direct", picard_tol=1e-8, picard_max_iterations=200),
    )

    record = solver.advance(1e10)

    assert record.picard_iterations > 1
    profile = solver.field.temperatures.reshape(-1, 4)[:, 0]
    assert np.all(np.diff(profile) < 0.0)
    # conductivity grows with T, so the hot half is flatter than a straight line
    assert profile[4] > 500.0


@pytest.mark.unit
def test_radiation_coefficient_linearizes_exactly():
    from vdatherm.solver import radiation_coefficient

    sigma = 5.67e-8
    h0 = radiation_coefficient(1.0, 0.0, 0.0)
    assert h0 == pytest.approx(4.0 * sigma * 273.15**3, rel=1e-14)

    t, ta, eps = 500.0, 20.0, 0.4
    h = radiation_coefficient(eps, t, ta)
    flux = eps * sigma * ((t + 273.15) ** 4 - (ta + 273.15) ** 4)
    assert h * (t - ta) == pytest.approx(flux, rel=1e-12)
    assert radiation_coefficient(eps, np.array([t, t]), ta).shape == (2,)


@pytest.mark.unit
def test_radiating_newton_condition_cools_faster():
    from vdatherm.solver import BoundaryCondition

    plain = _solver(column_mesh(2, 2e-3), [BoundaryCondition("air_part", "newton", h=10.0)], 800.0)
    hot = _solver(
        column_mesh(2, 2e-3),
        [BoundaryCondition("air_part", "newton", h=10.0, emissivity=0.8)],
        800.0,
    )

    plain.advance(1.0)
    record = hot.advance(1.0)

    assert hot.active_temperatures().mean() < plain.active_temperatures().mean()
    assert record.picard_iterations > 1


@pytest.mark.unit
def test_assembly_does_not_depend_on_thread_count():
    from vdatherm.mesh import Region
    from vdatherm.solver import Assembler, BoundaryCondition

    conditions = [BoundaryCondition("air_part", "newton", h=25.0)]
    materials = {Region.PART: constant_material()}
    x = np.linspace(20.0, 400.0, column_mesh(12, 0.012).n_nodes)

    systems = []
    for threads in (1, 3):
        assembler = Assembler(column_mesh(12, 0.012), materials, conditions, threads)
        try:
            systems.append(assembler.assemble(x, x, 0.1, 0.1))
        finally:
            assembler.close()

    assert np.array_equal(systems[0].matrix.toarray(), systems[1].matrix.toarray())
    assert np.array_equal(systems[0].rhs, systems[1].rhs)


@pytest.mark.unit
def test_condition_on_foreign_label_is_rejected():
    from vdatherm.solver import BoundaryCondition

    with pytest.raises(ValueError, match="lat_bed"):
        _solver(column_mesh(2, 2e-3), [BoundaryCondition("lat_bed", "newton", h=5.0)])


@pytest.mark.unit
@pytest.mark.parametrize("kwargs", [
    {"kind": "newton", "h": -1.0},
    {"kind": "newton", "emissivity": 1.5},
    {"kind": "dirichlet"},
    {"kind": "vda"},
])
def test_invalid_boundary_conditions_raise(kwargs):
    from vdatherm.solver import BoundaryCondition

    with pytest.raises(ValueError):
        BoundaryCondition("air_part", **kwargs)


@pytest.mark.unit
def test_bad_step_carries_step_context():
    from vdatherm.solver import SolverError

    solver = _solver(column_mesh(2, 2e-3), [])
    solver.advance(0.1)

    with pytest.raises(SolverError, match=r"step 2") as info:
        solver.advance(0.0)
    assert info.value.step == 2


@pytest.mark.unit
def test_empty_domain_cannot_be_solved():
    from vdatherm.solver import SolverError

    solver = _solver(column_mesh(2, 2e-3, active=False), [])

    with pytest.raises(SolverError, match="empty"):
        solver.advance(0.1)


@pytest.mark.unit
def test_dirichlet_condition_losing_its_value_raises_solver_error():
    from vdatherm.solver import BoundaryCondition, SolverError

    condition = BoundaryCondition("air_part", "dirichlet", value=100.0)
    solver = _solver(column_mesh(2, 2e-3), [condition])
    condition.value = None

    with pytest.raises(SolverError, match=r"air_part: dirichlet condition has no value \(step 1"):
        solver.advance(0.1)


@pytest.mark.unit
def test_full_model_without_bed_material_raises_solver_error():
    """Test region materials on a block that skipped validation.

    Assumptions:
    - model_copy(update=...) bypasses the check that HF names a bed material
    """
    from tests.fixtures.configs import small_document
    from vdatherm.contract import parse_config
    from vdatherm.solver import SolverError
    from vdatherm.solver.fields import region_materials

    config = parse_config(small_document("HF"))
    broken = config.model_copy(update={"regions": config.regions.model_copy(update={"bed": None})})

    with pytest.raises(SolverError, match="bed material"):
        region_materials(broken)


@pytest.mark.unit
def test_solve_step_rejects_non_positive_diagonal():
    from vdatherm.solver import LinearSystem, SolverError, SolverOptions, solve_step

    system = LinearSystem(sp.csr_matrix(-np.eye(2)), np.ones(2), np.ones(2), np.zeros(2), 1.0)

    with pytest.raises(SolverError, match="positive definite"):
        solve_step(system, SolverOptions())


@pytest.mark.unit
def test_solve_step_eliminates_dirichlet_dofs():
    from vdatherm.solver import LinearSystem, SolverOptions, solve_step

    matrix = sp.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    system = LinearSystem(
        matrix, np.array([0.0, 1.0]), np.ones(2), np.zeros(2), 1.0,
        dirichlet_dofs=np.array([0]), dirichlet_values=np.array([3.0]),
    )

    for method in ("cg", "direct"):
        solution = solve_step(system, SolverOptions(linear_solver=method, cg_rtol=1e-14))
        np.testing.assert_allclose(solution.x, [3.0, 2.0], rtol=1e-12)


@pytest.mark.unit
def test_picard_reports_non_convergence():
    from vdatherm.solver import LinearSystem, SolverError, SolverOptions, picard_iterate

    def drifting(x):
        return LinearSystem(sp.csr_matrix(np.eye(2)), x + 1.0, np.ones(2), np.zeros(2), 1.0)

    options = SolverOptions(linear_solver="direct", picard_max_iterations=3)
    with pytest.raises(SolverError, match="did not converge in 3"):
        picard_iterate(drifting, np.zeros(2), options)

    result = picard_iterate(drifting, np.zeros(2), options, nonlinear=False)
    assert result.iterations == 1
