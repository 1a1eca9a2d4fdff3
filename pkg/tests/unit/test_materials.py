# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Unit tests for temperature-dependent material properties.

Assumptions:
- Tables interpolate linearly and clamp at both ends
- Powder properties derive from the bulk tables plus porosity, particle
  diameter and gas conductivity (or an explicit table)
"""
import numpy as np
import pytest

from tests.oracle import powder_conductivity_reference


@pytest.mark.unit
def test_interpolation_is_linear_and_clamped():
    from vdatherm.materials import PropertyTable, interpolate

    table = PropertyTable.from_breakpoints([(20.0, 10.0), (120.0, 20.0), (220.0, 40.0)])

    assert interpolate(table, 70.0) == pytest.approx(15.0)
    assert interpolate(table, 170.0) == pytest.approx(30.0)
    assert interpolate(table, -50.0) == 10.0
    assert interpolate(table, 5000.0) == 40.0
    np.testing.assert_allclose(table(np.array([20.0, 120.0, 220.0])), [10.0, 20.0, 40.0])


@pytest.mark.unit
@pytest.mark.parametrize("temperature,expected", [
    (20.0, 14.2),
    (310.0, 17.6),
    (600.0, 21.0),
    (2000.0, 28.6),
    (-40.0, 14.2),
])
def test_shipped_m300_conductivity_table(temperature, expected):
    """Test the bulk conductivity table of the cube configs.

    Assumptions:
    - 310 degC lies halfway between the 20 and 600 degC breakpoints
    - Above the last breakpoint (1600 degC) the table clamps
    """
    from tests.fixtures.configs import load_example
    from vdatherm.contract.models import MaterialModel
    from vdatherm.materials import interpolate, material_from_model

    block = load_example("cube_vda_pp.json")["materials"]["m300"]
    m300 = material_from_model("m300", MaterialModel.model_validate(block))

    assert interpolate(m300.conductivity_table, temperature) == pytest.approx(expected, rel=1e-12)


@pytest.mark.unit
def test_scalar_in_scalar_out():
    from vdatherm.materials import PropertyTable

    table = PropertyTable.constant(7.5)

    assert isinstance(table(300.0), float)
    assert table(np.zeros((2, 3))).shape == (2, 3)


@pytest.mark.unit
@pytest.mark.parametrize("breakpoints", [
    [],
    [(20.0, 1.0), (20.0, 2.0)],
    [(100.0, 1.0), (20.0, 2.0)],
    [(20.0, 0.0)],
    [(20.0, float("nan"))],
    [(20.0, 1.0, 3.0)],
])
def test_invalid_tables_raise(breakpoints):
    from vdatherm.materials import MaterialError, PropertyTable

    with pytest.raises(MaterialError):
        PropertyTable.from_breakpoints(breakpoints)


@pytest.mark.unit
def test_non_finite_temperature_raises():
    from vdatherm.materials import MaterialError, PropertyTable

    with pytest.raises(MaterialError):
        PropertyTable.constant(1.0)(np.array([20.0, np.inf]))


@pytest.mark.unit
def test_powder_density():
    from vdatherm.materials import MaterialError, powder_density

    assert powder_density(8100.0, 0.46) == pytest.approx(4374.0)
    with pytest.raises(MaterialError):
        powder_density(8100.0, 1.0)


@pytest.mark.unit
def test_radiative_conductivity_at_freezing_point():
    from vdatherm.materials import radiative_conductivity

    expected = 4.0 / 3.0 * 5.67e-8 * 273.15**3 * 4e-5
    assert float(radiative_conductivity(0.0, 4e-5)) == pytest.approx(expected, rel=1e-14)


@pytest.mark.unit
def test_powder_conductivity_matches_term_by_term_reference():
    """Test the mixture rule against a scalar re-derivation on 100 random inputs.

    Assumptions:
    - Agreement to 1e-12 relative
    """
    from vdatherm.materials import powder_conductivity

    rng = np.random.default_rng(11)
    for _ in range(100):
        k_s = rng.uniform(5.0, 40.0)
        k_g = rng.uniform(0.01, 0.1)
        phi = rng.uniform(0.3, 0.7)
        d = rng.uniform(1e-5, 1e-4)
        t = rng.uniform(20.0, 1500.0)

        value = powder_conductivity(k_s, k_g, phi, d, t)

        assert value == pytest.approx(powder_conductivity_reference(k_s, k_g, phi, d, t), rel=1e-12)


@pytest.mark.unit
def test_powder_conductivity_is_far_below_bulk():
    from vdatherm.materials import powder_conductivity

    k = powder_conductivity(14.2, 0.0177, 0.46, 4e-5, 20.0)

    assert 0.01 < k < 1.0


@pytest.mark.unit
@pytest.mark.parametrize("k_solid,k_gas,porosity,diameter", [
    (1.0, 1.0, 0.5, 4e-5),
    (1.0, 2.0, 0.5, 4e-5),
    (10.0, 0.02, 0.0, 4e-5),
    (10.0, 0.02, 0.5, 0.0),
])
def test_powder_conductivity_rejects_invalid_inputs(k_solid, k_gas, porosity, diameter):
    from vdatherm.materials import MaterialError, powder_conductivity

    with pytest.raises(MaterialError):
        powder_conductivity(k_solid, k_gas, porosity, diameter, 100.0)


def _m300(explicit: bool = False):
    from vdatherm.materials import MaterialTable, PowderSpec, PropertyTable

    gas = PropertyTable.from_breakpoints([(20.0, 0.0177), (1000.0, 0.046)])
    powder = PowderSpec(
        0.46, 4e-5,
        gas_conductivity=gas,
        conductivity=PropertyTable.constant(0.25) if explicit else None,
    )
    return MaterialTable(
        name="m300",
        density_table=PropertyTable.constant(8100.0),
        specific_heat_table=PropertyTable.constant(500.0),
        conductivity_table=PropertyTable.from_breakpoints([(20.0, 14.2), (600.0, 21.0)]),
        powder=powder,
    )


@pytest.mark.unit
def test_powder_phase_uses_mixture_rule():
    """Test that the powder phase derives density and conductivity from the bulk.

    Assumptions:
    - Specific heat is unchanged
    - Conductivity follows the mixture rule at the bulk and gas values of T
    """
    from vdatherm.materials import powder_conductivity

    bulk = _m300()
    powder = bulk.as_phase("powder")

    assert powder.density(300.0) == pytest.approx(8100.0 * 0.54)
    assert powder.specific_heat(300.0) == 500.0
    assert powder.capacity(300.0) == pytest.approx(8100.0 * 0.54 * 500.0)
    expected = powder_conductivity(
        bulk.conductivity(300.0), float(np.interp(300.0, [20.0, 1000.0], [0.0177, 0.046])),
        0.46, 4e-5, 300.0,
    )
    assert powder.conductivity(300.0) == pytest.approx(expected, rel=1e-12)
    assert powder.is_temperature_dependent


@pytest.mark.unit
def test_explicit_powder_table_wins():
    powder = _m300(explicit=True).as_phase("powder")

    assert powder.conductivity(800.0) == 0.25
    assert not powder.is_temperature_dependent


@pytest.mark.unit
def test_as_phase_returns_same_object_for_same_phase(steel):
    assert steel.as_phase("bulk") is steel
    assert steel.as_phase("powder").phase == "powder"
    assert steel.phase == "bulk"


@pytest.mark.unit
def test_powder_phase_without_powder_block_raises():
    from vdatherm.materials import MaterialError, MaterialTable, PowderSpec, PropertyTable

    table = MaterialTable("plain", PropertyTable.constant(1.0), PropertyTable.constant(1.0),
                          PropertyTable.constant(1.0))
    with pytest.raises(MaterialError):
        table.as_phase("powder")
    with pytest.raises(MaterialError):
        PowderSpec(0.5, 4e-5)


@pytest.mark.unit
def test_powder_phase_that_lost_its_powder_block_raises(steel):
    from vdatherm.materials import MaterialError

    powder = steel.as_phase("powder")
    object.__setattr__(powder, "powder", None)

    with pytest.raises(MaterialError, match="no powder block"):
        powder.density(20.0)
    with pytest.raises(MaterialError, match="no powder block"):
        powder.conductivity(20.0)


@pytest.mark.unit
def test_material_from_config_block():
    from vdatherm.contract.models import MaterialModel
    from vdatherm.materials import material_from_model

    model = MaterialModel(
        density=[(20.0, 4420.0)],
        specific_heat=[(20.0, 546.0), (1000.0, 750.0)],
        conductivity=[(20.0, 7.0)],
        powder={"porosity": 0.46, "particle_diameter": 4e-5, "conductivity": [(20.0, 0.288)]},
    )
    table = material_from_model("ti64", model)

    assert table.name == "ti64"
    assert table.specific_heat(510.0) == pytest.approx(648.0)
    assert table.as_phase("powder").conductivity(20.0) == 0.288
    assert table.is_temperature_dependent
