import itertools

import numpy as np
import pytest
from scipy.optimize import bisect

from digitwin.structural import (
    DamageScenario,
    DomainError,
    ModelLibrary,
    PlateConfig,
    PlateModel,
    SensorLayout,
    calibrate_reference_weight,
    predict_strain,
    solve_plate,
)
from digitwin.structural.parallel import map_ordered

__all__ = (
    "TestCalibration",
    "TestElement",
    "TestPlateModel",
)

PRISTINE = DamageScenario(0.0, 0.0)


class TestElement:
    def test_stiffness_is_symmetric(self, plate: PlateModel):
        ke = plate.element_stiffness

        np.testing.assert_allclose(ke, ke.T, rtol=1e-12, atol=1e-6)

    def test_rigid_translations_carry_no_force(self, plate: PlateModel):
        ke = plate.element_stiffness
        scale = np.abs(ke).max()

        for dof in (0, 1):
            translation = np.zeros(8)
            translation[dof::2] = 1.0
            assert np.abs(ke @ translation).max() < 1e-9 * scale

    def test_region_element_counts(self, plate: PlateModel):
        assert [int(mask.sum()) for mask in plate.region_masks] == [30, 18]

    def test_damage_scales_region_elements(self, plate: PlateModel):
        factors = plate.element_factors(DamageScenario(40.0, 80.0))

        assert set(np.round(factors[plate.region_masks[0]], 12)) == {0.6}
        assert set(np.round(factors[plate.region_masks[1]], 12)) == {0.2}
        outside = ~(plate.region_masks[0] | plate.region_masks[1])
        assert set(factors[outside]) == {1.0}


class TestPlateModel:
    def test_unit_load_sums_to_one_on_mid_chord(self, plate: PlateModel):
        f = plate.unit_load_vector

        assert f.sum() == pytest.approx(1.0, rel=1e-12)
        assert np.all(f[1::2] == 0.0)
        loaded_nodes = np.flatnonzero(f[::2])
        assert {int(n) % (plate.config.n_chord + 1) for n in loaded_nodes} == {6}

    def test_root_is_clamped(self, plate: PlateModel):
        u = solve_plate(plate, PRISTINE, plate.load_case(3.0))
        root = 2 * (plate.config.n_chord + 1)

        assert np.all(u[:root] == 0.0)
        assert np.abs(u).max() > 0.0

    def test_bending_signs(self, plate: PlateModel, installed: SensorLayout):
        field = predict_strain(plate, PRISTINE, plate.load_case(3.0), installed)

        assert np.all(field.select(range(1, 13)) < 0.0)
        assert np.all(field.select(range(13, 25)) > 0.0)

    def test_strain_is_linear_in_load(self, plate: PlateModel, installed: SensorLayout):
        scenario = DamageScenario(40.0, 20.0)
        at_3g = plate.predict_strain(scenario, plate.load_case(3.0), installed).microstrain
        at_2g = plate.predict_strain(scenario, plate.load_case(2.0), installed).microstrain

        np.testing.assert_allclose(at_3g / 3.0, at_2g / 2.0, rtol=1e-12)

    def test_damage_softens_the_plate(self, plate: PlateModel):
        load = plate.load_case(3.0)
        energies = [plate.strain_energy(DamageScenario(mu, 0.0), load) for mu in (0.0, 40.0, 80.0)]

        assert energies[0] < energies[1] < energies[2]

    def test_library_fields_are_pairwise_distinct(
        self, plate: PlateModel, library: ModelLibrary, installed: SensorLayout
    ):
        load = plate.load_case(3.0)
        fields = [plate.predict_strain(s, load, installed).select(installed.usable_ids) for s in library]

        for a, b in itertools.combinations(fields, 2):
            assert np.abs(a - b).max() > 1e-6

    def test_shared_gauges_read_the_same_in_every_layout(
        self, plate: PlateModel, installed: SensorLayout, candidate: SensorLayout
    ):
        scenario = DamageScenario(60.0, 20.0)
        load = plate.load_case(3.0)
        ids = installed.usable_ids

        np.testing.assert_array_equal(
            plate.predict_strain(scenario, load, installed).select(ids),
            plate.predict_strain(scenario, load, candidate).select(ids),
        )

    def test_full_reduction_is_a_domain_error(self, plate: PlateModel, installed: SensorLayout):
        with pytest.raises(DomainError):
            plate.predict_strain(DamageScenario(100.0, 0.0), plate.load_case(3.0), installed)

    def test_concurrent_solves_match_sequential(self, library: ModelLibrary, installed: SensorLayout):
        model = PlateModel()
        load = model.load_case(3.0)
        scenarios = list(library)[:8]

        threaded = map_ordered(lambda s: model.predict_strain(s, load, installed).microstrain, scenarios, 4)
        sequential = [PlateModel().predict_strain(s, load, installed).microstrain for s in scenarios]

        for a, b in zip(threaded, sequential, strict=True):
            np.testing.assert_array_equal(a, b)


class TestCalibration:
    def test_peak_strain_hits_target(self, installed: SensorLayout):
        weight = calibrate_reference_weight(PlateModel(), target_microstrain=1000.0, load_factor=3.0)
        calibrated = PlateModel(PlateConfig(reference_weight=weight))

        field = calibrated.predict_strain(PRISTINE, calibrated.load_case(3.0), installed)

        assert np.abs(field.select(installed.usable_ids)).max() == pytest.approx(1000.0, rel=1e-9)

    def test_shipped_weight_is_in_range(self, plate: PlateModel, installed: SensorLayout):
        field = plate.predict_strain(PRISTINE, plate.load_case(3.0), installed)
        peak = np.abs(field.select(installed.usable_ids)).max()

        assert 250.0 < peak < 4000.0

    def test_ratio_agrees_with_bisection(self, installed: SensorLayout):
        def excess(weight: float) -> float:
            model = PlateModel(PlateConfig(reference_weight=weight))
            field = model.predict_strain(PRISTINE, model.load_case(3.0), installed)
            return float(np.abs(field.select(installed.usable_ids)).max()) - 1000.0

        bisected = bisect(excess, 1000.0, 50000.0, xtol=1e-6)

        assert calibrate_reference_weight(PlateModel(), 1000.0, 3.0) == pytest.approx(bisected, rel=1e-8)
