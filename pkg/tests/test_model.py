import dataclasses

import pytest

import chipcost as cc
from chipcost.model import (validate_assembly_process, validate_io,
                            validate_layer, validate_library,
                            validate_test_process, validate_wafer_process)

IO = cc.IODefinition(name="io", tx_area=0.1, rx_area=0.2, bandwidth=8.0,
                     reach=1.0, wires_per_instance=4, energy_per_bit=0.5)
LAYER = cc.LayerDef(name="m", cost_per_mm2=0.1, defect_density=0.01,
                    clustering_factor=2.0, critical_area_fraction=0.5,
                    litho_fraction=0.2, mask_cost=1e6)
WAFER = cc.WaferProcessDef(name="w", wafer_diameter=300.0, edge_exclusion=3.0,
                           scribe_x=0.1, scribe_y=0.1, reticle_x=33.0,
                           reticle_y=26.0)
ASM = cc.AssemblyProcessDef(name="a", pick_place_time=10.0,
                            pick_place_group=1, pick_place_rate=0.01,
                            bond_time=20.0, bond_group=1, bond_rate=0.01,
                            material_cost_per_mm2=0.001, die_separation=0.1,
                            edge_exclusion=0.5, bonding_pitch=0.1,
                            max_current_density=250.0, bond_yield=0.999,
                            alignment_yield=0.999)
TEST = cc.TestProcessDef(name="t", cost_per_second=0.1, patterns=1000,
                         scan_chain_length=100, clock_period=1e-8,
                         fault_coverage=0.9)


def lib():
    return cc.Library(ios={"io": IO}, layers={"m": LAYER},
                      wafer_processes={"w": WAFER},
                      assembly_processes={"a": ASM},
                      test_processes={"t": TEST})


def chip(**kw):
    base = dict(name="die", core_area=10.0, core_power=1.0, core_voltage=1.0,
                quantity=1000, layers=("m",), wafer_process="w",
                test_self="t", assembly_process="a")
    base.update(kw)
    return cc.ChipSpec(**base)


def test_valid_system_passes():
    sys_ = cc.validate_system(chip(), (), lib())
    assert sys_.root.name == "die"


class TestLibraryValidators:
    def test_bidirectional_io_needs_symmetric_areas(self):
        with pytest.raises(cc.ValidationError, match="tx_area == rx_area"):
            validate_io(dataclasses.replace(IO, bidirectional=True))
        validate_io(dataclasses.replace(IO, rx_area=0.1, bidirectional=True))

    def test_io_bandwidth_positive(self):
        with pytest.raises(cc.ValidationError, match="bandwidth"):
            validate_io(dataclasses.replace(IO, bandwidth=0.0))

    def test_io_reach_positive(self):
        with pytest.raises(cc.ValidationError, match="reach"):
            validate_io(dataclasses.replace(IO, reach=0.0))

    def test_layer_clustering_positive(self):
        with pytest.raises(cc.ValidationError, match="clustering_factor"):
            validate_layer(dataclasses.replace(LAYER, clustering_factor=0.0))

    def test_layer_critical_area_fraction_bounded(self):
        with pytest.raises(cc.ValidationError, match="critical_area_fraction"):
            validate_layer(dataclasses.replace(LAYER,
                                               critical_area_fraction=1.5))

    def test_layer_stitch_yield_open_at_zero(self):
        with pytest.raises(cc.ValidationError, match="stitch_yield"):
            validate_layer(dataclasses.replace(LAYER, stitch_yield=0.0))

    def test_wafer_exclusion_must_leave_usable_area(self):
        with pytest.raises(cc.ValidationError, match="whole wafer"):
            validate_wafer_process(dataclasses.replace(WAFER,
                                                       edge_exclusion=150.0))

    def test_wafer_dicing_values(self):
        with pytest.raises(cc.ValidationError, match="dicing"):
            validate_wafer_process(dataclasses.replace(WAFER, dicing="laser"))
        validate_wafer_process(dataclasses.replace(WAFER, dicing="free"))

    def test_assembly_groups_at_least_one(self):
        with pytest.raises(cc.ValidationError, match="group"):
            validate_assembly_process(dataclasses.replace(ASM, bond_group=0))

    def test_assembly_bonding_pitch_positive(self):
        with pytest.raises(cc.ValidationError, match="bonding_pitch"):
            validate_assembly_process(dataclasses.replace(ASM,
                                                          bonding_pitch=0.0))

    def test_test_coverage_bounded(self):
        with pytest.raises(cc.ValidationError, match="fault_coverage"):
            validate_test_process(dataclasses.replace(TEST,
                                                      fault_coverage=1.1))

    def test_validate_library_walks_all_tables(self):
        bad = cc.Library(ios={}, layers={"m": dataclasses.replace(
            LAYER, cost_per_mm2=-1.0)}, wafer_processes={},
            assembly_processes={}, test_processes={})
        with pytest.raises(cc.ValidationError, match="cost_per_mm2"):
            validate_library(bad)


class TestChipValidation:
    def test_fractions_must_sum_to_one(self):
        bad = chip(logic_fraction=0.5, memory_fraction=0.2,
                   analog_fraction=0.2)
        with pytest.raises(cc.ValidationError, match="sum to 1"):
            cc.validate_system(bad, (), lib())

    def test_unknown_layer(self):
        with pytest.raises(cc.ValidationError, match="unknown layer"):
            cc.validate_system(chip(layers=("nope",)), (), lib())

    def test_layers_required(self):
        with pytest.raises(cc.ValidationError, match="at least one layer"):
            cc.validate_system(chip(layers=()), (), lib())

    def test_unknown_wafer_process(self):
        with pytest.raises(cc.ValidationError, match="unknown wafer"):
            cc.validate_system(chip(wafer_process="x"), (), lib())

    def test_root_requires_assembly_process(self):
        with pytest.raises(cc.ValidationError, match="assembly_process"):
            cc.validate_system(chip(assembly_process=None), (), lib())

    def test_parent_requires_test_assembly(self):
        inner = chip(name="inner", assembly_process=None)
        parent = chip(children=(inner,))
        with pytest.raises(cc.ValidationError, match="test_assembly"):
            cc.validate_system(parent, (), lib())

    def test_leaf_needs_no_assembly_process(self):
        inner = chip(name="inner", assembly_process=None)
        parent = chip(children=(inner,), test_assembly="t")
        cc.validate_system(parent, (), lib())

    def test_duplicate_chip_names_rejected(self):
        inner = chip(name="die", assembly_process=None)
        parent = chip(children=(inner,), test_assembly="t")
        with pytest.raises(cc.ValidationError, match="more than once"):
            cc.validate_system(parent, (), lib())

    def test_zero_quantity_rejected(self):
        with pytest.raises(cc.ValidationError, match="quantity"):
            cc.validate_system(chip(quantity=0), (), lib())

    def test_black_box_area_positive(self):
        with pytest.raises(cc.ValidationError, match="black_box_area"):
            cc.validate_system(chip(black_box_area=0.0), (), lib())


class TestNetValidation:
    def test_self_loop_rejected(self):
        net = cc.NetSpec(source="die", dest="die", io_type="io", bandwidth=1.0)
        with pytest.raises(cc.ValidationError, match="must differ"):
            cc.validate_system(chip(), (net,), lib())

    def test_unknown_io_type(self):
        net = cc.NetSpec(source="die", dest="x", io_type="nope", bandwidth=1.0)
        with pytest.raises(cc.ValidationError, match="unknown io type"):
            cc.validate_system(chip(), (net,), lib())

    def test_bandwidth_and_count_are_exclusive(self):
        net = cc.NetSpec(source="die", dest="x", io_type="io",
                         bandwidth=1.0, count=2)
        with pytest.raises(cc.ValidationError, match="exactly one"):
            cc.validate_system(chip(), (net,), lib())
        net = cc.NetSpec(source="die", dest="x", io_type="io")
        with pytest.raises(cc.ValidationError, match="exactly one"):
            cc.validate_system(chip(), (net,), lib())

    def test_dangling_net_rejected(self):
        net = cc.NetSpec(source="a", dest="b", io_type="io", bandwidth=1.0)
        with pytest.raises(cc.ValidationError, match="neither endpoint"):
            cc.validate_system(chip(), (net,), lib())

    def test_external_endpoint_allowed(self):
        net = cc.NetSpec(source="die", dest="host", io_type="io",
                         bandwidth=1.0)
        sys_ = cc.validate_system(chip(), (net,), lib())
        assert sys_.nets[0].dest == "host"

    def test_count_must_be_positive(self):
        net = cc.NetSpec(source="die", dest="x", io_type="io", count=0)
        with pytest.raises(cc.ValidationError, match="count"):
            cc.validate_system(chip(), (net,), lib())

    def test_utilization_bounded(self):
        net = cc.NetSpec(source="die", dest="x", io_type="io",
                         bandwidth=1.0, utilization=1.5)
        with pytest.raises(cc.ValidationError, match="utilization"):
            cc.validate_system(chip(), (net,), lib())
