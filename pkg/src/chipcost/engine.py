"""Cost and yield evaluation over a derived system.

Each node is costed post-order. A die is fabricated, tested, and scrapped
against its tested yield; an assembly stage bonds the tested children onto
the tested parent die, is tested itself, and scrapped against the tested
assembly yield. Quality (truly good parts among test passers) propagates
upward and discounts the assembly true yield, because an escape at one
level only surfaces as a failure at the next.

Impossible configurations (no dies fit the wafer, yield underflows to
zero) produce infinite costs tagged per node, never exceptions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .derive import DerivedChip, DerivedSystem
from .model import (AssemblyProcessDef, LayerDef, Library, TestProcessDef,
                    WaferProcessDef)
from .wafer import dies_per_wafer, reticle_fit

INF = math.inf


def defect_yield(defect_density: float, critical_area: float,
                 clustering_factor: float) -> float:
    """Negative binomial yield; large clustering factors approach Poisson."""
    x = defect_density * critical_area / clustering_factor
    return math.pow(1.0 + x, -clustering_factor)


def litho_multiplier(litho_fraction: float, utilization: float) -> float:
    """Scale the litho share of cost by wasted exposure field."""
    return 1.0 - litho_fraction + litho_fraction / utilization


def layer_cost(layer: LayerDef, area: float, dim_x: float, dim_y: float,
               wp: WaferProcessDef) -> float:
    """One layer's share of the wafer, charged for unusable silicon.

    The effective cost per mm2 spreads the whole usable wafer over the
    dies that actually fit; zero dies per wafer means the die cannot be
    made on this process and the cost is infinite.
    """
    dpw = dies_per_wafer(wp, dim_x, dim_y)
    if dpw <= 0:
        return INF
    r = wp.usable_radius
    effective = layer.cost_per_mm2 * (math.pi * r * r) / (dpw * dim_x * dim_y)
    fit = reticle_fit(area, wp.reticle_x, wp.reticle_y)
    return area * effective * litho_multiplier(layer.litho_fraction,
                                               fit.utilization)


def die_cost(chip: DerivedChip, library: Library) -> float:
    wp = library.wafer_processes[chip.spec.wafer_process]
    total = 0.0
    for layer_name in chip.spec.layers:
        total += layer_cost(library.layers[layer_name], chip.area,
                            chip.dim_x, chip.dim_y, wp)
    return total


def die_yield(chip: DerivedChip, library: Library) -> float:
    """Defect yield over all layers, times stitch yield for dies larger
    than the exposure field. The critical area is the defect-sensitive
    share of the active silicon (core plus IO cells), not pad or stack
    overhead."""
    wp = library.wafer_processes[chip.spec.wafer_process]
    fit = reticle_fit(chip.area, wp.reticle_x, wp.reticle_y)
    y = 1.0
    for layer_name in chip.spec.layers:
        layer = library.layers[layer_name]
        critical = (chip.area_core + chip.area_io) * layer.critical_area_fraction
        y *= defect_yield(layer.defect_density, critical,
                          layer.clustering_factor)
        if fit.k_stitch > 0:
            y *= math.pow(layer.stitch_yield, fit.k_stitch)
    return y


def test_cost(tp: TestProcessDef) -> float:
    return (tp.cost_per_second * tp.patterns * tp.scan_chain_length
            * tp.clock_period)


def tested_yield(fault_coverage: float, true_yield: float) -> float:
    """Share of parts that pass the test: all good ones plus the escapes."""
    return 1.0 - fault_coverage * (1.0 - true_yield)


def quality(true_yield: float, y_tested: float) -> float:
    """Truly good share of the parts that passed."""
    return true_yield / y_tested


def assembly_cost(asm: AssemblyProcessDef, n_dies: int,
                  bonded_area: float) -> float:
    t_pnp = math.ceil(n_dies / asm.pick_place_group) * asm.pick_place_time
    t_bond = math.ceil(n_dies / asm.bond_group) * asm.bond_time
    return (asm.pick_place_rate * t_pnp + asm.bond_rate * t_bond
            + asm.material_cost_per_mm2 * bonded_area)


def assembly_yield(asm: AssemblyProcessDef, n_pins: int, n_dies: int,
                   bonded_area: float) -> float:
    """Every bonded pad, every placement, and the bonded dielectric
    interface must all succeed."""
    y = math.pow(asm.bond_yield, n_pins)
    y *= math.pow(asm.alignment_yield, n_dies)
    y /= 1.0 + asm.dielectric_defect_density * bonded_area
    return y


def nre_cost_self(chip: DerivedChip, library: Library) -> float:
    """Design effort on the core content plus this chip's mask share,
    spread over the units manufactured."""
    spec = chip.spec
    wp = library.wafer_processes[spec.wafer_process]
    fe = spec.core_area * (wp.nre_fe_logic * spec.logic_fraction
                           + wp.nre_fe_memory * spec.memory_fraction
                           + wp.nre_fe_analog * spec.analog_fraction)
    be = spec.core_area * (wp.nre_be_logic * spec.logic_fraction
                           + wp.nre_be_memory * spec.memory_fraction
                           + wp.nre_be_analog * spec.analog_fraction)
    masks = spec.reticle_share * sum(library.layers[name].mask_cost
                                     for name in spec.layers)
    return (fe + be + masks) / spec.quantity


@dataclass(frozen=True)
class NodeCosts:
    """Cost and yield numbers for one chip, children included in the
    recurring figures."""

    name: str
    path: str
    area: float
    power: float
    cost_die: float
    cost_test_self: float
    cost_test_assembly: float
    cost_assembly: float
    cost_re_self: float
    cost_re: float
    cost_nre_self: float
    cost_nre: float
    cost_scrap: float
    yield_die: float
    yield_tested_self: float
    quality_self: float
    yield_assembly: float
    yield_child_quality: float
    yield_tested_assembly: float
    yield_chip: float
    quality_shipped: float
    infeasible: bool
    children: tuple[NodeCosts, ...]


@dataclass(frozen=True)
class CostReport:
    root: NodeCosts
    cost_total: float
    cost_re: float
    cost_nre: float
    breakdown: dict[str, float]
    infeasible: bool
    infeasible_paths: tuple[str, ...]

    @property
    def nodes(self) -> tuple[NodeCosts, ...]:
        out = []

        def visit(n):
            out.append(n)
            for c in n.children:
                visit(c)

        visit(self.root)
        return tuple(out)


def _evaluate_node(chip: DerivedChip, library: Library,
                   path: str) -> NodeCosts:
    spec = chip.spec
    my_path = f"{path}/{spec.name}" if path else spec.name
    children = tuple(_evaluate_node(c, library, my_path)
                     for c in chip.children)

    c_die = die_cost(chip, library)
    y_die = die_yield(chip, library)
    tp_self = library.test_processes[spec.test_self]
    c_test_self = test_cost(tp_self)
    y_tested_self = tested_yield(tp_self.fault_coverage, y_die)
    infeasible = not math.isfinite(c_die) or y_tested_self <= 0.0
    q_self = quality(y_die, y_tested_self) if y_tested_self > 0.0 else 0.0
    c_re_self = ((c_die + c_test_self) / y_tested_self
                 if y_tested_self > 0.0 else INF)
    c_nre_self = nre_cost_self(chip, library)
    c_nre = c_nre_self + sum(c.cost_nre for c in children)

    if children:
        asm = library.assembly_processes[spec.assembly_process]
        tp_asm = library.test_processes[spec.test_assembly]
        n_dies = len(chip.children)
        bonded_area = sum(c.area for c in chip.children)
        n_pins = sum(c.n_bonded_pins for c in chip.children)
        c_asm = assembly_cost(asm, n_dies, bonded_area)
        c_test_asm = test_cost(tp_asm)
        y_asm = assembly_yield(asm, n_pins, n_dies, bonded_area)
        y_child_q = 1.0
        for c in children:
            y_child_q *= c.quality_shipped
        y_true_asm = y_asm * y_child_q
        y_tested_asm = tested_yield(tp_asm.fault_coverage, y_true_asm)
        infeasible = (infeasible or y_tested_asm <= 0.0
                      or any(c.infeasible for c in children))
        upstream = c_asm + c_test_asm + c_re_self + sum(c.cost_re
                                                        for c in children)
        c_re = upstream / y_tested_asm if y_tested_asm > 0.0 else INF
        q_asm = (quality(y_true_asm, y_tested_asm)
                 if y_tested_asm > 0.0 else 0.0)
        q_shipped = q_self * q_asm
        y_chip = y_die * y_asm * y_child_q
        scrap = c_re - (c_die + c_test_self + c_asm + c_test_asm) \
            - sum(c.cost_re for c in children)
    else:
        c_asm = 0.0
        c_test_asm = 0.0
        y_asm = 1.0
        y_child_q = 1.0
        y_tested_asm = 1.0
        c_re = c_re_self
        q_shipped = q_self
        y_chip = y_die
        scrap = c_re - (c_die + c_test_self)

    return NodeCosts(
        name=spec.name, path=my_path, area=chip.area,
        power=chip.power_total,
        cost_die=c_die, cost_test_self=c_test_self,
        cost_test_assembly=c_test_asm, cost_assembly=c_asm,
        cost_re_self=c_re_self, cost_re=c_re,
        cost_nre_self=c_nre_self, cost_nre=c_nre, cost_scrap=scrap,
        yield_die=y_die, yield_tested_self=y_tested_self,
        quality_self=q_self, yield_assembly=y_asm,
        yield_child_quality=y_child_q, yield_tested_assembly=y_tested_asm,
        yield_chip=y_chip, quality_shipped=q_shipped,
        infeasible=infeasible, children=children)


def evaluate(ds: DerivedSystem) -> CostReport:
    """Roll the whole tree up into a report with a category breakdown."""
    root = _evaluate_node(ds.root, ds.system.library, "")
    silicon = 0.0
    assembly = 0.0
    test = 0.0
    scrap = 0.0
    bad_paths = []

    def visit(n: NodeCosts):
        nonlocal silicon, assembly, test, scrap
        silicon += n.cost_die
        assembly += n.cost_assembly
        test += n.cost_test_self + n.cost_test_assembly
        scrap += n.cost_scrap
        if n.infeasible and not any(c.infeasible for c in n.children):
            bad_paths.append(n.path)
        for c in n.children:
            visit(c)

    visit(root)
    total = root.cost_re + root.cost_nre
    breakdown = {
        "silicon": silicon,
        "assembly": assembly,
        "test": test,
        "scrap": scrap,
        "nre": root.cost_nre,
    }
    return CostReport(root=root, cost_total=total, cost_re=root.cost_re,
                      cost_nre=root.cost_nre, breakdown=breakdown,
                      infeasible=root.infeasible,
                      infeasible_paths=tuple(sorted(bad_paths)))
