"""Physical derivation: connectivity, power, pads, and area per chip.

The netlist is turned into per-IO-type instance matrices between chips.
Power rolls up the tree, pad counts follow from connectivity plus power
and test needs, and the final area of each chip is the largest of its
core+IO silicon, its stack footprint, and the area its pads demand.
Order matters and is deliberate: power first (it does not depend on
area), then pads, then area. No iteration is needed.

IO cell area lands only on the two terminal chips of a net. A chip that
merely routes a net between descendants accrues bumps for it, not cell
area. Nets whose far endpoint names nothing in the tree are external and
touch only the resolving chip.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError
from .model import (AssemblyProcessDef, ChipSpec, IODefinition, Library,
                    NetSpec, TestProcessDef, ValidatedSystem)

_EPS = 1e-12


@dataclass(frozen=True)
class ResolvedNet:
    """A net with its endpoints resolved and instance count fixed."""

    net: NetSpec
    io: IODefinition
    instances: int
    internal: bool          # both endpoints are chips in the tree
    resolving: str          # for external nets, the endpoint that exists

    @property
    def pads(self) -> int:
        return self.instances * self.io.wires_per_instance

    @property
    def bandwidth_used(self) -> float:
        if self.net.bandwidth is not None:
            return self.net.bandwidth
        return self.net.count * self.io.bandwidth


@dataclass(frozen=True)
class ConnectionMatrices:
    """Per-IO-type instance counts between chips, plus external nets.

    entries[io_name][(src, dst)] sums instances over all nets of that type
    and direction; the diagonal never appears because src == dst is
    rejected at validation.
    """

    entries: dict[str, dict[tuple[str, str], int]]
    resolved: tuple[ResolvedNet, ...]

    def row_sum(self, io_name: str, chip: str) -> int:
        m = self.entries.get(io_name, {})
        return sum(n for (s, _), n in m.items() if s == chip)

    def col_sum(self, io_name: str, chip: str) -> int:
        m = self.entries.get(io_name, {})
        return sum(n for (_, d), n in m.items() if d == chip)


@dataclass(frozen=True)
class DerivedChip:
    """A chip with its physical quantities resolved."""

    spec: ChipSpec
    children: tuple[DerivedChip, ...]
    area_core: float
    area_io: float
    area_stack: float
    area_pads: float
    area: float
    dim_x: float
    dim_y: float
    power_io: float
    power_total: float
    n_signal_pads: int
    n_power_pads: int
    n_test_ios: int
    n_bonded_pins: int      # pads on the face bonded to the parent
    grown_for_pads: bool

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class DerivedSystem:
    system: ValidatedSystem
    matrices: ConnectionMatrices
    root: DerivedChip


def net_instances(net: NetSpec, io: IODefinition) -> int:
    """Instance count: explicit, or enough IO bandwidth for the request."""
    if net.count is not None:
        return net.count
    return int(math.ceil(net.bandwidth / io.bandwidth - _EPS))


def build_matrices(system_names: set[str], nets: tuple[NetSpec, ...],
                   library: Library) -> ConnectionMatrices:
    entries: dict[str, dict[tuple[str, str], int]] = {}
    resolved = []
    for net in nets:
        io = library.ios[net.io_type]
        inst = net_instances(net, io)
        src_in = net.source in system_names
        dst_in = net.dest in system_names
        internal = src_in and dst_in
        if internal:
            m = entries.setdefault(net.io_type, {})
            key = (net.source, net.dest)
            m[key] = m.get(key, 0) + inst
        resolving = net.source if src_in else net.dest
        resolved.append(ResolvedNet(net=net, io=io, instances=inst,
                                    internal=internal, resolving=resolving))
    return ConnectionMatrices(entries=entries, resolved=tuple(resolved))


def io_area(chip_name: str, matrices: ConnectionMatrices,
            library: Library) -> float:
    """Cell area on this chip: tx per matrix row, rx per column, plus the
    resolving side of external nets. A bidirectional cell transmits and
    receives, so both areas land on both endpoints. Routing-only traffic
    adds nothing."""
    area = 0.0
    for io_name, m in matrices.entries.items():
        io = library.ios[io_name]
        for (src, dst), inst in m.items():
            if io.bidirectional:
                if chip_name in (src, dst):
                    area += (io.tx_area + io.rx_area) * inst
            else:
                if src == chip_name:
                    area += io.tx_area * inst
                if dst == chip_name:
                    area += io.rx_area * inst
    for rn in matrices.resolved:
        if not rn.internal and rn.resolving == chip_name:
            if rn.io.bidirectional:
                area += (rn.io.tx_area + rn.io.rx_area) * rn.instances
            elif rn.net.source == chip_name:
                area += rn.io.tx_area * rn.instances
            else:
                area += rn.io.rx_area * rn.instances
    return area


def io_power(chip_name: str, matrices: ConnectionMatrices) -> float:
    """Link power charged at each resolving terminal: pJ/bit times Gbit/s
    times utilization gives mW, converted to W."""
    power = 0.0
    for rn in matrices.resolved:
        at_src = rn.net.source == chip_name
        at_dst = rn.net.dest == chip_name
        if not (at_src or at_dst):
            continue
        if not rn.internal and rn.resolving != chip_name:
            continue
        power += (rn.io.energy_per_bit * rn.bandwidth_used
                  * rn.net.utilization * 1e-3)
    return power


def stack_area(children: tuple[DerivedChip, ...],
               asm: AssemblyProcessDef | None) -> float:
    """Footprint of the placed children: each grows by the die separation
    on both axes, the sum is treated as a square region, and the edge
    exclusion ring wraps around it. Buried dies take no footprint."""
    placed = [c for c in children if not c.spec.buried]
    if not placed:
        return 0.0
    if asm is None:
        raise ValidationError("children present but no assembly process",
                              "stack_area")
    sep = asm.die_separation
    total = 0.0
    for c in placed:
        total += (c.dim_x + sep) * (c.dim_y + sep)
    side = math.sqrt(total) + 2.0 * asm.edge_exclusion
    return side * side


def test_io_count(tp: TestProcessDef) -> int:
    return tp.scan_chains * tp.ios_per_scan_chain + tp.test_io_offset


def power_pad_count(power_total: float, core_voltage: float,
                    asm: AssemblyProcessDef, context: str) -> int:
    """Pads to carry the supply current, doubled for the return path."""
    if power_total <= 0.0:
        return 0
    if core_voltage <= 0.0:
        raise ValidationError(
            "core_voltage must be > 0 on a chip that draws power", context)
    pad_radius = asm.bonding_pitch / 4.0
    per_pad = (core_voltage * asm.max_current_density
               * math.pi * pad_radius * pad_radius)
    return 2 * int(math.ceil(power_total / per_pad))


def _band_area(side: float, width: float) -> float:
    inner = max(0.0, side - 2.0 * width)
    return side * side - inner * inner


def _side_for_band(n_pads: int, width: float, pitch: float) -> float:
    """Smallest square side whose outer band of the given width holds
    n_pads at one pad per pitch^2."""
    need = n_pads * pitch * pitch
    full = math.sqrt(need)
    if full <= 2.0 * width:
        return full
    return (need + 4.0 * width * width) / (4.0 * width)


def _grow(side: float, target: float, pitch: float) -> float:
    """Grow in whole bonding-pitch steps per side until side >= target."""
    if target <= side * (1.0 + _EPS):
        return side
    steps = int(math.ceil((target - side) / pitch - _EPS))
    return side + steps * pitch


@dataclass(frozen=True)
class PadPlan:
    side: float
    n_signal: int
    n_power: int
    n_test: int
    grown: bool

    @property
    def total(self) -> int:
        return self.n_signal + self.n_power + self.n_test


def place_pads(side0: float, signal_by_type: dict[str, int],
               n_power: int, n_test: int, asm: AssemblyProcessDef,
               library: Library, context: str,
               allow_growth: bool = True) -> PadPlan:
    """Fit signal pads in perimeter bands by reach, then power and test
    pads anywhere, growing the die as a square when a stage cannot fit.

    Each IO type gets a band (reach - die_separation) / 2 deep; the types
    place shortest reach first, so earlier bands nest inside later ones
    and the running total must fit each type's own band.
    """
    pitch = asm.bonding_pitch
    side = side0
    grown = False
    order = sorted((name for name, n in signal_by_type.items() if n > 0),
                   key=lambda name: (library.ios[name].reach, name))
    running = 0
    for name in order:
        io = library.ios[name]
        width = (io.reach - asm.die_separation) / 2.0
        if width <= 0.0:
            raise ValidationError(
                f"io '{name}' reach {io.reach} does not clear the die "
                f"separation {asm.die_separation}", context)
        running += signal_by_type[name]
        need = running * pitch * pitch
        if _band_area(side, width) + _EPS < need:
            if not allow_growth:
                continue
            side = _grow(side, _side_for_band(running, width, pitch), pitch)
            grown = True
            while _band_area(side, width) + _EPS < need:
                side += pitch
    n_signal = sum(signal_by_type.values())
    total = n_signal + n_power + n_test
    need = total * pitch * pitch
    if side * side + _EPS < need and allow_growth:
        side = _grow(side, math.sqrt(need), pitch)
        grown = True
    return PadPlan(side=side, n_signal=n_signal, n_power=n_power,
                   n_test=n_test, grown=grown)


def _crossing_pads(subtree_names: frozenset[str],
                   matrices: ConnectionMatrices) -> dict[str, int]:
    """Pads of internal nets that cross the boundary of this subtree,
    by IO type."""
    out: dict[str, int] = {}
    for rn in matrices.resolved:
        if not rn.internal:
            continue
        src_in = rn.net.source in subtree_names
        dst_in = rn.net.dest in subtree_names
        if src_in != dst_in:
            out[rn.net.io_type] = out.get(rn.net.io_type, 0) + rn.pads
    return out


def _external_pads(chip_name: str,
                   matrices: ConnectionMatrices) -> dict[str, int]:
    out: dict[str, int] = {}
    for rn in matrices.resolved:
        if rn.internal or rn.resolving != chip_name:
            continue
        out[rn.net.io_type] = out.get(rn.net.io_type, 0) + rn.pads
    return out


def _merge(*tallies: dict[str, int]) -> dict[str, int]:
    out: dict[str, int] = {}
    for tally in tallies:
        for k, v in tally.items():
            out[k] = out.get(k, 0) + v
    return out


def derive_chip(chip: ChipSpec, matrices: ConnectionMatrices,
                library: Library,
                parent_asm: AssemblyProcessDef | None) -> DerivedChip:
    ctx = f"chip '{chip.name}'"
    own_asm = (library.assembly_processes[chip.assembly_process]
               if chip.assembly_process else None)
    interface_asm = parent_asm if parent_asm is not None else own_asm
    if interface_asm is None:
        raise ValidationError("no assembly process governs this chip's pads",
                              ctx)

    children = tuple(derive_chip(c, matrices, library, own_asm)
                     for c in chip.children)

    p_io = io_power(chip.name, matrices)
    if chip.black_box_power is not None:
        p_total = chip.black_box_power
    else:
        p_total = chip.core_power + sum(c.power_total for c in children) + p_io

    a_core = chip.core_area
    a_io = io_area(chip.name, matrices, library)
    a_stack = stack_area(children, own_asm)

    # pads: own boundary-crossing signals plus each child's bonded face,
    # which together cover both faces of this chip
    own_cross = _crossing_pads(frozenset([chip.name]) | frozenset(
        c.spec.name for d in children for c in d.walk()), matrices)
    child_cross = [_crossing_pads(frozenset(c.spec.name for c in d.walk()),
                                  matrices) for d in children]
    signal_by_type = _merge(own_cross, _external_pads(chip.name, matrices),
                            *child_cross)
    n_power = power_pad_count(p_total, chip.core_voltage, interface_asm, ctx)
    n_test = test_io_count(library.test_processes[chip.test_self])

    base = max(a_core + a_io, a_stack)
    side0 = math.sqrt(base) if base > 0.0 else 0.0
    plan = place_pads(side0, signal_by_type, n_power, n_test, interface_asm,
                      library, ctx,
                      allow_growth=chip.black_box_area is None)

    pitch = interface_asm.bonding_pitch
    a_pads = (plan.side * plan.side if plan.grown
              else plan.total * pitch * pitch)
    if chip.black_box_area is not None:
        area = chip.black_box_area
    else:
        area = max(a_core + a_io, a_stack, a_pads)
    if area <= 0.0:
        raise ValidationError(
            "chip resolves to zero area (no core, stack, or pads)", ctx)
    side = plan.side if (plan.grown and chip.black_box_area is None) \
        else math.sqrt(area)

    for c in children:
        if c.area > area * (1.0 + 1e-9):
            raise ValidationError(
                f"child '{c.spec.name}' area {c.area:.6g} exceeds parent "
                f"area {area:.6g}", ctx)

    own_pads_below = (sum(own_cross.values())
                      + sum(_external_pads(chip.name, matrices).values()))
    return DerivedChip(
        spec=chip, children=children,
        area_core=a_core, area_io=a_io, area_stack=a_stack,
        area_pads=a_pads, area=area, dim_x=side, dim_y=side,
        power_io=p_io, power_total=p_total,
        n_signal_pads=plan.n_signal, n_power_pads=n_power, n_test_ios=n_test,
        n_bonded_pins=own_pads_below + n_power + n_test,
        grown_for_pads=plan.grown)


def derive(system: ValidatedSystem) -> DerivedSystem:
    """Resolve the whole tree bottom-up."""
    names = {c.name for c in system.root.walk()}
    matrices = build_matrices(names, system.nets, system.library)
    root = derive_chip(system.root, matrices, system.library, parent_asm=None)
    return DerivedSystem(system=system, matrices=matrices, root=root)
