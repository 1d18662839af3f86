"""Parameter sweeps: scalar field axes and the homogeneous split axis.

A sweep is a cartesian product over axes in document order. Every point
rebuilds its own copy of the library and system (the models are frozen
dataclasses), so points evaluate concurrently without shared state and a
parallel run is row-for-row identical to a serial one.

The split axis divides one template chip into an n = m x m mesh of equal
chiplets. Every mesh link and every boundary stub carries the template's
side bandwidth divided by m, which keeps the total bandwidth crossing
the original die boundary constant at any split.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import math
import re
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .derive import derive
from .engine import evaluate
from .errors import ConfigError, ValidationError, XmlError
from .model import ChipSpec, Library, NetSpec, ValidatedSystem, validate_system
from .report import SCHEMA_VERSION, format_value

_LIB_KINDS = {
    "io": "ios",
    "layer": "layers",
    "waferprocess": "wafer_processes",
    "assembly": "assembly_processes",
    "test": "test_processes",
}

_TARGET_RE = re.compile(
    r"^(library)\.(io|layer|waferprocess|assembly|test)\[([^\]]+)\]\.(\w+)$"
    r"|^(system)\.chip\[([^\]]+)\]\.(\w+)$")


@dataclass(frozen=True)
class FieldAxis:
    target: str
    values: tuple[float, ...]

    @property
    def column(self) -> str:
        return self.target

    @property
    def points(self) -> tuple[float, ...]:
        return self.values


@dataclass(frozen=True)
class SplitAxis:
    chip: str
    counts: tuple[int, ...]
    side_bandwidth: float
    io_type: str
    external_prefix: str
    utilization: float

    @property
    def column(self) -> str:
        return f"split.{self.chip}"

    @property
    def points(self) -> tuple[int, ...]:
        return self.counts


@dataclass(frozen=True)
class SweepPlan:
    axes: tuple[FieldAxis | SplitAxis, ...]


def _parse_values(text: str) -> tuple[float, ...]:
    try:
        out = tuple(float(v.strip()) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ValidationError(f"bad values list '{text}': {exc}", "sweep")
    if not out:
        raise ValidationError("values list is empty", "sweep")
    return out


def _parse_range(text: str) -> tuple[float, ...]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"range must be start:stop:step, got '{text}'",
                              "sweep")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ValidationError(f"bad range '{text}': {exc}", "sweep")
    if step <= 0:
        raise ValidationError("range step must be > 0", "sweep")
    out = []
    k = 0
    # slack keeps the stop endpoint inclusive under float accumulation,
    # for negative stops too
    limit = stop + abs(stop) * 1e-12 + 1e-15
    while True:
        v = start + k * step
        if v > limit:
            break
        out.append(v)
        k += 1
    if not out:
        raise ValidationError(f"range '{text}' produces no values", "sweep")
    return tuple(out)


def parse_sweep(path: str) -> SweepPlan:
    try:
        tree = ET.parse(path)
    except ET.ParseError as exc:
        raise XmlError(f"{exc}", path)
    root = tree.getroot()
    if root.tag != "sweep":
        raise ValidationError(f"expected <sweep> root, got <{root.tag}>", path)
    axes: list[FieldAxis | SplitAxis] = []
    for elem in root:
        if elem.tag == "param":
            target = elem.get("target")
            if not target:
                raise ValidationError("<param> needs a target", path)
            if not _TARGET_RE.match(target):
                raise ValidationError(f"bad target '{target}'", path)
            values = elem.get("values")
            range_ = elem.get("range")
            if (values is None) == (range_ is None):
                raise ValidationError(
                    "<param> needs exactly one of values or range", path)
            pts = (_parse_values(values) if values is not None
                   else _parse_range(range_))
            axes.append(FieldAxis(target=target, values=pts))
        elif elem.tag == "split":
            counts = tuple(int(float(v)) for v in
                           elem.get("counts", "").split(",") if v.strip())
            if not counts:
                raise ValidationError("<split> needs counts", path)
            for n in counts:
                m = math.isqrt(n)
                if n < 1 or m * m != n:
                    raise ValidationError(
                        f"split counts must be perfect squares, got {n}", path)
            try:
                axes.append(SplitAxis(
                    chip=elem.attrib["chip"],
                    counts=counts,
                    side_bandwidth=float(elem.attrib["side_bandwidth"]),
                    io_type=elem.attrib["io"],
                    external_prefix=elem.get("external", "edge"),
                    utilization=float(elem.get("utilization", "1.0"))))
            except KeyError as exc:
                raise ValidationError(f"<split> missing attribute {exc}", path)
        else:
            raise ValidationError(f"unknown sweep element <{elem.tag}>", path)
    if not axes:
        raise ValidationError("sweep defines no axes", path)
    return SweepPlan(axes=tuple(axes))


def _replace_in_library(lib: Library, kind: str, name: str, field: str,
                        value: float) -> Library:
    attr = _LIB_KINDS[kind]
    table: dict = getattr(lib, attr)
    if name not in table:
        raise ValidationError(f"no {kind} named '{name}' in the library",
                              "sweep")
    old = table[name]
    if not hasattr(old, field):
        raise ValidationError(f"{kind} '{name}' has no field '{field}'",
                              "sweep")
    current = getattr(old, field)
    if isinstance(current, bool) or isinstance(current, str):
        raise ValidationError(f"field '{field}' is not numeric", "sweep")
    if isinstance(current, int):
        if value != int(value):
            raise ValidationError(
                f"field '{field}' is integral, got {value}", "sweep")
        value = int(value)
    new_table = dict(table)
    new_table[name] = dataclasses.replace(old, **{field: value})
    return dataclasses.replace(lib, **{attr: new_table})


def _replace_in_tree(chip: ChipSpec, name: str, field: str,
                     value: float) -> tuple[ChipSpec, int]:
    hits = 0
    children = []
    for c in chip.children:
        new_c, n = _replace_in_tree(c, name, field, value)
        children.append(new_c)
        hits += n
    chip = dataclasses.replace(chip, children=tuple(children))
    if name == "*" or chip.name == name:
        if not hasattr(chip, field):
            raise ValidationError(f"chip has no field '{field}'", "sweep")
        current = getattr(chip, field)
        if isinstance(current, bool) or isinstance(current, str) \
                or isinstance(current, tuple):
            raise ValidationError(f"field '{field}' is not numeric", "sweep")
        if isinstance(current, int):
            if value != int(value):
                raise ValidationError(
                    f"field '{field}' is integral, got {value}", "sweep")
            value = int(value)
        chip = dataclasses.replace(chip, **{field: value})
        hits += 1
    return chip, hits


def apply_field(lib: Library, root: ChipSpec, nets: tuple[NetSpec, ...],
                target: str, value: float):
    m = _TARGET_RE.match(target)
    if not m:
        raise ValidationError(f"bad target '{target}'", "sweep")
    if m.group(1) == "library":
        lib = _replace_in_library(lib, m.group(2), m.group(3), m.group(4),
                                  value)
    else:
        root, hits = _replace_in_tree(root, m.group(6), m.group(7), value)
        if hits == 0:
            raise ValidationError(
                f"no chip named '{m.group(6)}' in the system", "sweep")
    return lib, root, nets


def apply_split(lib: Library, root: ChipSpec, nets: tuple[NetSpec, ...],
                axis: SplitAxis, n: int):
    """Replace the template chip with an m x m mesh of equal shares."""
    m = math.isqrt(n)
    if m * m != n:
        raise ValidationError(f"split count {n} is not a perfect square",
                              "sweep")

    template = None
    for c in root.walk():
        if c.name == axis.chip:
            template = c
    if template is None:
        raise ValidationError(f"no chip named '{axis.chip}' to split", "sweep")
    if template.children:
        raise ValidationError("the split template must be a leaf chip",
                              "sweep")
    if axis.io_type not in lib.ios:
        raise ValidationError(f"unknown io type '{axis.io_type}'", "sweep")

    def tile_name(r: int, c: int) -> str:
        return f"{axis.chip}_{r}_{c}"

    tiles = tuple(
        dataclasses.replace(
            template,
            name=tile_name(r, c),
            core_area=template.core_area / n,
            core_power=template.core_power / n,
            quantity=template.quantity * n)
        for r in range(m) for c in range(m))

    def rebuild(chip: ChipSpec) -> ChipSpec:
        new_children = []
        for c in chip.children:
            if c.name == axis.chip:
                new_children.extend(tiles)
            else:
                new_children.append(rebuild(c))
        return dataclasses.replace(chip, children=tuple(new_children))

    if root.name == axis.chip:
        raise ValidationError("cannot split the root chip", "sweep")
    new_root = rebuild(root)

    link_bw = axis.side_bandwidth / m
    new_nets = [x for x in nets
                if x.source != axis.chip and x.dest != axis.chip]
    for r in range(m):
        for c in range(m - 1):
            new_nets.append(NetSpec(source=tile_name(r, c),
                                    dest=tile_name(r, c + 1),
                                    io_type=axis.io_type, bandwidth=link_bw,
                                    utilization=axis.utilization))
    for c in range(m):
        for r in range(m - 1):
            new_nets.append(NetSpec(source=tile_name(r, c),
                                    dest=tile_name(r + 1, c),
                                    io_type=axis.io_type, bandwidth=link_bw,
                                    utilization=axis.utilization))
    for i in range(m):
        for side, (r, c) in (("w", (i, 0)), ("e", (i, m - 1)),
                             ("n", (0, i)), ("s", (m - 1, i))):
            new_nets.append(NetSpec(source=tile_name(r, c),
                                    dest=f"{axis.external_prefix}_{side}{i}",
                                    io_type=axis.io_type, bandwidth=link_bw,
                                    utilization=axis.utilization))
    return lib, new_root, tuple(new_nets)


OUTPUT_COLUMNS = ("cost_total", "cost_silicon", "cost_assembly", "cost_test",
                  "cost_scrap", "cost_nre", "yield_chip", "quality_shipped",
                  "area_mm2", "power_w", "infeasible")


def sweep_columns(plan: SweepPlan) -> tuple[str, ...]:
    cols = []
    for axis in plan.axes:
        cols.append(axis.column)
        if isinstance(axis, SplitAxis):
            cols.append(f"{axis.chip}.core_area_each")
    cols.extend(OUTPUT_COLUMNS)
    return tuple(cols)


def _evaluate_point(base: ValidatedSystem, plan: SweepPlan,
                    point: tuple) -> tuple:
    lib, root, nets = base.library, base.root, base.nets
    cells = []
    for axis, value in zip(plan.axes, point):
        if isinstance(axis, FieldAxis):
            lib, root, nets = apply_field(lib, root, nets, axis.target, value)
            cells.append(value)
        else:
            lib, root, nets = apply_split(lib, root, nets, axis, value)
            cells.append(value)
            cells.append(_template_area(base.root, axis.chip) / value)
    system = validate_system(root, nets, lib)
    report = evaluate(derive(system))
    cells.extend([
        report.cost_total,
        report.breakdown["silicon"],
        report.breakdown["assembly"],
        report.breakdown["test"],
        report.breakdown["scrap"],
        report.breakdown["nre"],
        report.root.yield_chip,
        report.root.quality_shipped,
        report.root.area,
        report.root.power,
        report.infeasible,
    ])
    return tuple(cells)


def _template_area(root: ChipSpec, name: str) -> float:
    for c in root.walk():
        if c.name == name:
            return c.core_area
    raise ValidationError(f"no chip named '{name}'", "sweep")


def run_sweep(base: ValidatedSystem, plan: SweepPlan,
              jobs: int = 1) -> list[tuple]:
    """All rows of the cartesian product, in declaration order."""
    points = list(itertools.product(*(axis.points for axis in plan.axes)))
    if jobs <= 1:
        return [_evaluate_point(base, plan, p) for p in points]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda p: _evaluate_point(base, plan, p),
                             points))


def sweep_to_csv(plan: SweepPlan, rows: list[tuple]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: chipcost-sweep-{SCHEMA_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(sweep_columns(plan))
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()
