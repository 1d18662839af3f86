import csv
import io
import math
import shutil

import pytest

import chipcost as cc
from chipcost.cli import main
from chipcost.errors import ValidationError, XmlError
from chipcost.sweep import (FieldAxis, SplitAxis, apply_field, apply_split,
                            parse_sweep, run_sweep, sweep_columns,
                            sweep_to_csv)
from conftest import config_path, data_path


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def sweep_xml(tmp_path, body, name="sweep.xml"):
    return write(tmp_path / name, f"<sweep>{body}</sweep>")


def rows_of(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


class TestParseSweep:
    def test_values_list(self, tmp_path):
        path = sweep_xml(tmp_path, '<param target="library.layer[m].'
                                   'defect_density" values="0.001, 0.01"/>')
        plan = parse_sweep(path)
        assert plan.axes == (FieldAxis(
            target="library.layer[m].defect_density", values=(0.001, 0.01)),)

    def test_range_is_inclusive(self, tmp_path):
        path = sweep_xml(tmp_path, '<param target="system.chip[x].core_area"'
                                   ' range="1:2:0.5"/>')
        assert parse_sweep(path).axes[0].values == (1.0, 1.5, 2.0)

    def test_empty_values_rejected(self, tmp_path):
        path = sweep_xml(tmp_path, '<param target="library.layer[m].'
                                   'defect_density" values=" , "/>')
        with pytest.raises(ValidationError, match="empty"):
            parse_sweep(path)

    def test_bad_target_rejected(self, tmp_path):
        path = sweep_xml(tmp_path, '<param target="library.nothing[m].x"'
                                   ' values="1"/>')
        with pytest.raises(ValidationError, match="bad target"):
            parse_sweep(path)

    def test_values_and_range_conflict(self, tmp_path):
        path = sweep_xml(tmp_path, '<param target="system.chip[x].core_area"'
                                   ' values="1" range="1:2:1"/>')
        with pytest.raises(ValidationError, match="exactly one"):
            parse_sweep(path)

    def test_split_defaults(self, tmp_path):
        path = sweep_xml(tmp_path, '<split chip="tile" counts="1,4"'
                                   ' side_bandwidth="64" io="mesh_link"/>')
        axis = parse_sweep(path).axes[0]
        assert axis == SplitAxis(chip="tile", counts=(1, 4),
                                 side_bandwidth=64.0, io_type="mesh_link",
                                 external_prefix="edge", utilization=1.0)

    def test_split_counts_must_be_squares(self, tmp_path):
        path = sweep_xml(tmp_path, '<split chip="tile" counts="1,8"'
                                   ' side_bandwidth="64" io="mesh_link"/>')
        with pytest.raises(ValidationError, match="perfect square"):
            parse_sweep(path)

    def test_unknown_element_rejected(self, tmp_path):
        path = sweep_xml(tmp_path, '<plot x="n"/>')
        with pytest.raises(ValidationError, match="unknown sweep element"):
            parse_sweep(path)

    def test_no_axes_rejected(self, tmp_path):
        path = sweep_xml(tmp_path, "")
        with pytest.raises(ValidationError, match="no axes"):
            parse_sweep(path)

    def test_malformed_xml(self, tmp_path):
        path = write(tmp_path / "bad.xml", "<sweep><param</sweep>")
        with pytest.raises(XmlError):
            parse_sweep(path)


class TestApplyField:
    def test_library_replacement_is_a_copy(self, handcheck_library,
                                           handcheck_system):
        lib, root, nets = apply_field(
            handcheck_library, handcheck_system.root, handcheck_system.nets,
            "library.layer[die_metal].defect_density", 0.5)
        assert lib.layers["die_metal"].defect_density == 0.5
        assert handcheck_library.layers["die_metal"].defect_density == 0.001
        assert root is handcheck_system.root

    def test_integer_field_coerced(self, handcheck_library, handcheck_system):
        lib, _, _ = apply_field(
            handcheck_library, handcheck_system.root, handcheck_system.nets,
            "library.test[t_die].patterns", 2e5)
        assert lib.test_processes["t_die"].patterns == 200000

    def test_fractional_integer_rejected(self, handcheck_library,
                                         handcheck_system):
        with pytest.raises(ValidationError, match="integral"):
            apply_field(handcheck_library, handcheck_system.root,
                        handcheck_system.nets,
                        "library.test[t_die].patterns", 2.5)

    def test_non_numeric_field_rejected(self, handcheck_library,
                                        handcheck_system):
        with pytest.raises(ValidationError, match="not numeric"):
            apply_field(handcheck_library, handcheck_system.root,
                        handcheck_system.nets,
                        "library.io[link].bidirectional", 1.0)

    def test_chip_field_by_name(self, handcheck_library, handcheck_system):
        _, root, _ = apply_field(
            handcheck_library, handcheck_system.root, handcheck_system.nets,
            "system.chip[mem].core_area", 64.0)
        mem = next(c for c in root.walk() if c.name == "mem")
        assert mem.core_area == 64.0

    def test_chip_wildcard_hits_all(self, handcheck_library, handcheck_system):
        _, root, _ = apply_field(
            handcheck_library, handcheck_system.root, handcheck_system.nets,
            "system.chip[*].quantity", 5000.0)
        assert all(c.quantity == 5000 for c in root.walk())

    def test_unknown_chip_rejected(self, handcheck_library, handcheck_system):
        with pytest.raises(ValidationError, match="no chip named"):
            apply_field(handcheck_library, handcheck_system.root,
                        handcheck_system.nets,
                        "system.chip[gpu].core_area", 1.0)

    def test_unknown_library_entry_rejected(self, handcheck_library,
                                            handcheck_system):
        with pytest.raises(ValidationError, match="no layer named"):
            apply_field(handcheck_library, handcheck_system.root,
                        handcheck_system.nets,
                        "library.layer[nope].defect_density", 1.0)


class TestApplySplit:
    AXIS = SplitAxis(chip="tile", counts=(1, 4, 9), side_bandwidth=1024.0,
                     io_type="mesh_link", external_prefix="edge",
                     utilization=1.0)

    def split(self, system, n):
        return apply_split(system.library, system.root, system.nets,
                           self.AXIS, n)

    def test_mesh_shares_everything(self, gp_system):
        _, root, nets = self.split(gp_system, 9)
        tiles = [c for c in root.walk() if c.name.startswith("tile_")]
        assert sorted(t.name for t in tiles) == sorted(
            f"tile_{r}_{c}" for r in range(3) for c in range(3))
        template = next(c for c in gp_system.root.walk() if c.name == "tile")
        for t in tiles:
            assert t.core_area == pytest.approx(template.core_area / 9)
            assert t.core_power == pytest.approx(template.core_power / 9)
            assert t.quantity == template.quantity * 9
        # 2*m*(m-1) mesh links + 4*m boundary stubs, all at B/m
        links = [x for x in nets if x.source.startswith("tile_")]
        assert len(links) == 2 * 3 * 2 + 4 * 3
        assert all(x.bandwidth == pytest.approx(1024.0 / 3) for x in links)

    def test_boundary_bandwidth_is_conserved(self, gp_system):
        for n in (1, 4, 9):
            _, _, nets = self.split(gp_system, n)
            external = [x for x in nets if x.dest.startswith("edge_")]
            m = math.isqrt(n)
            assert len(external) == 4 * m
            assert sum(x.bandwidth for x in external) == pytest.approx(4096.0)

    def test_template_nets_replaced(self, gp_system):
        _, _, nets = self.split(gp_system, 4)
        assert not any(x.source == "tile" or x.dest == "tile" for x in nets)

    def test_single_tile_keeps_four_stubs(self, gp_system):
        _, root, nets = self.split(gp_system, 1)
        assert any(c.name == "tile_0_0" for c in root.walk())
        assert len(nets) == 4

    def test_rejects_missing_template(self, handcheck_system):
        with pytest.raises(ValidationError, match="to split"):
            apply_split(handcheck_system.library, handcheck_system.root,
                        handcheck_system.nets, self.AXIS, 4)

    def test_rejects_non_leaf_template(self, handcheck_system):
        axis = SplitAxis(chip="base", counts=(4,), side_bandwidth=1.0,
                         io_type="link", external_prefix="edge",
                         utilization=1.0)
        with pytest.raises(ValidationError, match="leaf"):
            apply_split(handcheck_system.library, handcheck_system.root,
                        handcheck_system.nets, axis, 4)

    def test_rejects_root_template(self, handcheck_library):
        solo = cc.ChipSpec(name="die", core_area=10.0, core_power=0.0,
                           core_voltage=1.0, quantity=1000,
                           layers=("die_metal",), wafer_process="wf300",
                           test_self="t_die", assembly_process="bond25")
        system = cc.validate_system(solo, (), handcheck_library)
        axis = SplitAxis(chip="die", counts=(4,), side_bandwidth=1.0,
                         io_type="link", external_prefix="edge",
                         utilization=1.0)
        with pytest.raises(ValidationError, match="root"):
            apply_split(system.library, system.root, system.nets, axis, 4)

    def test_split_systems_evaluate(self, gp_system):
        lib, root, nets = self.split(gp_system, 4)
        report = cc.evaluate(cc.derive(cc.validate_system(root, nets, lib)))
        assert not report.infeasible
        assert report.cost_total > 0


class TestSweepExecution:
    PLAN_BODY = ('<param target="library.layer[die_metal].defect_density"'
                 ' values="0.001,0.01"/>'
                 '<param target="library.test[t_die].fault_coverage"'
                 ' values="0.5,0.9"/>')

    def plan(self, tmp_path):
        return parse_sweep(sweep_xml(tmp_path, self.PLAN_BODY))

    def test_rows_in_declaration_order(self, tmp_path, handcheck_system):
        rows = run_sweep(handcheck_system, self.plan(tmp_path))
        # first axis is the slow index of the cartesian product
        assert [(r[0], r[1]) for r in rows] == [
            (0.001, 0.5), (0.001, 0.9), (0.01, 0.5), (0.01, 0.9)]

    def test_parallel_equals_serial(self, tmp_path, handcheck_system):
        plan = self.plan(tmp_path)
        assert (run_sweep(handcheck_system, plan, jobs=4)
                == run_sweep(handcheck_system, plan, jobs=1))

    def test_csv_is_byte_deterministic(self, tmp_path, handcheck_system):
        plan = self.plan(tmp_path)
        a = sweep_to_csv(plan, run_sweep(handcheck_system, plan, jobs=1))
        b = sweep_to_csv(plan, run_sweep(handcheck_system, plan, jobs=4))
        assert a == b
        assert a.startswith("# schema: chipcost-sweep-1\n")

    def test_breakdown_sums_per_row(self, tmp_path, handcheck_system):
        plan = self.plan(tmp_path)
        text = sweep_to_csv(plan, run_sweep(handcheck_system, plan))
        for row in rows_of(text):
            parts = (float(row["cost_silicon"]) + float(row["cost_assembly"])
                     + float(row["cost_test"]) + float(row["cost_scrap"])
                     + float(row["cost_nre"]))
            assert parts == pytest.approx(float(row["cost_total"]), rel=1e-6)

    def test_split_column_layout(self, tmp_path):
        path = sweep_xml(tmp_path, '<split chip="tile" counts="1,4"'
                                   ' side_bandwidth="64" io="mesh_link"/>')
        plan = parse_sweep(path)
        cols = sweep_columns(plan)
        assert cols[0] == "split.tile"
        assert cols[1] == "tile.core_area_each"


class TestCli:
    def eval_args(self, out, fmt="json"):
        return ["eval",
                "--library", data_path("handcheck", "library.xml"),
                "--system", data_path("handcheck", "system.xml"),
                "--netlist", data_path("handcheck", "netlist.xml"),
                "--format", fmt, "--out", str(out)]

    def test_eval_json_smoke(self, tmp_path):
        out = tmp_path / "report.json"
        assert main(self.eval_args(out)) == 0
        import json
        doc = json.loads(out.read_text())
        assert doc["cost_total"] > 0
        assert doc["schema_version"] == 1

    def test_eval_csv_smoke(self, tmp_path):
        out = tmp_path / "report.csv"
        assert main(self.eval_args(out, fmt="csv")) == 0
        assert out.read_text().startswith("# schema: chipcost-report-1\n")

    def test_eval_output_is_stable(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(self.eval_args(a))
        main(self.eval_args(b))
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_io_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "netlist.xml"
        src = open(data_path("handcheck", "netlist.xml")).read()
        write(bad, src.replace('io="link"', 'io="absent"', 1))
        code = main(["eval",
                     "--library", data_path("handcheck", "library.xml"),
                     "--system", data_path("handcheck", "system.xml"),
                     "--netlist", str(bad)])
        assert code == 2
        err = capsys.readouterr().err
        assert "absent" in err and "cpu" in err

    def test_infeasible_exits_3_but_writes(self, tmp_path):
        # a defect density big enough to underflow the die yield to zero,
        # and full coverage so the tested yield follows it down
        lib = tmp_path / "library.xml"
        src = open(data_path("handcheck", "library.xml")).read()
        src = src.replace('defect_density="0.001"', 'defect_density="1e300"')
        src = src.replace('fault_coverage="0.9"', 'fault_coverage="1.0"')
        write(lib, src)
        out = tmp_path / "report.json"
        code = main(["eval", "--library", str(lib),
                     "--system", data_path("handcheck", "system.xml"),
                     "--netlist", data_path("handcheck", "netlist.xml"),
                     "--out", str(out)])
        assert code == 3
        import json
        doc = json.loads(out.read_text())
        assert doc["infeasible"] is True

    def test_sweep_bad_target_exits_2(self, tmp_path, capsys):
        sweep = sweep_xml(tmp_path, '<param target="library.layer[nope].'
                                    'defect_density" values="1"/>')
        code = main(["sweep",
                     "--library", data_path("handcheck", "library.xml"),
                     "--system", data_path("handcheck", "system.xml"),
                     "--netlist", data_path("handcheck", "netlist.xml"),
                     "--sweep", sweep])
        assert code == 2
        assert "nope" in capsys.readouterr().err

    def test_sweep_empty_values_exits_2(self, tmp_path, capsys):
        sweep = sweep_xml(tmp_path, '<param target="library.layer[die_metal].'
                                    'defect_density" values=""/>')
        code = main(["sweep",
                     "--library", data_path("handcheck", "library.xml"),
                     "--system", data_path("handcheck", "system.xml"),
                     "--netlist", data_path("handcheck", "netlist.xml"),
                     "--sweep", sweep])
        assert code == 2
        assert "empty" in capsys.readouterr().err


class TestShippedConfigs:
    def gp_args(self, sweep_name, out, jobs=1):
        return ["sweep",
                "--library", config_path("graph_processor", "library.xml"),
                "--system", config_path("graph_processor", "system.xml"),
                "--netlist", config_path("graph_processor", "netlist.xml"),
                "--sweep", config_path("graph_processor", sweep_name),
                "--jobs", str(jobs), "--out", str(out)]

    def test_chiplet_sweep_shape(self, tmp_path):
        out = tmp_path / "chiplets.csv"
        assert main(self.gp_args("chiplet_sweep.xml", out)) == 0
        rows = rows_of(out.read_text())
        assert [int(float(r["split.tile"])) for r in rows] == [
            1, 4, 9, 16, 25, 36, 49, 64]
        for row in rows:
            n = int(float(row["split.tile"]))
            assert float(row["tile.core_area_each"]) == pytest.approx(800.0 / n)
            assert row["infeasible"] == "0"

    def test_jobs_do_not_change_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(self.gp_args("chiplet_sweep.xml", a, jobs=1)) == 0
        assert main(self.gp_args("chiplet_sweep.xml", b, jobs=8)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_coverage_study_parses(self, tmp_path):
        out = tmp_path / "cov.csv"
        code = main([
            "sweep",
            "--library", config_path("coverage_study", "library.xml"),
            "--system", config_path("coverage_study", "system.xml"),
            "--netlist", config_path("coverage_study", "netlist.xml"),
            "--sweep", config_path("coverage_study", "coverage_sweep.xml"),
            "--out", str(out)])
        assert code == 0
        assert len(rows_of(out.read_text())) == 5
