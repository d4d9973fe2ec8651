import io
import os

import numpy as np
import pytest

from ksdg import (CSV_HEADER, ModelParams, build_structured_mesh,
                  project_p0_to_p1_lumped, read_diagnostics_csv, simulate,
                  write_diagnostics_csv, write_vtk_snapshot)


def small_run_rows(n_steps=5):
    mesh = build_structured_mesh("mesh2", 2)
    xs, ys = mesh.barycenters[:, 0], mesh.barycenters[:, 1]
    u0 = 10.0 * np.exp(-4.0 * (xs ** 2 + ys ** 2))
    v0 = 5.0 * np.exp(-2.0 * (mesh.vertices[:, 0] ** 2
                              + mesh.vertices[:, 1] ** 2))
    params = ModelParams(dt=1e-4, t_end=n_steps * 1e-4)
    return mesh, [r for _, r in simulate(mesh, params, u0, v0)]


def parse_vtk(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "# vtk DataFile Version 2.0"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET UNSTRUCTURED_GRID"
    sections = {}
    i = 4
    while i < len(lines):
        tok = lines[i].split()
        if not tok:
            i += 1
            continue
        if tok[0] == "POINTS":
            count = int(tok[1])
            sections["points"] = np.array(
                [[float(x) for x in lines[i + 1 + j].split()]
                 for j in range(count)])
            i += count + 1
        elif tok[0] == "CELLS":
            count = int(tok[1])
            sections["cells"] = np.array(
                [[int(x) for x in lines[i + 1 + j].split()]
                 for j in range(count)])
            i += count + 1
        elif tok[0] == "CELL_TYPES":
            count = int(tok[1])
            sections["cell_types"] = [int(lines[i + 1 + j])
                                      for j in range(count)]
            i += count + 1
        elif tok[0] == "SCALARS":
            name = tok[1]
            count = (len(sections["points"]) if "CELL_DATA" not in
                     sections else len(sections["cells"]))
            values = [float(lines[i + 2 + j]) for j in range(count)]
            sections[name] = np.array(values)
            i += count + 2
        elif tok[0] in ("POINT_DATA", "CELL_DATA"):
            sections[tok[0]] = int(tok[1])
            i += 1
        else:
            i += 1
    return sections


class TestCsv:
    def test_header_is_fixed(self):
        assert CSV_HEADER == ("step,time,mass,min_u,max_u,min_v,max_v,E,"
                              "E_eps,energy_law_lhs,newton_iters,"
                              "newton_residual")

    def test_roundtrip_bit_exact(self):
        _, rows = small_run_rows()
        buf = io.StringIO()
        write_diagnostics_csv(rows, buf)
        text = buf.getvalue()
        assert text.splitlines()[0] == CSV_HEADER
        back = read_diagnostics_csv(io.StringIO(text))
        assert len(back) == len(rows)
        for a, b in zip(rows, back):
            assert a.step == b.step
            for name in ("time", "mass", "min_u", "max_u", "min_v", "max_v",
                         "E", "E_eps", "energy_law_lhs", "newton_residual"):
                assert getattr(a, name) == getattr(b, name)
            assert a.newton_iters == b.newton_iters
        # rewriting the reloaded rows reproduces the bytes
        buf2 = io.StringIO()
        write_diagnostics_csv(back, buf2)
        assert buf2.getvalue() == text

    def test_writes_to_path(self, tmp_path):
        _, rows = small_run_rows(2)
        path = tmp_path / "diag.csv"
        write_diagnostics_csv(rows, path)
        assert read_diagnostics_csv(path)[0].step == 0

    def test_reader_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="header"):
            read_diagnostics_csv(path)

    def test_matches_golden_file(self, tmp_path):
        # frozen 10-step trajectory; any formatting or scheme drift shows
        # up as a diff against the committed file
        mesh, rows = small_run_rows(10)
        path = tmp_path / "got.csv"
        write_diagnostics_csv(rows, path)
        golden = os.path.join(os.path.dirname(__file__), "data",
                              "golden_10step.csv")
        assert path.read_text() == open(golden).read()


class TestVtk:
    def test_crisscross_snapshot_well_formed(self, tmp_path):
        mesh = build_structured_mesh("mesh2", 1, (0, 1, 0, 1))
        u = np.array([1.0, 2.0, 3.0, 4.0])
        v = np.linspace(0.0, 1.0, 5)
        path = tmp_path / "snap.vtk"
        write_vtk_snapshot(mesh, u, v, path)
        sections = parse_vtk(path)
        assert len(sections["points"]) == 5
        assert len(sections["cells"]) == 4
        assert sections["cell_types"] == [5] * 4
        assert np.all(sections["cells"][:, 0] == 3)
        assert np.allclose(sections["points"][:, 2], 0.0)

    def test_field_values_roundtrip(self, tmp_path):
        mesh = build_structured_mesh("mesh1", 2, (0, 1, 0, 1))
        u = np.arange(1.0, mesh.n_cells + 1)
        v = np.arange(0.0, mesh.n_vertices) / 7.0
        path = tmp_path / "snap.vtk"
        write_vtk_snapshot(mesh, u, v, path)
        sections = parse_vtk(path)
        assert np.array_equal(sections["u_p0"], u)
        assert np.array_equal(sections["v"], v)
        assert np.array_equal(sections["u_p1"],
                              project_p0_to_p1_lumped(mesh, u))

    def test_constant_fields_roundtrip(self, tmp_path):
        mesh = build_structured_mesh("mesh2", 2, (0, 1, 0, 1))
        u = np.full(mesh.n_cells, 3.25)
        v = np.full(mesh.n_vertices, -1.5)
        path = tmp_path / "snap.vtk"
        write_vtk_snapshot(mesh, u, v, path)
        sections = parse_vtk(path)
        assert np.all(sections["u_p0"] == 3.25)
        assert np.all(sections["u_p1"] == pytest.approx(3.25, abs=1e-14))
        assert np.all(sections["v"] == -1.5)

    def test_initial_bulge_peaks_at_center(self, tmp_path):
        mesh = build_structured_mesh("mesh1", 16)
        xs, ys = mesh.barycenters[:, 0], mesh.barycenters[:, 1]
        u = 1000.0 * np.exp(-100.0 * (xs ** 2 + ys ** 2))
        v = np.zeros(mesh.n_vertices)
        path = tmp_path / "snap.vtk"
        write_vtk_snapshot(mesh, u, v, path)
        sections = parse_vtk(path)
        peak = np.argmax(sections["u_p1"])
        assert np.linalg.norm(sections["points"][peak, :2]) < 0.05

    def test_shape_mismatch_rejected(self, tmp_path):
        mesh = build_structured_mesh("mesh2", 1, (0, 1, 0, 1))
        with pytest.raises(ValueError, match="shape"):
            write_vtk_snapshot(mesh, np.zeros(3), np.zeros(5),
                               tmp_path / "x.vtk")
