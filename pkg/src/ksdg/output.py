"""Diagnostics CSV and legacy-format VTK snapshot output.

The CSV schema is fixed: the header is exactly ``CSV_HEADER`` and every
value is written with 17 significant digits, so reloading reproduces the
floating-point values bit for bit.

Snapshots use the legacy ASCII VTK unstructured-grid format so files can
be opened by standard viewers and diffed as text.  Points are the mesh
vertices, cells the triangles; the file carries the cell density both as
cell data (``u_p0``, the native representation) and as point data
(``u_p1``, the positivity-preserving lumped vertex average used for
plotting), plus the chemoattractant ``v`` as point data.
"""

import numpy as np

from .fields import project_p0_to_p1_lumped

CSV_HEADER = ("step,time,mass,min_u,max_u,min_v,max_v,E,E_eps,"
              "energy_law_lhs,newton_iters,newton_residual")


def _format_row(row):
    return ",".join((
        "%d" % row.step,
        "%.17g" % row.time,
        "%.17g" % row.mass,
        "%.17g" % row.min_u,
        "%.17g" % row.max_u,
        "%.17g" % row.min_v,
        "%.17g" % row.max_v,
        "%.17g" % row.E,
        "%.17g" % row.E_eps,
        "%.17g" % row.energy_law_lhs,
        "%d" % row.newton_iters,
        "%.17g" % row.newton_residual,
    ))


def write_diagnostics_csv(rows, target):
    """Write diagnostics rows to ``target`` (path or open text file)."""
    if hasattr(target, "write"):
        _write_csv(rows, target)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            _write_csv(rows, fh)


def _write_csv(rows, fh):
    fh.write(CSV_HEADER + "\n")
    for row in rows:
        fh.write(_format_row(row) + "\n")


def read_diagnostics_csv(target):
    """Read a diagnostics CSV back into ``DiagnosticsRow`` objects."""
    from .simulation import DiagnosticsRow

    if hasattr(target, "read"):
        lines = target.read().splitlines()
    else:
        with open(target, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("not a diagnostics CSV (unexpected header)")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 12:
            raise ValueError("malformed diagnostics row: %r" % line)
        rows.append(DiagnosticsRow(
            step=int(parts[0]),
            time=float(parts[1]),
            mass=float(parts[2]),
            min_u=float(parts[3]),
            max_u=float(parts[4]),
            min_v=float(parts[5]),
            max_v=float(parts[6]),
            E=float(parts[7]),
            E_eps=float(parts[8]),
            energy_law_lhs=float(parts[9]),
            newton_iters=int(parts[10]),
            newton_residual=float(parts[11]),
        ))
    return rows


def write_vtk_snapshot(mesh, u, v, path, title="snapshot"):
    """Write one legacy ASCII VTK snapshot of a state.

    ``u`` is a cell field, ``v`` a vertex field.  See the module
    docstring for the arrays carried by the file.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (mesh.n_cells,):
        raise ValueError("u has shape %r, expected (%d,)"
                         % (u.shape, mesh.n_cells))
    if v.shape != (mesh.n_vertices,):
        raise ValueError("v has shape %r, expected (%d,)"
                         % (v.shape, mesh.n_vertices))
    u_p1 = project_p0_to_p1_lumped(mesh, u)

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write("%s\n" % title.replace("\n", " "))
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write("POINTS %d double\n" % mesh.n_vertices)
        for x, y in mesh.vertices:
            fh.write("%.17g %.17g 0\n" % (x, y))
        fh.write("CELLS %d %d\n" % (mesh.n_cells, 4 * mesh.n_cells))
        for a, b, c in mesh.triangles:
            fh.write("3 %d %d %d\n" % (a, b, c))
        fh.write("CELL_TYPES %d\n" % mesh.n_cells)
        fh.write("5\n" * mesh.n_cells)
        fh.write("POINT_DATA %d\n" % mesh.n_vertices)
        fh.write("SCALARS u_p1 double\nLOOKUP_TABLE default\n")
        for value in u_p1:
            fh.write("%.17g\n" % value)
        fh.write("SCALARS v double\nLOOKUP_TABLE default\n")
        for value in v:
            fh.write("%.17g\n" % value)
        fh.write("CELL_DATA %d\n" % mesh.n_cells)
        fh.write("SCALARS u_p0 double\nLOOKUP_TABLE default\n")
        for value in u:
            fh.write("%.17g\n" % value)
