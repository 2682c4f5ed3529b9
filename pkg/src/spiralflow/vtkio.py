"""Legacy ASCII VTK output for triangle meshes and attached fields.

Writes version-3.0 unstructured-grid files (triangle cell type 5) that
ParaView and meshio both read.  Formatting is fixed (%.17g, LF newlines)
so identical inputs produce byte-identical files.
"""

import numpy as np


def _fmt(x):
    return "%.17g" % float(x)


def _write_attributes(lines, fields, n_expected, kind):
    for name, arr in fields.items():
        arr = np.asarray(arr, dtype=float)
        if arr.shape[0] != n_expected:
            raise ValueError(
                f"{kind} field {name!r} has {arr.shape[0]} entries, "
                f"expected {n_expected}"
            )
        if " " in name:
            raise ValueError(f"VTK field names cannot contain spaces: {name!r}")
        if arr.ndim == 1:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(v) for v in arr)
        elif arr.ndim == 2 and arr.shape[1] == 2:
            lines.append(f"VECTORS {name} double")
            lines.extend(f"{_fmt(v[0])} {_fmt(v[1])} 0" for v in arr)
        else:
            raise ValueError(f"field {name!r} must be scalar or planar vector")


def write_vtk(path, mesh, point_data=None, cell_data=None, title="spiralflow output"):
    """Write mesh plus named point/cell fields as a legacy VTK file."""
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_points} double",
    ]
    lines.extend(f"{_fmt(p[0])} {_fmt(p[1])} 0" for p in mesh.points)
    lines.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}")
    lines.extend(f"3 {t[0]} {t[1]} {t[2]}" for t in mesh.triangles)
    lines.append(f"CELL_TYPES {mesh.n_triangles}")
    lines.extend("5" for _ in range(mesh.n_triangles))
    if point_data:
        lines.append(f"POINT_DATA {mesh.n_points}")
        _write_attributes(lines, point_data, mesh.n_points, "point")
    if cell_data:
        lines.append(f"CELL_DATA {mesh.n_triangles}")
        _write_attributes(lines, cell_data, mesh.n_triangles, "cell")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
