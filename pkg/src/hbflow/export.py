"""Plain-file output: legacy VTK, a small mesh text format, history CSV.

All writers format numbers with repr-stable format codes so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import Mesh, make_mesh
from .solver import IterationRecord

CSV_HEADER = "it,rel_residual,J,alpha,ls_iters"


def write_vtk(
    path,
    mesh: Mesh,
    point_data: dict[str, np.ndarray] | None = None,
    cell_data: dict[str, np.ndarray] | None = None,
) -> None:
    """Legacy ASCII VTK unstructured grid with scalar fields.

    Integer-typed arrays are written as int scalars, everything else as
    double.
    """
    lines = [
        "# vtk DataFile Version 3.0",
        "hbflow solution",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.num_vertices} double",
    ]
    for x, y in mesh.vertices:
        lines.append(f"{x:.12g} {y:.12g} 0")
    lines.append(f"CELLS {mesh.num_triangles} {4 * mesh.num_triangles}")
    for a, b, c in mesh.triangles:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {mesh.num_triangles}")
    lines.extend(["5"] * mesh.num_triangles)

    def scalar_block(name: str, values: np.ndarray) -> list[str]:
        values = np.asarray(values)
        if np.issubdtype(values.dtype, np.integer) or values.dtype == bool:
            out = [f"SCALARS {name} int 1", "LOOKUP_TABLE default"]
            out.extend(str(int(v)) for v in values)
        else:
            out = [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            out.extend(f"{v:.12g}" for v in values)
        return out

    if point_data:
        lines.append(f"POINT_DATA {mesh.num_vertices}")
        for name, values in point_data.items():
            if len(values) != mesh.num_vertices:
                raise ValueError(f"point field {name!r} has length {len(values)}")
            lines.extend(scalar_block(name, values))
    if cell_data:
        lines.append(f"CELL_DATA {mesh.num_triangles}")
        for name, values in cell_data.items():
            if len(values) != mesh.num_triangles:
                raise ValueError(f"cell field {name!r} has length {len(values)}")
            lines.extend(scalar_block(name, values))
    Path(path).write_text("\n".join(lines) + "\n")


def write_mesh_text(path, mesh: Mesh) -> None:
    """Counts line, then "x y boundary_flag" per vertex, then "i j k" per triangle."""
    lines = [f"{mesh.num_vertices} {mesh.num_triangles}"]
    for (x, y), b in zip(mesh.vertices, mesh.boundary_vertex):
        # repr of a builtin float is the shortest exact round-trip form;
        # numpy scalars would render as np.float64(...)
        lines.append(f"{float(x)!r} {float(y)!r} {int(b)}")
    for a, b, c in mesh.triangles:
        lines.append(f"{a} {b} {c}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh_text(path) -> Mesh:
    """Inverse of :func:`write_mesh_text`; boundary flags are recomputed
    from the connectivity and checked against the stored ones."""
    tokens = Path(path).read_text().split("\n")
    nv, nt = map(int, tokens[0].split())
    verts = np.empty((nv, 2))
    flags = np.empty(nv, dtype=bool)
    for i in range(nv):
        x, y, b = tokens[1 + i].split()
        verts[i] = (float(x), float(y))
        flags[i] = bool(int(b))
    tris = np.empty((nt, 3), dtype=np.int64)
    for k in range(nt):
        tris[k] = tuple(map(int, tokens[1 + nv + k].split()))
    mesh = make_mesh(verts, tris)
    if not np.array_equal(mesh.boundary_vertex, flags):
        raise ValueError(f"stored boundary flags disagree with connectivity in {path}")
    return mesh


def write_history_csv(path, history: list[IterationRecord]) -> None:
    """Convergence table with the fixed header it,rel_residual,J,alpha,ls_iters."""
    lines = [CSV_HEADER]
    for rec in history:
        lines.append(
            f"{rec.k},{rec.rel_residual:.10e},{rec.objective:.10e},"
            f"{rec.alpha:.10e},{rec.ls_iters}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
