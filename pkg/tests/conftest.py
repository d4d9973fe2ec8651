import numpy as np
import pytest

from ksdg import TriMesh, build_structured_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def two_cell_mesh():
    """Unit square split by its diagonal: one interior edge of length
    sqrt(2), barycenter distance sqrt(2)/3, cells K=0 and L=1."""
    vertices = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    triangles = [(0, 1, 2), (0, 2, 3)]
    return TriMesh(vertices, triangles)


@pytest.fixture
def unit_square_mesh1():
    return build_structured_mesh("mesh1", 4, (0.0, 1.0, 0.0, 1.0))


@pytest.fixture
def unit_square_mesh2():
    return build_structured_mesh("mesh2", 3, (0.0, 1.0, 0.0, 1.0))


def flip_edges(mesh, which):
    """Copy a mesh with the (K, L) labels of selected edges swapped.

    The upwind form and the density residual must not change under
    relabeling an edge with its normal negated; tests use this helper to
    check that.
    """
    import copy

    flipped = copy.copy(mesh)
    ec = mesh.edge_cells.copy()
    en = mesh.edge_normals.copy()
    ec[which] = ec[which][:, ::-1]
    en[which] = -en[which]
    flipped.edge_cells = ec
    flipped.edge_normals = en
    return flipped
