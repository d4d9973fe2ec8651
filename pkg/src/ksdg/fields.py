"""Field algebra on triangle meshes.

Two kinds of discrete fields appear throughout the solver, both stored as
plain numpy arrays:

* cell fields: one value per triangle (piecewise constant, discontinuous),
  shape ``(n_cells,)``; used for the cell density and the chemical
  potential;
* vertex fields: one value per vertex (continuous piecewise linear),
  shape ``(n_vertices,)``; used for the chemoattractant concentration.

This module provides the jump and positive/negative-part algebra on
interior edges, the projections between the two spaces, and the exact
integrals the solver and its diagnostics need.
"""

from dataclasses import dataclass

import numpy as np

from .mesh import _resolve_interior_edge


@dataclass(frozen=True)
class ModelParams:
    """Model and discretization parameters.

    ``k0`` cell diffusion, ``k1`` chemotactic sensitivity, ``k2``
    chemoattractant diffusion, ``k3`` degradation, ``k4`` production; all
    strictly positive.  ``tau`` selects the parabolic (1) or elliptic (0)
    chemoattractant equation.  ``eps`` regularizes the logarithm in the
    chemical potential, ``dt`` is the time step and ``t_end`` the final
    time.
    """

    k0: float = 1.0
    k1: float = 1.0
    k2: float = 1.0
    k3: float = 1.0
    k4: float = 1.0
    tau: int = 1
    eps: float = 1e-10
    dt: float = 1e-6
    t_end: float = 1e-4

    def __post_init__(self):
        for name in ("k0", "k1", "k2", "k3", "k4"):
            if not getattr(self, name) > 0.0:
                raise ValueError("%s must be positive, got %r"
                                 % (name, getattr(self, name)))
        if self.tau not in (0, 1):
            raise ValueError("tau must be 0 or 1, got %r" % (self.tau,))
        if not self.eps > 0.0:
            raise ValueError("eps must be positive, got %r" % (self.eps,))
        if not self.dt > 0.0:
            raise ValueError("dt must be positive, got %r" % (self.dt,))
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive, got %r" % (self.t_end,))


def pos_part(x):
    """max(x, 0), elementwise."""
    return np.maximum(x, 0.0)


def neg_part(x):
    """-min(x, 0), elementwise; ``x == pos_part(x) - neg_part(x)``."""
    return np.maximum(-np.asarray(x, dtype=float), 0.0)


def _check_cellfield(mesh, values, name="cell field"):
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_cells,):
        raise ValueError("%s has shape %r, expected (%d,)"
                         % (name, values.shape, mesh.n_cells))
    return values


def _check_nodefield(mesh, values, name="vertex field"):
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_vertices,):
        raise ValueError("%s has shape %r, expected (%d,)"
                         % (name, values.shape, mesh.n_vertices))
    return values


def jump(mesh, values, edge):
    """Jump ``v_K - v_L`` of a cell field across one interior edge.

    ``edge`` is an interior edge index or a vertex pair; boundary edges
    have no two-sided jump and raise ``MeshError``.
    """
    values = _check_cellfield(mesh, values)
    k, l = mesh.edge_cells[_resolve_interior_edge(mesh, edge)]
    return float(values[k] - values[l])


def edge_jumps(mesh, values):
    """Jumps ``v_K - v_L`` over all interior edges at once."""
    values = _check_cellfield(mesh, values)
    return values[mesh.edge_cells[:, 0]] - values[mesh.edge_cells[:, 1]]


def project_p1_to_p0(mesh, values):
    """Cellwise average of a vertex field (its value at the barycenter)."""
    values = _check_nodefield(mesh, values)
    return values[mesh.triangles].mean(axis=1)


def project_p0_to_p1_lumped(mesh, values):
    """Area-weighted vertex average of a cell field.

    Each vertex receives ``sum(|K|/3 * u_K) / sum(|K|/3)`` over incident
    cells, a convex combination: constants and nonnegativity are
    preserved.  Used for visualization output.
    """
    values = _check_cellfield(mesh, values)
    num = np.bincount(mesh.triangles.ravel(),
                      weights=np.repeat(mesh.areas * values / 3.0, 3),
                      minlength=mesh.n_vertices)
    return num / mesh.vertex_areas


def integrate_cellfield(mesh, values):
    """Integral of a cell field over the domain: ``sum(|K| * u_K)``."""
    values = _check_cellfield(mesh, values)
    return float(np.dot(mesh.areas, values))


def _lambda_gradients(mesh):
    """Gradients of the three barycentric basis functions, per triangle.

    Returns an ``(nt, 3, 2)`` array; for counterclockwise triangle
    ``(p0, p1, p2)`` the gradient of the function that is 1 at ``p_a`` is
    the opposite edge rotated by 90 degrees divided by twice the area.
    """
    p = mesh.vertices[mesh.triangles]
    opp = p[:, [2, 0, 1], :] - p[:, [1, 2, 0], :]
    grads = np.empty_like(opp)
    grads[:, :, 0] = -opp[:, :, 1]
    grads[:, :, 1] = opp[:, :, 0]
    grads /= (2.0 * mesh.areas)[:, None, None]
    return grads


def p1_gradients(mesh, values):
    """Constant per-cell gradient of a vertex field, shape ``(nt, 2)``."""
    values = _check_nodefield(mesh, values)
    grads = _lambda_gradients(mesh)
    return np.einsum("ta,tax->tx", values[mesh.triangles], grads)


def p1_integral(mesh, values):
    """Exact integral of a vertex field (vertex quadrature)."""
    values = _check_nodefield(mesh, values)
    return float(np.dot(mesh.vertex_areas, values))


def p1_square_integral(mesh, values, lumped=False):
    """Integral of the square of a vertex field.

    With ``lumped=False`` the exact value for piecewise-linear data,
    ``sum |K|/6 * (v0^2 + v1^2 + v2^2 + v0*v1 + v0*v2 + v1*v2)``; with
    ``lumped=True`` the vertex-quadrature value ``sum w_i * v_i^2`` that
    the mass-lumped products of the scheme induce.
    """
    values = _check_nodefield(mesh, values)
    if lumped:
        return float(np.dot(mesh.vertex_areas, values * values))
    v = values[mesh.triangles]
    s = (v[:, 0] ** 2 + v[:, 1] ** 2 + v[:, 2] ** 2
         + v[:, 0] * v[:, 1] + v[:, 0] * v[:, 2] + v[:, 1] * v[:, 2])
    return float(np.dot(mesh.areas / 6.0, s))
