import numpy as np
import pytest

from ksdg import (ModelParams, TriMesh, assemble_v_system,
                  build_structured_mesh, solve_v_step)


@pytest.fixture
def crisscross_unit():
    return build_structured_mesh("mesh2", 1, (0, 1, 0, 1))


def hand_crisscross_matrices(mesh):
    """Stiffness and lumped mass of the single criss-crossed unit square,
    derived by hand from the barycentric gradients: corner diagonal 1,
    center diagonal 4, corner-center coupling -1, corners uncoupled."""
    center = int(np.argmax(mesh.vertex_areas))
    corners = [i for i in range(5) if i != center]
    s = np.zeros((5, 5))
    ml = np.zeros(5)
    ml[center] = 1.0 / 3.0
    s[center, center] = 4.0
    for c in corners:
        ml[c] = 1.0 / 6.0
        s[c, c] = 1.0
        s[c, center] = s[center, c] = -1.0
    return s, ml


class TestAssembly:
    def test_lumped_mass_crisscross(self, crisscross_unit):
        _, ml = hand_crisscross_matrices(crisscross_unit)
        system = assemble_v_system(crisscross_unit, ModelParams())
        assert np.allclose(system.lumped_mass, ml, atol=1e-13)

    def test_stiffness_crisscross(self, crisscross_unit):
        s, _ = hand_crisscross_matrices(crisscross_unit)
        system = assemble_v_system(crisscross_unit, ModelParams())
        assert np.allclose(system.stiffness.toarray(), s, atol=1e-13)

    def test_local_stiffness_unit_right_triangle(self):
        mesh = TriMesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])
        system = assemble_v_system(mesh, ModelParams())
        expected = 0.5 * np.array([[2.0, -1.0, -1.0],
                                   [-1.0, 1.0, 0.0],
                                   [-1.0, 0.0, 1.0]])
        assert np.allclose(system.stiffness.toarray(), expected, atol=1e-13)

    def test_lumped_mass_sums_to_domain_area(self):
        mesh = build_structured_mesh("mesh1", 6, (0, 3, 0, 2))
        system = assemble_v_system(mesh, ModelParams())
        assert system.lumped_mass.sum() == pytest.approx(6.0)
        assert np.all(system.lumped_mass > 0)

    def test_stiffness_annihilates_constants(self):
        mesh = build_structured_mesh("mesh1", 8)
        system = assemble_v_system(mesh, ModelParams())
        ones = np.ones(mesh.n_vertices)
        assert np.max(np.abs(system.stiffness @ ones)) <= 1e-12

    def test_system_matrix_exactly_symmetric(self):
        mesh = build_structured_mesh("mesh2", 4)
        system = assemble_v_system(mesh, ModelParams(dt=1e-3))
        diff = (system.matrix - system.matrix.T)
        assert diff.nnz == 0 or np.max(np.abs(diff.data)) == 0.0

    def test_system_matrix_positive_definite(self):
        mesh = build_structured_mesh("mesh2", 3)
        system = assemble_v_system(mesh, ModelParams(dt=1e-3))
        eigs = np.linalg.eigvalsh(system.matrix.toarray())
        assert eigs.min() > 0

    def test_load_matrix_pairs_cells_exactly(self, crisscross_unit):
        system = assemble_v_system(crisscross_unit, ModelParams())
        u = np.array([1.0, 0.0, 0.0, 0.0])
        load = system.load_matrix @ u
        # cell 0 sends |K|/3 = 1/12 to each of its three vertices
        assert load.sum() == pytest.approx(0.25)
        assert np.count_nonzero(load) == 3
        assert np.allclose(load[np.nonzero(load)], 1.0 / 12.0)


class TestSolve:
    def test_constant_steady_state(self):
        mesh = build_structured_mesh("mesh1", 4, (0, 1, 0, 1))
        params = ModelParams(k3=2.0, k4=3.0, dt=1e-2)
        system = assemble_v_system(mesh, params)
        c = 1.7
        u = np.full(mesh.n_cells, c)
        v = np.full(mesh.n_vertices, c * params.k4 / params.k3)
        v_new = solve_v_step(system, v, u)
        assert np.allclose(v_new, c * params.k4 / params.k3, rtol=1e-12)

    def test_elliptic_constant_solution(self):
        mesh = build_structured_mesh("mesh1", 4, (0, 1, 0, 1))
        params = ModelParams(tau=0)
        system = assemble_v_system(mesh, params)
        v_new = solve_v_step(system, None, np.ones(mesh.n_cells))
        assert np.allclose(v_new, 1.0, rtol=1e-12)

    def test_elliptic_ignores_previous_field(self, rng):
        mesh = build_structured_mesh("mesh2", 4)
        params = ModelParams(tau=0)
        system = assemble_v_system(mesh, params)
        u = rng.uniform(0, 5, mesh.n_cells)
        va = solve_v_step(system, rng.uniform(0, 1, mesh.n_vertices), u)
        vb = solve_v_step(system, None, u)
        assert np.array_equal(va, vb)

    def test_parabolic_requires_previous_field(self):
        mesh = build_structured_mesh("mesh2", 2)
        system = assemble_v_system(mesh, ModelParams())
        with pytest.raises(ValueError, match="v_prev"):
            solve_v_step(system, None, np.ones(mesh.n_cells))

    def test_methods_agree_with_dense(self, rng):
        mesh = build_structured_mesh("mesh1", 8)
        params = ModelParams(dt=1e-6)
        system = assemble_v_system(mesh, params)
        u = rng.uniform(0, 1000, mesh.n_cells)
        v = rng.uniform(0, 500, mesh.n_vertices)
        dense = solve_v_step(system, v, u, method="dense")
        for method in ("direct", "cg"):
            got = solve_v_step(system, v, u, method=method)
            assert np.max(np.abs(got - dense)) <= 1e-10 * (1 + np.max(np.abs(dense)))

    @pytest.mark.parametrize("method", ["direct", "cg", "dense"])
    def test_residual_contract(self, rng, method):
        mesh = build_structured_mesh("mesh2", 5)
        params = ModelParams(dt=1e-4)
        system = assemble_v_system(mesh, params)
        u = rng.uniform(0, 10, mesh.n_cells)
        v = rng.uniform(0, 10, mesh.n_vertices)
        x = solve_v_step(system, v, u, method=method)
        rhs = (params.k4 * (system.load_matrix @ u)
               + (params.tau / params.dt) * system.lumped_mass * v)
        res = np.linalg.norm(rhs - system.matrix @ x)
        assert res <= 1e-12 * np.linalg.norm(rhs)

    @pytest.mark.parametrize("pattern,n", [("mesh1", 4), ("mesh1", 8),
                                           ("mesh2", 4), ("mesh2", 8)])
    def test_positivity_random_inputs(self, rng, pattern, n):
        # acute meshes make the system matrix an M-matrix: nonnegative
        # inputs can only produce round-off-level negatives
        mesh = build_structured_mesh(pattern, n)
        params = ModelParams(dt=1e-3)
        system = assemble_v_system(mesh, params)
        worst = 0.0
        for _ in range(250):
            u = rng.uniform(0, 100, mesh.n_cells)
            v = rng.uniform(0, 100, mesh.n_vertices)
            out = solve_v_step(system, v, u)
            worst = min(worst, float(np.min(out)))
        assert worst >= -1e-12

    def test_large_absorption_limit_on_constants(self):
        mesh = build_structured_mesh("mesh1", 4, (0, 1, 0, 1))
        params = ModelParams(tau=0, k3=1e8, k4=1e8)
        system = assemble_v_system(mesh, params)
        v_new = solve_v_step(system, None, np.full(mesh.n_cells, 2.0))
        assert np.allclose(v_new, 2.0, rtol=1e-10)

    def test_params_mismatch_rejected(self):
        mesh = build_structured_mesh("mesh2", 2)
        system = assemble_v_system(mesh, ModelParams())
        with pytest.raises(ValueError, match="reassemble"):
            solve_v_step(system, np.zeros(mesh.n_vertices),
                         np.zeros(mesh.n_cells), params=ModelParams(k3=2.0))
