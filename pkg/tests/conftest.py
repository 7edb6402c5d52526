"""Shared fixtures: small meshes, a material, and dense linear-algebra helpers.

Oracles used across the suite:
  * dense_stiffness     -- assembly by explicit Python loops, no vectorization
  * dense_compliances   -- per-scenario compliances through numpy.linalg.solve
Both are deliberately written along a different code path than the library
so agreement is evidence, not tautology.
"""
import numpy as np
import pytest

import toporisk as tr


@pytest.fixture
def material():
    return tr.Material(youngs_modulus=1.0, poissons_ratio=0.3)


@pytest.fixture
def mesh_4x2():
    return tr.cantilever_mesh(2, (4, 2))


@pytest.fixture
def mesh_6x3():
    return tr.cantilever_mesh(2, (6, 3))


@pytest.fixture
def mesh_3d():
    return tr.cantilever_mesh(3, (3, 2, 2))


def dense_stiffness(mesh, Ke, densities):
    """Assembled global matrix with symmetric Dirichlet elimination, by loops."""
    n = mesh.n_dofs
    K = np.zeros((n, n))
    edof = mesh.element_dof_map()
    for e in range(mesh.n_elements):
        dofs = edof[e]
        for a in range(len(dofs)):
            for b in range(len(dofs)):
                K[dofs[a], dofs[b]] += densities[e] * Ke[a, b]
    for d in sorted(mesh.fixed_dofs):
        K[d, :] = 0.0
        K[:, d] = 0.0
        K[d, d] = 1.0
    return K


def dense_compliances(mesh, Ke, densities, F):
    """C_i = f_i^T K^-1 f_i via a dense solve; ground truth for small cases."""
    K = dense_stiffness(mesh, Ke, densities)
    Fd = F.to_dense()
    U = np.linalg.solve(K, Fd)
    return np.einsum("ki,ki->i", Fd, U)


def random_scenarios(mesh, L, rank, seed):
    """Scenario matrix of known rank supported on the free surface DOFs."""
    rng = np.random.default_rng(seed)
    dofs = mesh.free_surface_dofs()
    basis = rng.standard_normal((dofs.size, rank))
    weights = rng.standard_normal((rank, L))
    # boost the leading block so the realized rank is exactly min(rank, L)
    k = min(rank, L)
    weights[:k, :k] += 10.0 * np.eye(k)
    return tr.ScenarioMatrix(n_dofs=mesh.n_dofs, dofs=dofs, block=basis @ weights)
