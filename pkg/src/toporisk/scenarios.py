"""Loading scenario matrices, their thin SVD, and the benchmark sampler.

A scenario matrix F holds L load vectors as columns. In practice only a
few DOFs ever carry load, so F is stored as a dense block over the
loaded DOF rows plus the row index list; the zero rows are never
materialized. The thin SVD is likewise computed on the block only and
the left singular vectors are embedded back, so they inherit F's
sparsity pattern.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ScenarioFormatError
from .mesh import GroundMesh

SVD_REL_TOL = 1e-10


@dataclass(frozen=True)
class ScenarioMatrix:
    """L load scenarios on an n_dofs structure, stored sparsely by row.

    Attributes
    ----------
    n_dofs : int
        Total DOF count of the structure.
    dofs : ndarray
        Strictly increasing indices of the rows that may be nonzero.
    block : ndarray
        (len(dofs), L) dense block of load values; column i is scenario i
        restricted to `dofs`.
    """

    n_dofs: int
    dofs: np.ndarray
    block: np.ndarray

    def __post_init__(self):
        dofs = np.asarray(self.dofs, dtype=np.int64)
        block = np.asarray(self.block, dtype=float)
        if dofs.ndim != 1 or block.ndim != 2 or block.shape[0] != dofs.size:
            raise ValueError("dofs must be 1-D and block must be (len(dofs), L)")
        if block.shape[1] < 1:
            raise ValueError("a scenario matrix needs at least one scenario")
        if dofs.size:
            if dofs[0] < 0 or dofs[-1] >= self.n_dofs:
                raise ValueError("loaded DOF index out of range")
            if np.any(np.diff(dofs) <= 0):
                raise ValueError("dofs must be strictly increasing")
        object.__setattr__(self, "dofs", dofs)
        object.__setattr__(self, "block", block)

    @property
    def n_scenarios(self) -> int:
        return self.block.shape[1]

    @property
    def n_loaded(self) -> int:
        return self.dofs.size

    def column(self, i: int) -> np.ndarray:
        """Scenario i as a full n_dofs vector."""
        f = np.zeros(self.n_dofs)
        f[self.dofs] = self.block[:, i]
        return f

    def to_dense(self) -> np.ndarray:
        """Full (n_dofs, L) matrix. Intended for small problems and tests."""
        F = np.zeros((self.n_dofs, self.n_scenarios))
        F[self.dofs, :] = self.block
        return F


@dataclass(frozen=True)
class ThinSVD:
    """Truncated SVD of a scenario matrix: F = U @ diag(S) @ Vt.

    U is (n_dofs, n_s) with nonzeros only on the loaded DOF rows, S holds
    the kept singular values in descending order, Vt is (n_s, L).
    """

    U: np.ndarray
    S: np.ndarray
    Vt: np.ndarray
    dofs: np.ndarray

    @property
    def n_s(self) -> int:
        return self.S.size


def thin_svd(F: ScenarioMatrix, rel_tol: float = SVD_REL_TOL) -> ThinSVD:
    """Thin SVD of F, truncating singular values below rel_tol * sigma_1.

    Only the loaded-DOF block is decomposed, so the cost is
    O(min(n_loaded, L)^2 * max(n_loaded, L)) regardless of n_dofs.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    Ub, S, Vt = np.linalg.svd(F.block, full_matrices=False)
    if S.size == 0 or S[0] == 0.0:
        raise ValueError("scenario matrix is identically zero")
    keep = S >= rel_tol * S[0]
    Ub, S, Vt = Ub[:, keep], S[keep], Vt[keep, :]
    U = np.zeros((F.n_dofs, S.size))
    U[F.dofs, :] = Ub
    return ThinSVD(U=U, S=S, Vt=Vt, dofs=F.dofs.copy())


def _benchmark_point_loads(mesh: GroundMesh):
    """The three deterministic cantilever loads: (dof indices, unit vectors).

    Positions follow the benchmark geometry: a downward unit load at the
    middle of the free end, a 45-degree down-right load on the top face
    at half the length, and a 45-degree down-left load on the bottom
    face (at 3/4 length in 2D, 2/3 length in 3D).
    """
    c = 1.0 / np.sqrt(2.0)
    if mesh.dim == 2:
        nx, ny = mesh.cells
        anchors = [
            (mesh.node_id(nx, ny // 2), (0.0, -1.0)),
            (mesh.node_id(round(nx / 2), ny), (c, -c)),
            (mesh.node_id(round(3 * nx / 4), 0), (-c, -c)),
        ]
    else:
        nx, ny, nz = mesh.cells
        anchors = [
            (mesh.node_id(nx, ny // 2, nz // 2), (0.0, -1.0, 0.0)),
            (mesh.node_id(round(nx / 2), ny, nz // 2), (c, -c, 0.0)),
            (mesh.node_id(round(2 * nx / 3), 0, nz // 2), (-c, -c, 0.0)),
        ]
    loads = []
    for node, direction in anchors:
        loads.append((mesh.node_dofs(node), np.asarray(direction)))
    return loads


def sample_cantilever_scenarios(
    mesh: GroundMesh,
    L: int,
    seed: int,
    multipliers: np.ndarray | None = None,
) -> ScenarioMatrix:
    """Sample L load scenarios for a cantilever benchmark mesh.

    Each scenario is

        f_i = s_1 F_1 + s_2 F_2 + s_3 F_3 + (1/7) sum_{j=4}^{10} s_j F_j

    where F_1..F_3 are the deterministic unit point loads of the
    benchmark, F_4..F_10 are random "surface rattle" vectors drawn once
    per call with independent standard normal entries on every surface
    DOF without a Dirichlet condition, s_1..s_3 ~ U(-2, 2) and
    s_4..s_10 ~ N(0, 1) independently per scenario. The construction
    bounds rank(F) by 10.

    Randomness comes from `numpy.random.default_rng(seed)` (PCG64); the
    draw order is: the seven basis vectors first (row-major), then the
    uniform multiplier block, then the normal multiplier block, so equal
    seeds give bitwise-equal matrices on any platform with the same
    numpy version.

    Parameters
    ----------
    multipliers : ndarray, optional
        (10, L) override for the multipliers s, bypassing their random
        draw (the basis draw is unchanged). Meant for tests.
    """
    if L < 1:
        raise ValueError(f"need at least one scenario, got L={L}")
    rng = np.random.default_rng(seed)
    surface = mesh.free_surface_dofs()
    basis = rng.standard_normal((7, surface.size))
    if multipliers is None:
        s_point = rng.uniform(-2.0, 2.0, size=(3, L))
        s_basis = rng.standard_normal((7, L))
    else:
        multipliers = np.asarray(multipliers, dtype=float)
        if multipliers.shape != (10, L):
            raise ValueError(f"multipliers must have shape (10, {L})")
        s_point, s_basis = multipliers[:3], multipliers[3:]

    # the deterministic point loads all act on free surface nodes, so the
    # loaded-DOF list is exactly the free surface DOF list
    block = (basis.T / 7.0) @ s_basis
    lookup = {int(d): k for k, d in enumerate(surface)}
    for (dof_ids, direction), s_row in zip(_benchmark_point_loads(mesh), s_point):
        rows = [lookup[int(d)] for d in dof_ids]
        block[rows, :] += np.outer(direction, s_row)
    return ScenarioMatrix(n_dofs=mesh.n_dofs, dofs=surface, block=block)


def save_scenarios_to_file(F: ScenarioMatrix, path) -> None:
    """Write F as CSV with header dof,scenario,value; zero entries omitted.

    Values are written in shortest round-trip decimal form, so a
    write/read cycle reproduces the matrix bitwise.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("dof,scenario,value\n")
        for k, dof in enumerate(F.dofs):
            row = F.block[k]
            for i in np.nonzero(row)[0]:
                fh.write(f"{int(dof)},{int(i)},{float(row[i])!r}\n")


def load_scenarios_from_file(path, n_dofs: int | None = None) -> ScenarioMatrix:
    """Read a scenario CSV written in the documented format.

    The loaded-DOF list is inferred from the rows present in the file;
    the scenario count is the largest scenario index plus one. Pass
    `n_dofs` to validate DOF indices against a known structure size
    (otherwise the largest index present defines it).
    """
    entries = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ScenarioFormatError(f"{path}: empty file") from None
        if header != ["dof", "scenario", "value"]:
            raise ScenarioFormatError(
                f"{path}: expected header 'dof,scenario,value', got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ScenarioFormatError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                dof, scen, value = int(row[0]), int(row[1]), float(row[2])
            except ValueError as exc:
                raise ScenarioFormatError(f"{path}:{lineno}: {exc}") from None
            if dof < 0 or scen < 0:
                raise ScenarioFormatError(f"{path}:{lineno}: negative index")
            if not np.isfinite(value):
                raise ScenarioFormatError(f"{path}:{lineno}: non-finite value")
            if (dof, scen) in entries:
                raise ScenarioFormatError(f"{path}:{lineno}: duplicate entry for dof {dof}, scenario {scen}")
            entries[(dof, scen)] = value
    if not entries:
        raise ScenarioFormatError(f"{path}: no scenario entries")
    max_dof = max(d for d, _ in entries)
    max_scen = max(s for _, s in entries)
    if n_dofs is None:
        n_dofs = max_dof + 1
    elif max_dof >= n_dofs:
        raise ScenarioFormatError(f"{path}: DOF index {max_dof} out of range for n_dofs={n_dofs}")
    dofs = np.unique([d for d, _ in entries])
    lookup = {int(d): k for k, d in enumerate(dofs)}
    block = np.zeros((dofs.size, max_scen + 1))
    for (dof, scen), value in entries.items():
        block[lookup[dof], scen] = value
    return ScenarioMatrix(n_dofs=n_dofs, dofs=dofs, block=block)
