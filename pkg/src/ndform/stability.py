"""Discrete inf-sup probe for the C0 DG operator at p = 2."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import QuadDegrees, assemble_c0dg
from .linalg import DENSE_THRESHOLD, from_local_blocks, generalized_sigma_min, mass_matrix
from .mesh import build_rect_mesh
from .problems import CoefficientField
from .space import Space, build_space

logger = logging.getLogger(__name__)


def w2h_gram_matrix(space: Space, quad: QuadDegrees | None = None) -> sp.csr_matrix:
    """S with w^T S w = sum_T |D^2 w|^2_T + sum_e h_e^{-1} |[[grad w]]|^2_e."""
    q = QuadDegrees.default(space.degree) if quad is None else quad
    cq = space.cell_quadrature(q.cell)
    H = cq.hess
    vol = np.einsum("tq,tqiab,tqjab->tij", cq.jxw, H, H, optimize=True)

    eq = space.edge_quadrature(q.edge)
    inner = eq.interior
    n = eq.normal[inner]
    jp = np.einsum("eqia,ea->eqi", eq.grads_plus[inner], n)
    jm = -np.einsum("eqia,ea->eqi", eq.grads_minus[inner], n)
    J = np.concatenate([jp, jm], axis=2)
    wts = eq.wxh[inner] / eq.length[inner][:, None]
    edge = np.einsum("eq,eqi,eqj->eij", wts, J, J, optimize=True)
    edofs = np.concatenate(
        [space.cell_dofs[eq.plus[inner]], space.cell_dofs[eq.minus[inner]]], axis=1
    )
    N = space.dimension
    S_vol = from_local_blocks(space.cell_dofs, space.cell_dofs, vol, (N, N))
    S_edge = from_local_blocks(edofs, edofs, edge, (N, N))
    return (S_vol + S_edge).tocsr()


def infsup_constant(space: Space, A, quad: QuadDegrees | None = None,
                    dense_threshold: int = DENSE_THRESHOLD) -> float:
    """min over free w of ||L_h w||_{L2_h} / ||w||_{W2,2,h}."""
    if space.degree < 2:
        logger.warning("stability theory assumes k >= 2; probing k=%d anyway", space.degree)
    free = space.free_dofs
    B = assemble_c0dg(space, A, quad)[free][:, free]
    M = mass_matrix(space)[free][:, free]
    S = w2h_gram_matrix(space, quad)[free][:, free]
    return generalized_sigma_min(B, M, S, dense_threshold=dense_threshold)


@dataclass
class StabilityLevel:
    n: int
    h: float
    ndof_free: int
    sigma_min: float


@dataclass
class StabilityReport:
    problem: str
    degree: int
    levels: list[StabilityLevel] = field(default_factory=list)

    @property
    def sigmas(self) -> list[float]:
        return [lv.sigma_min for lv in self.levels]

    def as_dict(self) -> dict:
        return {"problem": self.problem, "degree": self.degree,
                "levels": [asdict(lv) for lv in self.levels]}


def stability_sweep(name: str, domain, A: CoefficientField, k: int, levels) -> StabilityReport:
    levels = list(levels)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    report = StabilityReport(name, k)
    for n in levels:
        space = build_space(build_rect_mesh(domain, n), k)
        sigma = infsup_constant(space, A)
        report.levels.append(
            StabilityLevel(n, space.mesh.h_max, len(space.free_dofs), sigma)
        )
        logger.info("infsup %s k=%d n=%d sigma=%.6g", name, k, n, sigma)
    return report
