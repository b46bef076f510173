"""Run parameters and the desk-scale sphere parameter schedule."""

from dataclasses import dataclass, replace
from typing import Optional

from ._util import hardware_threads

HCA = "hca"
GCA = "gca"
DENSE = "dense"

METHODS = (HCA, GCA, DENSE)


@dataclass
class RunParams:
    method: str = GCA
    order: int = 3                    # interpolation order (HCA) / Green quadrature order (GCA)
    q_near: int = 4                   # nearfield quadrature order
    r_leaf: int = 16                  # cluster tree leaf size
    eta: float = 1.0                  # admissibility parameter
    eps_aca: float = 1e-4             # cross approximation tolerance
    eps_solver: Optional[float] = None  # defaults to eps_aca / 10
    eps_comp: Optional[float] = None    # HCA re-truncation; defaults to eps_aca
    max_it: int = 2000
    seed: int = 1234
    threads: int = 0                  # 0: hardware parallelism
    oracle_cap: int = 4096

    def resolved(self):
        p = replace(self)
        if p.eps_solver is None:
            p.eps_solver = p.eps_aca / 10.0
        if p.eps_comp is None and p.method == HCA:
            p.eps_comp = p.eps_aca
        if p.threads <= 0:
            p.threads = hardware_threads()
        return p


def sphere_schedule(level, method=GCA):
    """Desk-scaled defaults per sphere refinement level.

    The tolerance drops by a factor 10 per level (h halves), anchored so that
    level 5 (8192 triangles) runs at eps_aca = 1e-5; the order grows with the
    level and the leaf size follows r_leaf ~ m^2.
    """
    m = max(3, level)
    return RunParams(
        method=method,
        order=m,
        q_near=4,
        r_leaf=max(16, m * m),
        eta=1.0,
        eps_aca=10.0 ** (-level),
    ).resolved()
