"""Fisher information and the resulting lower bound on localization RMSE.

The per-packet RSSI likelihood is Gaussian around the path-loss mean, so the
information about the target position accumulates as a weighted sum of
rank-one geometry terms, one per anchor per packet.  Honest anchors
contribute at weight 1/sigma^2; under an uncoordinated attack malicious
anchors contribute at 1/(sigma^2 + sigma_att^2), and under a coordinated
attack their geometry terms are evaluated at the decoy position instead of
the target.  The bound assumes the malicious identities and noise levels are
known, so it benchmarks what an unbiased estimator could achieve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import LN10, PathLossParams
from .attacks import Topology
from .exceptions import DegenerateInformationError, DomainError


@dataclass(frozen=True)
class Fim:
    """Symmetric 2x2 Fisher information matrix (units 1/m^2)."""

    f_xx: float
    f_xy: float
    f_yy: float

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.f_xx, self.f_xy], [self.f_xy, self.f_yy]])


def _geometry_sums(points: np.ndarray, ref: np.ndarray) -> tuple[float, float, float]:
    """Sum of (p - ref)(p - ref)^T / ||p - ref||^4 components over rows."""
    diff = points - ref
    d2 = np.einsum("ij,ij->i", diff, diff)
    if np.any(d2 == 0.0):
        raise DomainError("a node coincides with the evaluation point")
    w = 1.0 / (d2 * d2)
    sxx = float(np.sum(w * diff[:, 0] ** 2))
    syy = float(np.sum(w * diff[:, 1] ** 2))
    sxy = float(np.sum(w * diff[:, 0] * diff[:, 1]))
    return sxx, sxy, syy


def fim_uncoordinated(
    topology: Topology, params: PathLossParams, sigma_att: float, packets: int
) -> Fim:
    """Information matrix when malicious anchors add independent power jitter
    of standard deviation ``sigma_att``; sigma_att = 0 recovers the no-attack
    matrix."""
    if packets < 1:
        raise DomainError("packets must be >= 1")
    if params.sigma <= 0:
        raise DomainError("the bound needs sigma > 0")
    if not math.isfinite(sigma_att) or sigma_att < 0:
        raise DomainError("sigma_att must be >= 0 and finite")
    prefactor = 100.0 * packets * params.n**2 / LN10**2
    mask = topology.malicious_mask()
    sxx = sxy = syy = 0.0
    if np.any(~mask):
        gxx, gxy, gyy = _geometry_sums(topology.anchors[~mask], topology.target)
        w = 1.0 / params.sigma**2
        sxx += w * gxx
        sxy += w * gxy
        syy += w * gyy
    if np.any(mask):
        gxx, gxy, gyy = _geometry_sums(topology.anchors[mask], topology.target)
        w = 1.0 / (params.sigma**2 + sigma_att**2)
        sxx += w * gxx
        sxy += w * gxy
        syy += w * gyy
    return Fim(prefactor * sxx, prefactor * sxy, prefactor * syy)


def fim_coordinated(
    topology: Topology, params: PathLossParams, t_att, packets: int
) -> Fim:
    """Information matrix under a coordinated attack: malicious geometry terms
    are taken about the decoy position ``t_att``."""
    if packets < 1:
        raise DomainError("packets must be >= 1")
    if params.sigma <= 0:
        raise DomainError("the bound needs sigma > 0")
    t_att = np.asarray(t_att, dtype=float).reshape(2)
    if not np.all(np.isfinite(t_att)):
        raise DomainError("t_att must be finite")
    prefactor = 100.0 * packets * params.n**2 / (params.sigma**2 * LN10**2)
    mask = topology.malicious_mask()
    sxx = sxy = syy = 0.0
    if np.any(~mask):
        gxx, gxy, gyy = _geometry_sums(topology.anchors[~mask], topology.target)
        sxx += gxx
        sxy += gxy
        syy += gyy
    if np.any(mask):
        gxx, gxy, gyy = _geometry_sums(topology.anchors[mask], t_att)
        sxx += gxx
        sxy += gxy
        syy += gyy
    return Fim(prefactor * sxx, prefactor * sxy, prefactor * syy)


def crlb_bound(fim: Fim) -> float:
    """RMSE lower bound sqrt(trace(F^{-1})) via the closed-form 2x2 inverse."""
    det = fim.f_xx * fim.f_yy - fim.f_xy**2
    if det <= 1e-15:
        raise DegenerateInformationError("Fisher information matrix is singular")
    return math.sqrt((fim.f_xx + fim.f_yy) / det)
