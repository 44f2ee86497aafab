"""Shared independent oracles and instance builders for the test suite.

Everything here deliberately avoids the library's own solution paths: the l1
oracle is a linear program, the information-matrix oracle simulates score
vectors, and the clustering oracle scans all sorted splits.
"""

import numpy as np
from scipy.optimize import linprog

from secloc import (
    AttackSpec,
    PathLossParams,
    Topology,
    build_linear_system,
    distance_from_rssi,
    random_topology,
    select_malicious,
    simulate_measurements,
)

LN10 = np.log(10.0)


def l1_oracle(A, b):
    """Minimize ||A u - b||_1 as the LP: min 1^T s, -s <= A u - b <= s."""
    n, k = A.shape
    c = np.concatenate([np.zeros(k), np.ones(n)])
    A_ub = np.block([[A, -np.eye(n)], [-A, -np.eye(n)]])
    b_ub = np.concatenate([b, -b])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * (k + n), method="highs")
    assert res.status == 0, res.message
    return res.x[:k], res.fun


def empirical_fim(topology, params, attack_kind, sigma_att=0.0, t_att=None,
                  packets=1, draws=200_000, seed=0, chunk=100_000):
    """Covariance of the log-likelihood gradient at the true position,
    estimated from simulated measurement noise.

    The score is linear in the per-anchor noise sum, so the P packets of one
    draw collapse into a single N(0, P*sigma_i^2) variable exactly.
    """
    rng = np.random.default_rng(seed)
    mask = topology.malicious_mask()
    coef = 10.0 * params.n / LN10
    diff = topology.target - topology.anchors
    d2 = np.einsum("ij,ij->i", diff, diff)
    direction = diff / d2[:, None]
    sig2 = np.full(topology.n_anchors, params.sigma**2)
    if attack_kind == "uncoordinated":
        sig2[mask] += sigma_att**2
    elif attack_kind == "coordinated" and mask.any():
        diff_att = (np.asarray(t_att, dtype=float) - topology.anchors)[mask]
        d2_att = np.einsum("ij,ij->i", diff_att, diff_att)
        direction[mask] = diff_att / d2_att[:, None]
    acc = np.zeros((2, 2))
    total = 0
    while total < draws:
        m = min(chunk, draws - total)
        eta = rng.normal(0.0, np.sqrt(packets * sig2), size=(m, topology.n_anchors))
        score = -coef * (eta / sig2) @ direction
        acc += score.T @ score
        total += m
    return acc / draws


def best_split_1d(values):
    """Optimal 2-partition of scalars by within-cluster sum of squares,
    found by scanning every split of the sorted values.  Returns labels with
    0 for the lower-mean cluster."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    sv = v[order]
    best_cost, best_k = np.inf, 1
    for k in range(1, v.size):
        lo, hi = sv[:k], sv[k:]
        cost = ((lo - lo.mean()) ** 2).sum() + ((hi - hi.mean()) ** 2).sum()
        if cost < best_cost:
            best_cost, best_k = cost, k
    labels = np.zeros(v.size, dtype=int)
    labels[order[best_k:]] = 1
    return labels


def coordinated_system(rng, n_anchors=29, fraction=0.28, shift=25.0, packets=10,
                       sigma=0.0):
    """Random topology under a coordinated attack aimed shift*(1,1) away from
    the target; returns (LinearSystem, topology, t_att)."""
    params = PathLossParams(-10.0, 4.0, sigma)
    topo = random_topology(n_anchors, 100.0, seed=rng)
    topo = topo.with_malicious(select_malicious(n_anchors, fraction, seed=rng))
    t_att = topo.target + shift
    meas = simulate_measurements(
        topo, params, AttackSpec("coordinated", t_att=t_att), packets, seed=rng
    )
    mean_d = distance_from_rssi(params, meas.rssi.mean(axis=1))
    return build_linear_system(topo.anchors, mean_d), topo, t_att


def two_strip_plant(rng):
    """Coordinated plant whose 8 malicious anchors sit spread along two
    strips parallel to the bisector of (target, t_att), giving every attacked
    row a large, comparable plane displacement.  The elimination step can
    then recover the malicious set exactly."""
    target = np.array([50.0, 50.0])
    t_att = target + 25.0
    mal_pos = np.array(
        [
            [0.0, 80.0], [25.0, 50.0], [52.0, 20.0], [78.0, 0.0],
            [75.0, 95.0], [92.0, 80.0], [100.0, 68.0], [85.0, 88.0],
        ]
    )
    clean = rng.uniform(0.0, 100.0, (21, 2))
    while np.any(np.linalg.norm(clean - target, axis=1) < 1.0):
        clean = rng.uniform(0.0, 100.0, (21, 2))
    anchors = np.vstack([clean, mal_pos])
    perm = rng.permutation(29)
    anchors = anchors[perm]
    malicious = frozenset(int(i) for i in np.flatnonzero(perm >= 21))
    topo = Topology(anchors=anchors, target=target, malicious=malicious)
    params = PathLossParams(-10.0, 4.0, 0.0)
    meas = simulate_measurements(
        topo, params, AttackSpec("coordinated", t_att=t_att), 10, seed=rng
    )
    mean_d = distance_from_rssi(params, meas.rssi.mean(axis=1))
    return build_linear_system(topo.anchors, mean_d), topo


def gross_outlier_system(rng, n_anchors=29, fraction=0.28):
    """Clean squared-range system with a fraction of ranges grossly scaled."""
    topo = random_topology(n_anchors, 100.0, seed=rng)
    d = topo.distances().copy()
    n_out = int(np.floor(fraction * n_anchors + 0.5))
    idx = rng.choice(n_anchors, size=n_out, replace=False)
    d[idx] *= rng.uniform(1.5, 3.0, n_out)
    return build_linear_system(topo.anchors, d), topo, idx
