import math

import numpy as np
import pytest

from secloc import (
    DegenerateInformationError,
    DomainError,
    Fim,
    PathLossParams,
    Topology,
    crlb_bound,
    fim_coordinated,
    fim_uncoordinated,
    random_topology,
    select_malicious,
)

from helpers import empirical_fim

P = PathLossParams(-10.0, 4.0, 2.0)

CROSS = Topology(
    anchors=np.array([[10.0, 0.0], [-10.0, 0.0], [0.0, 10.0], [0.0, -10.0]]),
    target=np.array([0.0, 0.0]),
)


def random_attacked(seed=42, n=29, fraction=0.28):
    topo = random_topology(n, 100.0, seed=seed)
    return topo.with_malicious(select_malicious(n, fraction, seed=seed + 1))


class TestFimClosedForm:
    def test_cross_topology_reference(self):
        # independent arithmetic: prefactor * (1/sigma^2) * sum x^2/||d||^4
        fim = fim_uncoordinated(CROSS, P, 0.0, 1)
        prefactor = 100.0 * 1 * P.n**2 / math.log(10.0) ** 2
        expected = prefactor * (1.0 / P.sigma**2) * (100.0 / 10**4 + 100.0 / 10**4)
        assert fim.f_xx == pytest.approx(expected, rel=1e-12)
        assert fim.f_yy == pytest.approx(expected, rel=1e-12)
        assert fim.f_xy == 0.0
        assert fim.f_xx == pytest.approx(1.5089, abs=1e-4)
        assert crlb_bound(fim) == pytest.approx(1.1513, abs=1e-4)

    def test_no_attack_limit(self):
        topo = random_attacked()
        a = fim_uncoordinated(topo, P, 0.0, 10)
        b = fim_uncoordinated(topo.with_malicious(()), P, 5.0, 10)
        assert a.f_xx == pytest.approx(b.f_xx, rel=1e-12)
        assert a.f_xy == pytest.approx(b.f_xy, rel=1e-12)
        assert a.f_yy == pytest.approx(b.f_yy, rel=1e-12)

    def test_decoy_at_target_matches_no_attack(self):
        topo = random_attacked()
        a = fim_coordinated(topo, P, topo.target, 10)
        b = fim_uncoordinated(topo, P, 0.0, 10)
        assert a.f_xx == pytest.approx(b.f_xx, rel=1e-12)
        assert a.f_xy == pytest.approx(b.f_xy, rel=1e-12)
        assert a.f_yy == pytest.approx(b.f_yy, rel=1e-12)

    def test_no_malicious_ignores_decoy(self):
        topo = random_topology(10, 100.0, seed=3)
        a = fim_coordinated(topo, P, topo.target + 5.0, 10)
        b = fim_coordinated(topo, P, topo.target + 30.0, 10)
        assert a == b

    def test_attack_never_increases_information(self):
        topo = random_attacked()
        quiet = fim_uncoordinated(topo, P, 0.0, 10)
        loud = fim_uncoordinated(topo, P, 8.0, 10)
        assert loud.f_xx <= quiet.f_xx and loud.f_yy <= quiet.f_yy

    def test_crlb_monotone_in_attack(self):
        topo = random_attacked()
        bounds = [crlb_bound(fim_uncoordinated(topo, P, s, 10)) for s in (0, 2, 4, 8, 16)]
        assert all(b2 >= b1 for b1, b2 in zip(bounds, bounds[1:]))
        more = topo.with_malicious(select_malicious(29, 0.5, seed=9))
        assert crlb_bound(fim_uncoordinated(more, P, 8.0, 10)) >= bounds[0]

    def test_coincident_evaluation_point_rejected(self):
        topo = Topology(anchors=CROSS.anchors, target=[1.0, 1.0], malicious={0})
        with pytest.raises(DomainError):
            fim_coordinated(topo, P, np.array([10.0, 0.0]), 1)
        with pytest.raises(DomainError):
            fim_uncoordinated(topo, PathLossParams(-10, 4, 0.0), 1.0, 1)


class TestCrlbBound:
    def test_identity_information(self):
        assert crlb_bound(Fim(1.0, 0.0, 1.0)) == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_scaling(self):
        fim = Fim(2.0, 0.3, 1.5)
        assert crlb_bound(Fim(8.0, 1.2, 6.0)) == pytest.approx(crlb_bound(fim) / 2, rel=1e-12)

    def test_packet_scaling(self):
        topo = random_attacked()
        b1 = crlb_bound(fim_uncoordinated(topo, P, 8.0, 1))
        b16 = crlb_bound(fim_uncoordinated(topo, P, 8.0, 16))
        assert b16 == pytest.approx(b1 / 4.0, rel=1e-9)

    def test_rotation_invariance(self):
        topo = random_attacked(seed=5)
        theta = 0.7
        rot = np.array(
            [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
        )
        rotated = Topology(
            anchors=(topo.anchors - topo.target) @ rot.T + topo.target,
            target=topo.target,
            malicious=topo.malicious,
        )
        a = crlb_bound(fim_uncoordinated(topo, P, 8.0, 10))
        b = crlb_bound(fim_uncoordinated(rotated, P, 8.0, 10))
        assert b == pytest.approx(a, rel=1e-9)

    def test_singular_information_rejected(self):
        with pytest.raises(DegenerateInformationError):
            crlb_bound(Fim(1.0, 1.0, 1.0))


class TestScoreCovariance:
    # reduced-draw versions; the full 1e6-draw gate lives in the acceptance suite

    def check(self, topo, kind, analytic, **kw):
        emp = empirical_fim(topo, P, kind, packets=10, draws=200_000, seed=11, **kw)
        ana = analytic.as_matrix()
        scale = math.sqrt(ana[0, 0] * ana[1, 1])
        err = np.abs(emp - ana) / np.maximum(np.abs(ana), scale)
        assert err.max() <= 0.05

    def test_uncoordinated(self):
        topo = random_attacked(seed=7)
        self.check(topo, "uncoordinated", fim_uncoordinated(topo, P, 8.0, 10), sigma_att=8.0)

    def test_coordinated(self):
        topo = random_attacked(seed=8)
        t_att = topo.target + 12.0
        self.check(topo, "coordinated", fim_coordinated(topo, P, t_att, 10), t_att=t_att)
