import math

import numpy as np
import pytest

from seqtune.engine import (
    CapExhausted, CopulaSource, EngineConfig, GaussianCopulaSource, SequenceSource,
    certified_bound, make_copula_source, replay_stop, run_certification, run_tuning,
)
from seqtune.copulas import FrankCopula, GaussianCopula

RISK = dict(delta=0.025, beta1=0.0125, beta2=0.0125)


def risk_config(j_star, **kw):
    return EngineConfig(**RISK, j_star=j_star, **kw)


def test_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(0.5, 0.3, 0.3, 0.0)
    with pytest.raises(ValueError):
        EngineConfig(0.05, 0.01, 0.01, 0.0, initial_n=1)
    with pytest.raises(ValueError):
        EngineConfig(0.05, 0.01, 0.01, 0.0, initial_n=10, max_n=10)
    assert EngineConfig(0.03, 0.01, 0.01, 0.0).gamma == pytest.approx(0.05)


def test_independent_source_never_certifies():
    src = GaussianCopulaSource(0.0, 0.07, seed=1)
    with pytest.raises(CapExhausted) as info:
        run_certification(src, risk_config(src.j_star, max_n=3000))
    rep = info.value.report
    assert rep.tau == 3000 and not rep.certified
    assert len(rep.trajectory) == 3000 - 10
    assert all(s.p == 0.0 for s in rep.trajectory)


@pytest.mark.parametrize("seed", [0, 1])
def test_stopping_time_order(seed):
    src = GaussianCopulaSource(0.9792, 0.07, seed=seed)
    rep = run_certification(src, risk_config(src.j_star))
    assert 1000 <= rep.tau <= 30_000
    assert rep.certified and rep.p_final >= 0.975
    assert rep.trajectory[-1].p == rep.p_final
    assert all(s.p < 0.975 for s in rep.trajectory[:-1])


def test_determinism():
    def once():
        src = GaussianCopulaSource(0.9792, 0.07, seed=42)
        return run_tuning(src, risk_config(src.j_star))[0]

    a, b = once(), once()
    assert a.summary() == b.summary()
    assert a.trajectory == b.trajectory


def test_argmin_bookkeeping():
    pairs = [(5.0, 1.0), (3.0, 2.0), (4.0, 3.0)] + [(10.0 + k, k) for k in range(20)]
    src = SequenceSource(pairs)
    with pytest.raises(CapExhausted) as info:
        run_tuning(src, EngineConfig(0.025, 0.0125, 0.0125, 0.0, initial_n=2, max_n=20))
    rep = info.value.report
    assert rep.selected_index == 2 and rep.selected_z == 3.0 and rep.selected_theta == 2


def test_degenerate_cap_carries_partial_argmin():
    src = SequenceSource([(0.4, 0.1), (0.2, 0.3), (0.9, 0.5), (0.7, 0.2)])
    with pytest.raises(CapExhausted) as info:
        run_tuning(src, EngineConfig(0.025, 0.0125, 0.0125, 0.3, initial_n=3, max_n=4))
    rep = info.value.report
    assert rep.tau == 4 and rep.selected_index == 2 and rep.selected_z == 0.2
    assert len(rep.trajectory) == 1


def test_selected_z_nonincreasing_and_minimal():
    src = GaussianCopulaSource(0.9, 0.1, seed=5)
    rep = run_certification(src, EngineConfig(0.025, 0.0125, 0.0125, src.j_star))
    sel = [s.selected_z for s in rep.trajectory]
    assert all(b <= a for a, b in zip(sel, sel[1:]))
    assert rep.selected_z <= min(s.z for s in rep.trajectory)
    assert sel[-1] == rep.selected_z


def test_no_peeking_replay():
    seed = 7
    src = GaussianCopulaSource(0.9792, 0.07, seed=seed)
    cfg = risk_config(src.j_star)
    rep = run_certification(src, cfg)
    assert replay_stop(rep.trajectory, cfg.delta) == rep.tau
    # replay the exact first tau draws; the engine must not ask for more
    again = GaussianCopulaSource(0.9792, 0.07, seed=seed)
    pairs = [again.draw()[1:] for _ in range(rep.tau)]
    rep2 = run_certification(SequenceSource(pairs), cfg)
    assert rep2.tau == rep.tau and rep2.trajectory == rep.trajectory


def test_certified_bound_gates():
    assert certified_bound(3000, -0.01, 0.9) == 0.0
    assert certified_bound(3000, 0.05, 0.0) == 0.0
    assert certified_bound(3, 0.05, 0.9) == 0.0  # no admissible omega
    assert 0.0 < certified_bound(3000, 0.05, 0.9) < 1.0


def test_copula_sources():
    src, thr = make_copula_source(FrankCopula(5.0), 0.1, seed=3)
    assert isinstance(src, CopulaSource) and thr == 0.1
    theta, z, x = src.draw()
    assert theta == z and 0 < z < 1 and 0 < x < 1
    assert 0 < src.test(theta) < 1
    src, thr = make_copula_source(GaussianCopula(0.5), 0.1, seed=3)
    assert isinstance(src, GaussianCopulaSource) and thr == pytest.approx(-1.2815515655)


def test_gaussian_source_test_draw_is_conditional():
    src = GaussianCopulaSource(0.9, 0.1, seed=11)
    draws = np.array([src.test(-2.0) for _ in range(20_000)])
    assert abs(draws.mean() + 1.8) < 0.02
    assert abs(draws.std() - math.sqrt(1 - 0.81)) < 0.01
