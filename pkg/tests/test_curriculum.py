import pytest
from hypothesis import given
from hypothesis import strategies as st

from curdrive.curriculum import (
    CURLA,
    ONE_FOLD,
    SCA,
    AgentVariant,
    collision_penalty_enabled,
    parse_kind,
    reward_for_step,
    traffic_count_for_episode,
)

PAPER = {k: AgentVariant(k) for k in (SCA, ONE_FOLD, CURLA)}


def ramp_oracle(episode, switch=1500, ramp=1000, tmax=6):
    """Independent integer form of the linear ramp (at least one vehicle once switched)."""
    if episode < switch:
        return 0
    return min(tmax, max(1, (tmax * (episode - switch + 1)) // ramp))


def test_curla_traffic_examples():
    v = PAPER[CURLA]
    assert traffic_count_for_episode(v, 0) == 0
    assert traffic_count_for_episode(v, 1499) == 0
    assert traffic_count_for_episode(v, 1500) == 1
    assert traffic_count_for_episode(v, 2498) == 5
    assert traffic_count_for_episode(v, 2499) == 6
    assert traffic_count_for_episode(v, 2500) == 6
    assert traffic_count_for_episode(v, 3499) == 6


def test_curla_ramp_matches_oracle():
    v = PAPER[CURLA]
    for ep in range(v.total_episodes):
        assert traffic_count_for_episode(v, ep) == ramp_oracle(ep)


def test_onefold_and_sca_full_traffic():
    assert traffic_count_for_episode(PAPER[ONE_FOLD], 0) == 6
    assert traffic_count_for_episode(PAPER[SCA], 0) == 6


def test_gating():
    v = PAPER[CURLA]
    assert not collision_penalty_enabled(v, 1499)
    assert collision_penalty_enabled(v, 1500)
    assert collision_penalty_enabled(PAPER[ONE_FOLD], 1500)
    assert not collision_penalty_enabled(PAPER[ONE_FOLD], 10)
    assert not any(collision_penalty_enabled(PAPER[SCA], e) for e in range(3500))


def test_reward_dispatch():
    assert reward_for_step(PAPER[SCA], 2000, 0.0, 0.0, 60.0, 10.0) == 1.0
    assert reward_for_step(PAPER[CURLA], 2000, 0.0, 0.0, 60.0, 10.0) == 0.0
    assert reward_for_step(PAPER[CURLA], 100, 0.0, 0.0, 15.0, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert reward_for_step(PAPER[CURLA], 100, 0.0, 0.0, 60.0, 10.0) == 1.0


@pytest.mark.parametrize("episode", [-1, 3500])
def test_episode_out_of_range(episode):
    for v in PAPER.values():
        with pytest.raises(ValueError):
            traffic_count_for_episode(v, episode)
        with pytest.raises(ValueError):
            collision_penalty_enabled(v, episode)
        with pytest.raises(ValueError):
            reward_for_step(v, episode, 0.0, 0.0, 30.0, 0.0)


def test_variant_validation():
    with pytest.raises(ValueError):
        AgentVariant(CURLA, switch_episode=0)
    with pytest.raises(ValueError):
        AgentVariant(CURLA, total_episodes=0)
    with pytest.raises(ValueError):
        AgentVariant(CURLA, traffic_ramp_episodes=0)
    with pytest.raises(ValueError):
        AgentVariant("PPO")


def test_reward_flavor_and_aliases():
    assert PAPER[SCA].reward_flavor == "original"
    assert PAPER[ONE_FOLD].reward_flavor == "revised"
    assert PAPER[CURLA].reward_flavor == "revised"
    assert parse_kind("onefold") == ONE_FOLD
    assert parse_kind("curla") == CURLA
    assert parse_kind("sca") == SCA


def test_switch_beyond_run_never_switches():
    v = AgentVariant(CURLA, switch_episode=5, total_episodes=1)
    assert traffic_count_for_episode(v, 0) == 0
    assert not collision_penalty_enabled(v, 0)


def test_step_function_ramp():
    v = AgentVariant(CURLA, switch_episode=10, total_episodes=20, traffic_max=3, traffic_ramp_episodes=1)
    assert [traffic_count_for_episode(v, e) for e in (9, 10, 19)] == [0, 3, 3]


@given(st.sampled_from([SCA, ONE_FOLD, CURLA]), st.integers(1, 50), st.integers(1, 30), st.integers(0, 10))
def test_traffic_non_decreasing(kind, switch, ramp, tmax):
    v = AgentVariant(kind, switch_episode=switch, total_episodes=switch + 60, traffic_max=tmax,
                     traffic_ramp_episodes=ramp)
    counts = [traffic_count_for_episode(v, e) for e in range(v.total_episodes)]
    assert counts == sorted(counts)
    assert max(counts) <= tmax


@given(st.sampled_from([SCA, ONE_FOLD, CURLA]), st.integers(0, 3499), st.floats(-3.2, 3.2),
       st.floats(0, 3), st.floats(0, 200), st.floats(0, 1e4))
def test_reward_range(kind, ep, alpha, d, v, ic):
    r = reward_for_step(PAPER[kind], ep, alpha, d, v, ic)
    assert -1.0 <= r <= 1.0
    if kind == SCA:
        assert r >= 0.0
