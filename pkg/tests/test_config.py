import pytest

from curdrive.config import (
    ExperimentConfig,
    desk_profile,
    load_config,
    paper_profile,
    read_config_json,
    save_config,
)


def test_profiles():
    paper = paper_profile()
    assert (paper.total_episodes, paper.variant.switch_episode, paper.variant.traffic_max) == (3500, 1500, 6)
    assert paper.observation_mode == "vae"
    desk = desk_profile("SCA")
    assert (desk.total_episodes, desk.variant.switch_episode, desk.variant.traffic_ramp_episodes) == (400, 150, 100)
    assert desk.variant.traffic_max == 4 and desk.observation_mode == "bypass"
    ppo = desk.ppo
    assert (ppo.clip_epsilon, ppo.gamma, ppo.gae_lambda, ppo.epochs, ppo.minibatch_size) == (0.2, 0.99, 0.95, 3, 32)
    assert (ppo.value_coef, ppo.entropy_coef, ppo.learning_rate, ppo.init_std) == (1.0, 0.01, 1e-4, 0.4)


def test_toml_overrides(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(
        "[experiment]\ntotal_episodes = 20\neval_every = 5\nseed = 3\n"
        "[curriculum]\nvariant = \"OneFoldCL\"\nswitch_episode = 5\ntraffic_max = 0\n"
        "[env]\nlaps_to_finish = 1\n[track]\nshape = \"circle\"\nradius = 40.0\n"
        "[ppo]\nhorizon = 64\n[observation]\nmode = \"bypass\"\nwidth = 20\n"
    )
    cfg = load_config(path)
    assert cfg.total_episodes == 20 and cfg.eval_every == 5 and cfg.seed == 3
    assert cfg.variant.kind == "OneFoldCL" and cfg.variant.traffic_max == 0
    assert cfg.env.laps_to_finish == 1 and cfg.track.shape == "circle"
    assert cfg.ppo.horizon == 64 and cfg.raster.width == 20
    assert load_config(path, variant="SCA").variant.kind == "SCA"


@pytest.mark.parametrize("text", ["[bogus]\nx = 1\n", "[env]\nwarp = 9\n", "[experiment]\nfoo = 1\n",
                                  "[experiment]\nsmoothing = 1.5\n"])
def test_bad_config(tmp_path, text):
    path = tmp_path / "c.toml"
    path.write_text(text)
    with pytest.raises((ValueError, TypeError)):
        load_config(path)


def test_unknown_profile(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("")
    with pytest.raises(ValueError):
        load_config(path, profile="huge")


def test_json_round_trip(tmp_path):
    cfg = desk_profile("OneFoldCL")
    save_config(cfg, tmp_path / "c.json")
    assert read_config_json(tmp_path / "c.json") == cfg


def test_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(eval_every=0)
    with pytest.raises(ValueError):
        ExperimentConfig(observation_mode="pixels")
