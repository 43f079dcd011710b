import pytest

from daamimo.config import ConfigError, ExperimentSpec, NetworkConfig, dump_spec, load_spec


def test_defaults_validate():
    cfg = NetworkConfig()
    assert cfg.M_tot == 400
    assert cfg.path_loss_exponent == 3.76
    assert cfg.dl_fraction == 0.45 and cfg.bandwidth == 20e6


@pytest.mark.parametrize("change", [
    dict(L=0), dict(K=0), dict(M=0), dict(N=0),
    dict(dl_fraction=0.0), dict(dl_fraction=1.5),
    dict(path_loss_exponent=2.0), dict(noise_power=0.0), dict(pilot_snr=-1.0),
    dict(subarray_offset=0.0), dict(subarray_offset=1000.0),
    dict(fading_mode="rician"), dict(estimator="ls"), dict(power_constraint="total"),
])
def test_invalid_network_config(change):
    with pytest.raises(ConfigError):
        NetworkConfig(**change)


def test_daa_divisibility():
    base = NetworkConfig(M=4, N=2)
    ExperimentSpec(base=base, daa_configs=((4, 2), (8, 1), (2, 4)), n_drops=1)
    with pytest.raises(ConfigError):
        ExperimentSpec(base=base, daa_configs=((3, 3),), n_drops=1)


def test_experiment_spec_rejects_bad_fields():
    with pytest.raises(ConfigError):
        ExperimentSpec(n_drops=0)
    with pytest.raises(ConfigError):
        ExperimentSpec(allocators=("greedy",))


def test_yaml_round_trip(tmp_path):
    spec = ExperimentSpec(base=NetworkConfig(L=2, K=4, M=8, N=5, noise_power=3e-11),
                          daa_configs=((8, 5), (20, 2)), n_drops=3)
    path = tmp_path / "exp.yaml"
    path.write_text(dump_spec(spec))
    assert load_spec(path) == spec


def test_yaml_reads_exponent_strings(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text("format_version: 1\nnetwork:\n  M: 8\n  N: 5\n  noise_power: 1e-11\n"
                    "experiment:\n  daa_configs: [[8, 5], [40, 1]]\n  n_drops: 2\n")
    spec = load_spec(path)
    assert spec.base.noise_power == 1e-11
    assert spec.daa_configs == ((8, 5), (40, 1))


def test_unknown_key_and_version(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text("network:\n  antennas: 8\n")
    with pytest.raises(ConfigError):
        load_spec(path)
    path.write_text("format_version: 99\n")
    with pytest.raises(ConfigError):
        load_spec(path)
