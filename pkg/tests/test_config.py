import json
import math

import numpy as np
import pytest

from lcris.config import (ConfigError, Scenario, baseline_scenario, parse_scenario,
                          scenario_from_dict, substream)


def test_baseline_values():
    s = baseline_scenario()
    assert s.rf.freq_Hz == 28e9 and s.rf.bandwidth_Hz == 20e6
    assert s.rf.Nf_dB == 6.0 and s.rf.gamma_thr_dB == 10.0 and s.rf.P_t_dBm == 38.0
    assert s.optimizer.alpha == 0.95 and s.optimizer.I_max == 35
    assert s.optimizer.delta_t == pytest.approx(0.1 / 35)
    assert (s.lc.tau_plus, s.lc.tau_minus) == (9e-3, 29e-3)
    assert s.lc.omega_max == pytest.approx(2 * math.pi)
    assert [u.center for u in s.geometry.users] == [(10.0, 2.0, -5.0), (10.0, -5.0, -5.0),
                                                     (10.0, 5.0, -5.0)]
    assert s.channel.K_f_dB == (-100.0, 10.0, 10.0) and s.channel.blockage_dB == -40.0


def test_baseline_file_equals_dataclass_defaults():
    assert baseline_scenario() == Scenario()


def test_empty_file_gives_defaults(tmp_path):
    f = tmp_path / "empty.json"
    f.write_text("")
    assert parse_scenario(f) == Scenario()


def test_partial_override(tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"rf": {"gamma_thr_dB": 5.0}, "seed": 7}))
    s = parse_scenario(f)
    assert s.rf.gamma_thr_dB == 5.0 and s.seed == 7 and s.rf.freq_Hz == 28e9


@pytest.mark.parametrize("data,key", [
    ({"optimizer": {"alpha": 1.5}}, "optimizer.alpha"),
    ({"optimizer": {"L": 1}}, "optimizer.L"),
    ({"rf": {"bandwidth_Hz": -1}}, "rf.bandwidth_Hz"),
    ({"channel": {"eta": [2, 2]}}, "channel.eta"),
    ({"geometry": {"ris": {"rows": 0, "cols": 4, "center": [0, 0, 0], "plane": "YZ"}}},
     "geometry.ris"),
    ({"geometry": {"users": []}}, "geometry.users"),
    ({"rf": {"colour": 1}}, "rf.colour"),
    ({"bogus": 1}, "bogus"),
    ({"seed": -2}, "seed"),
])
def test_violations_name_their_key(data, key):
    with pytest.raises(ConfigError) as exc:
        scenario_from_dict(data)
    assert exc.value.key_path == key


def test_invalid_json(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    with pytest.raises(ConfigError):
        parse_scenario(f)


def test_round_trip_through_dict():
    s = baseline_scenario().with_omega_max(4 * math.pi)
    assert scenario_from_dict(json.loads(json.dumps(s.to_dict()))) == s


def test_substreams_are_order_independent():
    a = substream(3, "h_r", 5).standard_normal(4)
    substream(3, "H_t", 0).standard_normal(100)
    b = substream(3, "h_r", 5).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, substream(3, "h_r", 6).standard_normal(4))
    assert not np.array_equal(a, substream(4, "h_r", 5).standard_normal(4))
