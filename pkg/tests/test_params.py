import json
import math

import pytest
from scipy.constants import c, h

from eonplan.params import (
    ImpairmentParams,
    db_to_linear,
    dbm_to_watt,
    linear_to_db,
    load_params,
    params_from_dict,
    watt_to_dbm,
)


def test_db_round_trips():
    for value in (0.5, 1.0, 32.0, 1e-6, 3981.0717):
        assert linear_to_db(db_to_linear(linear_to_db(value))) == pytest.approx(
            linear_to_db(value), rel=1e-12
        )
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(10.0) == pytest.approx(10.0, rel=1e-15)
    assert dbm_to_watt(0.0) == pytest.approx(1e-3, rel=1e-15)
    assert dbm_to_watt(30.0) == pytest.approx(1.0, rel=1e-15)
    assert watt_to_dbm(dbm_to_watt(-12.0)) == pytest.approx(-12.0, abs=1e-12)
    with pytest.raises(ValueError):
        linear_to_db(0.0)
    with pytest.raises(ValueError):
        linear_to_db(-3.0)


def test_default_budget_values():
    p = ImpairmentParams()
    assert p.p_lo_w == pytest.approx(1e-3, rel=1e-15)
    assert p.p_r_w == pytest.approx(dbm_to_watt(-12.0), rel=1e-15)
    assert p.eps_xtalk == pytest.approx(10.0 ** (-1.85), rel=1e-15)
    assert p.sis == 1.0 / 32.0
    # Threshold and budget are the same number by design.
    assert p.sinr_threshold == 1.0 / p.sis


def test_derived_quantities_from_first_principles():
    p = ImpairmentParams()
    f_c = c / 1550e-9
    assert p.center_frequency_hz == pytest.approx(f_c, rel=1e-15)
    # ASE PSD n_sp h f_c (G - 1), derived here independently.
    s_ase = 2.0 * h * f_c * (10.0 ** 2.1 - 1.0)
    assert p.ase_psd_w_per_hz == pytest.approx(s_ase, rel=1e-12)
    assert s_ase == pytest.approx(3.2012e-17, rel=1e-4)
    # 0.2 dB/km -> 1/m power attenuation.
    assert p.alpha_per_m == pytest.approx(0.2 * math.log(10.0) / 10.0 / 1e3, rel=1e-15)
    assert p.beta2_s2_per_m == pytest.approx(-21.7e-27, rel=1e-15)
    assert p.gamma_per_w_m == pytest.approx(1.33e-3, rel=1e-15)
    # Optical bandwidth defaults to 4x electrical, explicit value wins.
    assert p.optical_bandwidth_effective_hz == 4.0 * p.electrical_bandwidth_hz
    q = ImpairmentParams(optical_bandwidth_hz=30e9)
    assert q.optical_bandwidth_effective_hz == 30e9


@pytest.mark.parametrize(
    "bad",
    [
        {"p_r_w": -1.0},
        {"p_lo_w": 0.0},
        {"edfa_gain": 0.5},
        {"eps_xtalk": 1.5},
        {"eps_xtalk": 0.0},
        {"beta2_ps2_per_km": 0.0},
        {"gamma_per_w_km": -1.0},
        {"sis": 0.0},
        {"slot_width_hz": float("nan")},
        {"guard_slots_per_wss": -1},
        {"guard_slots_per_wss": 0.5},
        {"beat_variance_mode": "other"},
        {"optical_bandwidth_hz": -5.0},
    ],
)
def test_validation_rejects(bad):
    with pytest.raises(ValueError):
        ImpairmentParams(**bad)


def test_unit_suffixed_keys_convert():
    p = params_from_dict(
        {
            "p_lo_dbm": 0,
            "p_r_dbm": -12,
            "edfa_gain_db": 21,
            "eps_xtalk_db": -18.5,
            "sinr_threshold_db": 15.0,
            "electrical_bandwidth_hz": 12.5e9,
        }
    )
    assert p.p_r_w == pytest.approx(dbm_to_watt(-12.0), rel=1e-15)
    assert p.edfa_gain == pytest.approx(db_to_linear(21.0), rel=1e-15)
    assert p.sinr_threshold == pytest.approx(db_to_linear(15.0), rel=1e-15)


def test_unit_plain_conflicts_and_unknown_keys():
    with pytest.raises(ValueError, match="both"):
        params_from_dict(
            {"p_r_dbm": -12, "p_r_w": 1e-4, "electrical_bandwidth_hz": 12.5e9}
        )
    with pytest.raises(ValueError, match="unknown parameter key"):
        params_from_dict({"electrical_bandwidth_hz": 12.5e9, "typo_key": 1})


def test_electrical_bandwidth_is_mandatory_in_configs():
    with pytest.raises(ValueError, match="electrical_bandwidth_hz"):
        params_from_dict({"p_r_dbm": -12})


def test_load_params_sources(tmp_path):
    doc = {"electrical_bandwidth_hz": 156.25e6, "p_r_dbm": -12}
    from_dict = load_params(doc)
    from_string = load_params(json.dumps(doc))
    path = tmp_path / "p.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    from_path = load_params(path)
    from_str_path = load_params(str(path))
    assert from_dict == from_string == from_path == from_str_path
    # Already-built params pass through untouched.
    assert load_params(from_dict) is from_dict


def test_shipped_configs_load():
    from pathlib import Path

    config_dir = Path(__file__).resolve().parent.parent / "configs"
    a = load_params(config_dir / "params_table2.json")
    b = load_params(config_dir / "params_experiments.json")
    assert a.electrical_bandwidth_hz == 12.5e9
    assert b.electrical_bandwidth_hz == 156.25e6
    # The two shipped parameter files differ only in the electrical filter.
    da, db = a.as_dict(), b.as_dict()
    da.pop("electrical_bandwidth_hz"), db.pop("electrical_bandwidth_hz")
    assert da == db
