"""Physical-layer parameter set and unit handling.

All internal computation runs in SI units (W, Hz, m, s). Config files may use
the customary engineering units (dBm, dB, ps^2/km, ...) via the suffixed keys
understood by :func:`load_params`; they are converted once at load time.

The defaults reproduce the reference coherent link budget: 0 dBm local
oscillator, -12 dBm received channel power, 0.7 A/W responsivity, 21 dB EDFA
gain with n_sp = 2 every 100 km span, -18.5 dB switch crosstalk ratio, and a
1/32 self-interference budget. The electrical bandwidth has no table default
in the reference budget, so config files must state it explicitly; the class
default of 12.5 GHz (whole-slot matched filter) is intended for direct
construction in tests.
"""

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from scipy.constants import c as _SPEED_OF_LIGHT
from scipy.constants import e as _ELECTRON_CHARGE
from scipy.constants import h as _PLANCK

BEAT_VARIANCE_MODES = ("consistent", "paper-literal")


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0.0:
        raise ValueError("dB conversion needs a positive linear value")
    return 10.0 * math.log10(value)


def dbm_to_watt(value_dbm: float) -> float:
    return 1e-3 * 10.0 ** (value_dbm / 10.0)


def watt_to_dbm(value_w: float) -> float:
    return linear_to_db(value_w / 1e-3)


@dataclass(frozen=True)
class ImpairmentParams:
    """Link-budget and fiber parameters in SI units.

    ``sinr_threshold`` is linear. The default 32.0 equals 1/``sis`` exactly,
    which keeps the planner's admission test and the exact solver's
    self-interference budget numerically coherent.
    """

    p_lo_w: float = dbm_to_watt(0.0)
    p_r_w: float = dbm_to_watt(-12.0)
    responsivity_a_per_w: float = 0.7
    wavelength_m: float = 1550e-9
    n_sp: float = 2.0
    edfa_gain: float = db_to_linear(21.0)
    span_length_km: float = 100.0
    alpha_db_per_km: float = 0.2
    wss_loss_db: float = 2.0
    eps_xtalk: float = db_to_linear(-18.5)
    gamma_per_w_km: float = 1.33
    beta2_ps2_per_km: float = -21.7
    sis: float = 1.0 / 32.0
    nsis: float = 200.0
    sinr_threshold: float = 32.0
    slot_width_hz: float = 12.5e9
    electrical_bandwidth_hz: float = 12.5e9
    optical_bandwidth_hz: float | None = None
    guard_slots_per_wss: int = 0
    beat_variance_mode: str = "consistent"

    def __post_init__(self) -> None:
        positive = (
            "p_lo_w",
            "p_r_w",
            "responsivity_a_per_w",
            "wavelength_m",
            "n_sp",
            "span_length_km",
            "alpha_db_per_km",
            "sis",
            "nsis",
            "sinr_threshold",
            "slot_width_hz",
            "electrical_bandwidth_hz",
        )
        for name in positive:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if self.edfa_gain <= 1.0:
            raise ValueError("edfa_gain must exceed 1 (net amplification)")
        if not 0.0 < self.eps_xtalk < 1.0:
            raise ValueError("eps_xtalk must be a linear ratio in (0, 1)")
        if self.gamma_per_w_km < 0.0:
            raise ValueError("gamma_per_w_km must be non-negative")
        if self.beta2_ps2_per_km == 0.0:
            raise ValueError("beta2_ps2_per_km must be non-zero")
        if self.optical_bandwidth_hz is not None and self.optical_bandwidth_hz <= 0.0:
            raise ValueError("optical_bandwidth_hz must be positive when given")
        if not (isinstance(self.guard_slots_per_wss, int) and self.guard_slots_per_wss >= 0):
            raise ValueError("guard_slots_per_wss must be a non-negative integer")
        if self.beat_variance_mode not in BEAT_VARIANCE_MODES:
            raise ValueError(f"beat_variance_mode must be one of {BEAT_VARIANCE_MODES}")

    # -- derived quantities ------------------------------------------------

    @property
    def center_frequency_hz(self) -> float:
        return _SPEED_OF_LIGHT / self.wavelength_m

    @property
    def ase_psd_w_per_hz(self) -> float:
        """Single-EDFA ASE power spectral density n_sp*h*f_c*(G-1)."""
        return self.n_sp * _PLANCK * self.center_frequency_hz * (self.edfa_gain - 1.0)

    @property
    def optical_bandwidth_effective_hz(self) -> float:
        """Receiver optical bandwidth; defaults to 4x the electrical bandwidth."""
        if self.optical_bandwidth_hz is not None:
            return self.optical_bandwidth_hz
        return 4.0 * self.electrical_bandwidth_hz

    @property
    def alpha_per_m(self) -> float:
        """Power attenuation coefficient in 1/m."""
        return self.alpha_db_per_km * (math.log(10.0) / 10.0) / 1e3

    @property
    def gamma_per_w_m(self) -> float:
        return self.gamma_per_w_km / 1e3

    @property
    def beta2_s2_per_m(self) -> float:
        return self.beta2_ps2_per_km * 1e-24 / 1e3

    @property
    def electron_charge_c(self) -> float:
        return _ELECTRON_CHARGE

    def as_dict(self) -> dict:
        return asdict(self)


# Config keys that arrive in engineering units and their converted target.
_UNIT_KEYS = {
    "p_lo_dbm": ("p_lo_w", dbm_to_watt),
    "p_r_dbm": ("p_r_w", dbm_to_watt),
    "edfa_gain_db": ("edfa_gain", db_to_linear),
    "eps_xtalk_db": ("eps_xtalk", db_to_linear),
    "sinr_threshold_db": ("sinr_threshold", db_to_linear),
}

_FIELD_NAMES = {f.name for f in fields(ImpairmentParams)}


def params_from_dict(doc: dict) -> ImpairmentParams:
    """Build parameters from a config mapping, converting unit-suffixed keys.

    ``electrical_bandwidth_hz`` is required: it has no value in the reference
    parameter table and silently inheriting the class default has produced
    wrong-regime runs before.
    """
    if not isinstance(doc, dict):
        raise ValueError("params document must be a JSON object")
    kwargs: dict = {}
    for key, raw in doc.items():
        if key in _UNIT_KEYS:
            target, convert = _UNIT_KEYS[key]
            if target in kwargs:
                raise ValueError(f"both {key} and {target} given")
            kwargs[target] = convert(raw)
        elif key in _FIELD_NAMES:
            if key in kwargs:
                other = next(k for k, (t, _) in _UNIT_KEYS.items() if t == key)
                raise ValueError(f"both {other} and {key} given")
            kwargs[key] = raw
        else:
            raise ValueError(f"unknown parameter key: {key!r}")
    if "electrical_bandwidth_hz" not in kwargs:
        raise ValueError("electrical_bandwidth_hz is required in parameter configs")
    if "guard_slots_per_wss" in kwargs:
        kwargs["guard_slots_per_wss"] = int(kwargs["guard_slots_per_wss"])
    return ImpairmentParams(**kwargs)


def load_params(source) -> ImpairmentParams:
    """Load parameters from a dict, a JSON string, or a JSON file path."""
    if isinstance(source, ImpairmentParams):
        return source
    if isinstance(source, dict):
        return params_from_dict(source)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        with open(source, "r", encoding="utf-8") as handle:
            return params_from_dict(json.load(handle))
    return params_from_dict(json.loads(source))
