"""Конфигурация: настройки процесса, файлы устройства и пресеты."""

from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.core.device import GHZ, KHZ, MHZ, UEV_TO_RAD_PER_NS, DeviceParams, DissipationRates
from src.core.errors import ConfigError
from src.core.spectroscopy import SweepPlan
from src.core.types import Experiment, SteadyStateConvention

PRESETS_DIR = Path(__file__).resolve().parent / "presets"


LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def describe_validation_error(error: ValidationError) -> str:
    return "; ".join(f"{'.'.join(str(x) for x in err['loc']) or 'config'}: {err['msg']}" for err in error.errors())


def check_log_level(value: str) -> str:
    level = str(value).strip().upper()
    if level not in LOG_LEVELS:
        raise ValueError(f"unknown log level {value!r}, expected one of {', '.join(LOG_LEVELS)}")
    return level


class Settings(BaseSettings):
    """Настройки процесса."""

    model_config = SettingsConfigDict(env_prefix="SCHWINGER_SIM_", env_file=".env", extra="ignore")

    jobs: int = Field(default=1, ge=1)
    log_level: str = "INFO"
    output_dir: Path = Path("out")

    @field_validator("log_level")
    @classmethod
    def known_level(cls, v: str) -> str:
        return check_log_level(v)


@lru_cache
def get_settings() -> Settings:
    """Settings из окружения; ошибка значения превращается в ConfigError."""
    try:
        return Settings()
    except ValidationError as e:
        raise ConfigError(f"environment (SCHWINGER_SIM_*): {describe_validation_error(e)}") from e


# ═══════════════════════════════════════════════════════════════
# Файлы key = value
# ═══════════════════════════════════════════════════════════════


def parse_key_value_text(text: str, source: str = "<text>") -> Dict[str, str]:
    """`key = value` построчно, `#` начинает комментарий, пустые строки пропускаются."""
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def parse_key_value_file(path: Path) -> Dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    return parse_key_value_text(text, str(path))


def parse_overrides(pairs: Sequence[str]) -> Dict[str, str]:
    """Список `key=value` из --set."""
    return parse_key_value_text("\n".join(pairs), "--set")


def list_presets() -> List[str]:
    return sorted(p.stem for p in PRESETS_DIR.glob("*.cfg"))


def preset_path(name: str) -> Path:
    path = PRESETS_DIR / f"{name}.cfg"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return path


# ═══════════════════════════════════════════════════════════════
# Модели
# ═══════════════════════════════════════════════════════════════


class DeviceConfig(BaseModel):
    """Параметры устройства в единицах файла конфигурации (опорное устройство по умолчанию)."""

    model_config = ConfigDict(extra="forbid")

    L_pH: float = Field(default=10.0, gt=0)
    C_nF: float = Field(default=1.0, gt=0)
    EC_ueV: float = Field(default=0.165, gt=0)
    EJ_ueV: float = Field(default=8.24, gt=0)
    g_MHz: Optional[float] = Field(default=None, ge=0)
    g_GHz: Optional[float] = Field(default=None, ge=0)
    gamma_plus_prime_kHz: float = Field(default=100.0, ge=0)
    gamma_plus_kHz: float = Field(default=10.0, ge=0)
    gamma_minus_prime_kHz: float = Field(default=10.0, ge=0)
    gamma_minus_kHz: float = Field(default=1.0, ge=0)

    @model_validator(mode="after")
    def _check(self) -> "DeviceConfig":
        if self.g_MHz is not None and self.g_GHz is not None:
            raise ValueError("give either g_MHz or g_GHz, not both")
        if self.gamma_plus_prime_kHz < self.gamma_plus_kHz:
            raise ValueError("gamma_plus_prime_kHz must be >= gamma_plus_kHz")
        if self.gamma_minus_prime_kHz < self.gamma_minus_kHz:
            raise ValueError("gamma_minus_prime_kHz must be >= gamma_minus_kHz")
        return self

    @property
    def coupling(self) -> float:
        if self.g_GHz is not None:
            return self.g_GHz * GHZ
        return (5.0 if self.g_MHz is None else self.g_MHz) * MHZ

    def to_params(self) -> DeviceParams:
        rates = DissipationRates(
            gamma_prime_plus=self.gamma_plus_prime_kHz * KHZ,
            gamma_plus=self.gamma_plus_kHz * KHZ,
            gamma_prime_minus=self.gamma_minus_prime_kHz * KHZ,
            gamma_minus=self.gamma_minus_kHz * KHZ,
        )
        return DeviceParams(
            L=self.L_pH,
            C=self.C_nF,
            E_C=self.EC_ueV * UEV_TO_RAD_PER_NS,
            E_J=self.EJ_ueV * UEV_TO_RAD_PER_NS,
            g=self.coupling,
            rates=rates,
        )


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class RunOverrides(BaseModel):
    """Ключи запуска из пресетов, файлов и --set; None означает «по умолчанию»."""

    model_config = ConfigDict(extra="forbid")

    experiment: Optional[str] = None
    order: Optional[int] = Field(default=None, ge=0, le=2)
    state_set: Optional[Tuple[int, ...]] = None
    V_nV: Optional[float] = Field(default=None, ge=0)
    Vp_nV: Optional[float] = Field(default=None, ge=0)
    Vc_nV: Optional[float] = Field(default=None, ge=0)
    t_readout_us: Optional[float] = Field(default=None, gt=0)
    t_end_us: Optional[float] = Field(default=None, gt=0)
    detuning_kHz: Optional[float] = None
    n_points: Optional[int] = Field(default=None, ge=1)
    span_linewidths: Optional[float] = Field(default=None, gt=0)
    g_list_MHz: Optional[Tuple[float, ...]] = None
    dt_ns: Optional[float] = Field(default=None, gt=0)
    stride: Optional[int] = Field(default=None, ge=1)
    s_max: Optional[float] = Field(default=None, ge=0)
    convention: Optional[SteadyStateConvention] = None

    @field_validator("state_set", "g_list_MHz", mode="before")
    @classmethod
    def split_lists(cls, value):
        return _split_list(value)

    def merged(self, other: "RunOverrides") -> "RunOverrides":
        """other поверх self."""
        data = self.model_dump(exclude_none=True)
        data.update(other.model_dump(exclude_none=True))
        return RunOverrides(**data)

    def to_plan(self, experiment: Experiment) -> SweepPlan:
        values = {
            "experiment": experiment,
            "levels": self.state_set,
            "order": self.order,
            "amplitude": self.V_nV,
            "probe_amplitude": self.Vp_nV,
            "coupling_amplitude": self.Vc_nV,
            "t_readout": None if self.t_readout_us is None else self.t_readout_us * 1e3,
            "t_end": None if self.t_end_us is None else self.t_end_us * 1e3,
            "detuning": None if self.detuning_kHz is None else self.detuning_kHz * KHZ,
            "n_points": self.n_points,
            "span_linewidths": self.span_linewidths,
            "g_list": None if self.g_list_MHz is None else tuple(g * MHZ for g in self.g_list_MHz),
            "dt": self.dt_ns,
            "stride": self.stride,
            "s_max": self.s_max,
            "convention": self.convention,
        }
        if experiment is Experiment.LADDER and self.state_set is None:
            values["levels"] = (1, 2, 3)
        return SweepPlan(**{k: v for k, v in values.items() if v is not None})


DEVICE_KEYS = frozenset(DeviceConfig.model_fields)


def validate_layer(model, data: Dict[str, str], source: str):
    try:
        return model(**data)
    except ValidationError as e:
        raise ConfigError(f"{source}: {describe_validation_error(e)}") from e


def load_device_config(path: Optional[Path] = None) -> DeviceConfig:
    """Прочитать файл устройства (неизвестные ключи это ошибка)."""
    data = parse_key_value_file(path) if path is not None else {}
    return validate_layer(DeviceConfig, data, str(path or "defaults"))


def load_run_config(
    config_path: Optional[Path] = None,
    preset: Optional[str] = None,
    overrides: Sequence[str] = (),
) -> Tuple[DeviceConfig, RunOverrides]:
    """
    Собрать конфигурацию: пресет, затем файл, затем --set.

    Ключи устройства идут в DeviceConfig, остальные в RunOverrides.
    """
    layers = []
    if preset:
        layers.append((parse_key_value_file(preset_path(preset)), f"preset {preset}"))
    if config_path is not None:
        layers.append((parse_key_value_file(config_path), str(config_path)))
    if overrides:
        layers.append((parse_overrides(overrides), "--set"))

    device: Dict[str, str] = {}
    run = RunOverrides()
    for data, source in layers:
        dev_part = {k: v for k, v in data.items() if k in DEVICE_KEYS}
        run_part = {k: v for k, v in data.items() if k not in DEVICE_KEYS}
        if "g_MHz" in dev_part:
            device.pop("g_GHz", None)
        if "g_GHz" in dev_part:
            device.pop("g_MHz", None)
        device.update(dev_part)
        run = run.merged(validate_layer(RunOverrides, run_part, source))

    return validate_layer(DeviceConfig, device, "device config"), run
