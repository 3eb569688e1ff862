"""
Run configuration: pydantic models for each INI section and the loader that
turns a run file plus ``--set section.key=value`` overrides into an
ExperimentConfig.
"""

import configparser
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..config import config
from ..em import EMStructure, HyperPrior, InverseGamma
from ..em.state import layer_scaled_layers
from ..errors import ConfigurationError
from ..nets import NetworkConfig, NoiseStructure
from ..noise import Bernoulli, NoiseFamily
from ..objectives import ObjectiveSpec

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class DataSection(_Section):
    path: str
    target: str


class NetworkSection(_Section):
    hidden: Tuple[int, ...] = (50,)
    residual: bool = False
    bias: bool = True
    sigma0: float = Field(default=1.0, gt=0.0)
    noise_std: float = Field(default=1.0, gt=0.0)

    @field_validator("hidden", mode="before")
    @classmethod
    def _split_widths(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(int(part) for part in value.replace(",", " ").split())
        return value


class NoiseSection(_Section):
    structure: Literal["unit", "weight", "layer", "combined"] = "unit"
    family: NoiseFamily = Bernoulli(keep_prob=0.95)
    layer_family: Optional[NoiseFamily] = None
    output_layer: bool = True


class EMSection(_Section):
    structure: EMStructure = "ARD"
    hyperprior: HyperPrior = InverseGamma(alpha=3.0, beta=3.0)


class ProtocolSection(_Section):
    model: Literal["mc", "em"] = "mc"
    splits: int = Field(default=config.DEFAULT_SPLITS, ge=1)
    test_fraction: float = Field(default=config.DEFAULT_TEST_FRACTION, gt=0.0, lt=1.0)
    validation_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    epochs: int = Field(default=400, ge=1)
    patience: int = Field(default=20, ge=1)
    batch_size: int = Field(default=32, ge=1)
    step_size: float = Field(default=1e-3, gt=0.0)
    test_samples: int = Field(default=100, ge=1)
    validation_samples: int = Field(default=10, ge=1)
    root_seed: int = config.DEFAULT_ROOT_SEED
    workers: int = Field(default=1, ge=1)


class ExperimentConfig(_Section):
    data: DataSection
    network: NetworkSection = NetworkSection()
    noise: NoiseSection = NoiseSection()
    objective: ObjectiveSpec = ObjectiveSpec()
    em: EMSection = EMSection()
    protocol: ProtocolSection = ProtocolSection()

    def network_config(self, inputs: int, noise_std: Optional[float] = None) -> NetworkConfig:
        section = self.network
        return NetworkConfig.simple(
            inputs,
            list(section.hidden),
            residual=section.residual,
            bias=section.bias,
            sigma0=section.sigma0,
            noise_std=section.noise_std if noise_std is None else noise_std,
        )

    def noise_structure(self) -> NoiseStructure:
        section = self.noise
        layer_family = section.layer_family
        if section.structure in ("layer", "combined") and layer_family is None:
            layer_family = section.family
        return NoiseStructure(
            kind=section.structure,
            unit_family=section.family if section.structure != "layer" else None,
            layer_family=layer_family,
            output_layer=section.output_layer,
        )

    def check(self, inputs: int) -> None:
        """Fail before any split runs if the model cannot be built."""
        network = self.network_config(inputs)
        if self.protocol.model == "mc":
            self.noise_structure().check(network)
        else:
            layer_scaled_layers(network, self.em.structure)

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


SECTIONS = ("data", "network", "noise", "objective", "em", "protocol")

# per-family parameter keys accepted in [noise]
FAMILY_KEYS = ("keep_prob", "drop_rate", "scale", "a", "b")
HYPERPRIOR_KEYS = ("alpha", "beta", "scale")


def _family(values: Dict[str, str], prefix: str) -> Optional[Dict[str, Any]]:
    kind = values.pop(f"{prefix}family", None)
    params = {key: values.pop(f"{prefix}{key}") for key in FAMILY_KEYS if f"{prefix}{key}" in values}
    if kind is None:
        if params:
            raise ConfigurationError(f"[noise] sets {sorted(params)} without {prefix}family")
        return None
    kind = kind.strip().lower()
    if "drop_rate" in params:
        if "keep_prob" in params:
            raise ConfigurationError("[noise] sets both keep_prob and drop_rate")
        drop_rate = params.pop("drop_rate")
        try:
            params["keep_prob"] = 1.0 - float(drop_rate)
        except ValueError:
            raise ConfigurationError(f"[noise] drop_rate must be a number, got {drop_rate!r}")
    return {"kind": kind, **params}


def _sections(parser: configparser.ConfigParser) -> Dict[str, Dict[str, Any]]:
    raw: Dict[str, Dict[str, Any]] = {}
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigurationError(f"unknown section [{name}]; expected one of {list(SECTIONS)}")
        raw[name] = dict(parser.items(name))

    if "noise" in raw:
        noise = raw["noise"]
        for prefix, field in (("", "family"), ("layer_", "layer_family")):
            family = _family(noise, prefix)
            if family is not None:
                noise[field] = family
    if "em" in raw:
        em = raw["em"]
        params = {key: em.pop(key) for key in HYPERPRIOR_KEYS if key in em}
        if "hyperprior" in em:
            em["hyperprior"] = {"kind": em["hyperprior"].strip().lower(), **params}
        elif params:
            raise ConfigurationError(f"[em] sets {sorted(params)} without a hyperprior")
    return raw


def apply_overrides(parser: configparser.ConfigParser, overrides: Iterable[str]) -> None:
    for override in overrides:
        key, sep, value = override.partition("=")
        section, dot, option = key.strip().partition(".")
        if not sep or not dot or not option:
            raise ConfigurationError(f"override must look like section.key=value, got '{override}'")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, option, value.strip())
        logger.debug(f"override [{section}] {option} = {value.strip()}")


def load_experiment(path: Optional[Path] = None, overrides: Iterable[str] = ()) -> ExperimentConfig:
    """Parse a run file, apply overrides and validate.

    Raises ConfigurationError for unknown sections or keys and invalid values.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"run file {path} does not exist")
        parser.read(path)
    apply_overrides(parser, overrides)
    try:
        experiment = ExperimentConfig.model_validate(_sections(parser))
    except ValidationError as e:
        raise ConfigurationError(f"invalid run configuration: {e}")
    logger.debug(f"loaded run configuration {experiment.echo()}")
    return experiment
