"""Scenario files: TOML parsing, validation with key/line diagnostics, settings."""

import hashlib
import logging
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Union

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.app.traffic import TrafficProfile
from src.errors import ScenarioError
from src.mac.csma import MacParams
from src.net.token import TokenParams
from src.net.topology import Network, Role, TopologyKind, build_cluster, build_ring, build_star
from src.phy.channel import PhyParams
from src.util import locate_key_line

logger = logging.getLogger("wpansim.scenario")

PRESET_DIR = Path(__file__).resolve().parent.parent / "scenarios"

_UNION_TAGS = {"star", "cluster", "ring", "constant", "exponential", "uniform"}


class WpanSimSettings(BaseSettings):
    """Process settings read from WPANSIM_* environment variables."""
    model_config = SettingsConfigDict(env_prefix="WPANSIM_", extra="ignore")

    out: str = "results"
    log_level: str = "INFO"


class StarTopology(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["star"] = "star"
    end_devices: int = Field(default=14, ge=1)

    def build(self, shared_channel: bool = False) -> Network:
        return build_star(self.end_devices)

    def roles(self) -> List[Role]:
        return [Role.PAN_COORDINATOR, Role.END_DEVICE]

    def node_count(self) -> int:
        return 1 + self.end_devices


class ClusterTopology(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["cluster"] = "cluster"
    coordinators: int = Field(default=3, ge=2)
    end_devices_per_cluster: int = Field(default=4, ge=1)

    def build(self, shared_channel: bool = False) -> Network:
        return build_cluster(self.coordinators, self.end_devices_per_cluster, shared_channel)

    def roles(self) -> List[Role]:
        return [Role.PAN_COORDINATOR, Role.END_DEVICE]

    def node_count(self) -> int:
        return self.coordinators * (1 + self.end_devices_per_cluster)


class RingTopology(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["ring"] = "ring"
    devices: int = Field(default=15, ge=3)

    def build(self, shared_channel: bool = False) -> Network:
        return build_ring(self.devices)

    def roles(self) -> List[Role]:
        return [Role.END_DEVICE]

    def node_count(self) -> int:
        return self.devices


Topology = Annotated[
    Union[StarTopology, ClusterTopology, RingTopology], Field(discriminator="kind")
]


class Flags(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    shared_channel: bool = False
    strict_sizes: bool = False
    double_cca: bool = False


class Scenario(BaseModel):
    """A fully resolved simulation scenario."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(min_length=1)
    duration: float = Field(default=620.0, gt=0)
    warmup: float = Field(default=20.0, ge=0)
    bucket_width: float = Field(default=10.0, gt=0)
    seed: int = Field(default=1, ge=0)
    topology: Topology
    phy: PhyParams = PhyParams()
    mac: MacParams = MacParams()
    token: TokenParams = TokenParams()
    flags: Flags = Flags()
    profiles: Dict[Role, TrafficProfile] = Field(default_factory=dict)

    @field_validator("warmup")
    @classmethod
    def _warmup_before_end(cls, v: float, info: ValidationInfo) -> float:
        duration = info.data.get("duration")
        if duration is not None and v >= duration:
            raise ValueError(f"warmup ({v}) must be shorter than duration ({duration})")
        return v

    @field_validator("profiles")
    @classmethod
    def _profiles_match_roles(cls, v: Dict[Role, TrafficProfile], info: ValidationInfo):
        topology = info.data.get("topology")
        if topology is None:
            return v
        for role in v:
            if role not in topology.roles():
                raise ValueError(f"a {topology.kind} topology has no {role.value} nodes")
        return v

    @property
    def kind(self) -> TopologyKind:
        return TopologyKind(self.topology.kind)

    @property
    def effective_mac(self) -> MacParams:
        if self.flags.double_cca and not self.mac.double_cca:
            return self.mac.model_copy(update={"double_cca": True})
        return self.mac

    def build_network(self) -> Network:
        return self.topology.build(self.flags.shared_channel)

    def with_overrides(self, **overrides) -> "Scenario":
        """Copy with CLI overrides applied; None values are ignored and validators rerun."""
        updates = {k: v for k, v in overrides.items() if v is not None}
        if not updates:
            return self
        data = self.model_dump(mode="json")
        data.update(updates)
        try:
            return Scenario.model_validate(data)
        except ValidationError as e:
            raise _scenario_error(e, source=f"scenario '{self.name}' overrides") from e


def scenario_hash(scenario: Scenario) -> str:
    """SHA-256 of the canonical scenario JSON, seed excluded."""
    payload = scenario.model_dump(mode="json", exclude={"seed"})
    return hashlib.sha256(orjson.dumps(payload, option=orjson.OPT_SORT_KEYS)).hexdigest()


def _dotted_key(loc) -> str:
    parts = []
    for i, item in enumerate(loc):
        if isinstance(item, str) and item in _UNION_TAGS and i > 0 and loc[i - 1] != "profiles":
            continue
        parts.append(str(item))
    return ".".join(parts)


def _scenario_error(e: ValidationError, source: str, text: Optional[str] = None) -> ScenarioError:
    first = e.errors()[0]
    key = _dotted_key(first["loc"]) or None
    line = locate_key_line(text, key) if text and key else None
    message = first["msg"]
    if first.get("type") not in ("missing", "extra_forbidden") and "input" in first:
        message += f" (got {first['input']!r})"
    more = len(e.errors()) - 1
    if more:
        message += f"; {more} more error(s)"
    return ScenarioError(f"Invalid {source}: {message}", key=key, line=line)


def parse_scenario_text(text: str, source: str = "<scenario>", default_name: str = "scenario") -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        m = re.search(r"line (\d+)", str(e))
        raise ScenarioError(
            f"Invalid {source}: {e}", key=None, line=int(m.group(1)) if m else None
        ) from e
    data.setdefault("name", default_name)
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        raise _scenario_error(e, source, text) from e


def parse_scenario(file: Union[str, Path]) -> Scenario:
    """Load and validate a scenario file; the name defaults to the file stem."""
    path = Path(file)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario file {path}: {e.strerror or e}") from e
    scenario = parse_scenario_text(text, source=f"scenario file {path}", default_name=path.stem)
    logger.debug(f"Loaded scenario '{scenario.name}' from {path}")
    return scenario


def list_presets() -> List[Path]:
    return sorted(PRESET_DIR.glob("*.toml"))


def resolve_scenario_path(name: str) -> Path:
    """Accept a path, or the name of a shipped preset (`star`, `star.toml`)."""
    path = Path(name)
    if path.exists():
        return path
    preset = PRESET_DIR / (name if name.endswith(".toml") else f"{name}.toml")
    return preset if preset.exists() else path
