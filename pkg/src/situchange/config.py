"""Run configuration: INI sections, defaults, and the config fingerprint."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path


@dataclass(frozen=True)
class GeometryConfig:
    arm_reach_m: float = 0.75
    contact_gap_m: float = 0.03
    overlap_frac: float = 0.3
    lying_aspect: float = 0.5
    dominant_frac: float = 0.4
    corridor_width_m: float = 0.6
    distance_round_m: float = 0.1


@dataclass(frozen=True)
class SamplerConfig:
    # Seat groups: which labels count as seats and how the seating point is chosen.
    seats_large_with_back: tuple[str, ...] = ("sofa", "couch", "bench")
    seats_small_with_back: tuple[str, ...] = ("armchair", "chair", "stool")
    seats_large_no_back: tuple[str, ...] = ("bed",)
    seats_small_no_back: tuple[str, ...] = ("beanbag", "ottoman")
    payload_radius_m: float = 8.0
    backrest_wall_dist_m: float = 0.5
    interact_dist_min_m: float = 0.3
    interact_dist_max_m: float = 0.5
    interact_angle_deg: float = 5.0
    seat_clearance_min_m: float = 0.5
    seat_clearance_max_m: float = 1.0
    count_sitting: int = 3
    count_standing: int = 6
    count_interacting: int = 3

    def all_seat_labels(self) -> frozenset[str]:
        return frozenset(
            self.seats_large_with_back
            + self.seats_small_with_back
            + self.seats_large_no_back
            + self.seats_small_no_back
        )


@dataclass(frozen=True)
class QueryConfig:
    # Labels too small or generic to serve as reference landmarks.
    landmark_blacklist: tuple[str, ...] = ("cup", "bottle", "clutter", "item")


@dataclass(frozen=True)
class QAConfig:
    max_counting: int = 2
    max_attribute: int = 2
    max_relationship: int = 3
    step_m: float = 0.65
    absent_probe_labels: tuple[str, ...] = ("sofa", "plant", "piano", "microwave")
    # label -> purpose phrase used for affordance questions
    affordances: tuple[tuple[str, str], ...] = (
        ("clothes dryer", "hang clothes on"),
        ("blanket", "keep warm while sleeping"),
        ("chair", "sit on"),
        ("sofa", "sit on"),
        ("bed", "sleep on"),
        ("lamp", "light up the room"),
        ("table", "put things on"),
        ("monitor", "display a screen"),
        ("basket", "store things in"),
    )


@dataclass(frozen=True)
class GatewayConfig:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o-mini-2024-07-18"
    api_key_env: str = "SITUCHANGE_API_KEY"
    cache_dir: str = "gateway_cache"
    concurrency: int = 4
    requests_per_second: float = 2.0
    max_retries: int = 3
    timeout_s: float = 60.0
    temperature_judge: float = 0.0
    temperature_generate: float = 0.7


@dataclass(frozen=True)
class PipelineConfig:
    data_root: str = "."
    out_dir: str = "out"
    seed: int = 0
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    queries: QueryConfig = field(default_factory=QueryConfig)
    qa: QAConfig = field(default_factory=QAConfig)
    gateway: GatewayConfig = field(default_factory=GatewayConfig)

    def fingerprint(self) -> str:
        """Stable 12-hex digest of the content-affecting configuration.

        Filesystem locations are excluded so the same parameters produce the
        same fingerprint wherever the artifacts are written.
        """
        resolved = asdict(self)
        resolved.pop("data_root", None)
        resolved.pop("out_dir", None)
        resolved["gateway"].pop("cache_dir", None)
        blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def _coerce(raw: str, default):
    if isinstance(default, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        if default and isinstance(default[0], tuple):
            # "label: purpose" pairs, one per comma-separated entry
            pairs = []
            for entry in raw.split(","):
                entry = entry.strip()
                if not entry:
                    continue
                label, _, purpose = entry.partition(":")
                pairs.append((label.strip(), purpose.strip()))
            return tuple(pairs)
        return tuple(s.strip() for s in raw.split(",") if s.strip())
    return raw


def _section(parser: configparser.ConfigParser, name: str, cls):
    defaults = cls()
    if not parser.has_section(name):
        return defaults
    kwargs = {}
    for key, default in asdict(defaults).items():
        if parser.has_option(name, key):
            kwargs[key] = _coerce(parser.get(name, key), default)
    return cls(**{**asdict(defaults), **kwargs}) if kwargs else defaults


def load_config(path: str | Path | None) -> PipelineConfig:
    """Load run configuration from an INI file; absent file or sections fall back to defaults."""
    parser = configparser.ConfigParser()
    if path is not None and Path(path).exists():
        parser.read(path, encoding="utf-8")
    top = {}
    if parser.has_section("paths"):
        if parser.has_option("paths", "data_root"):
            top["data_root"] = parser.get("paths", "data_root")
        if parser.has_option("paths", "out_dir"):
            top["out_dir"] = parser.get("paths", "out_dir")
    if parser.has_section("seeds") and parser.has_option("seeds", "seed"):
        top["seed"] = parser.getint("seeds", "seed")
    return PipelineConfig(
        geometry=_section(parser, "geometry", GeometryConfig),
        sampler=_section(parser, "sampler", SamplerConfig),
        queries=_section(parser, "queries", QueryConfig),
        qa=_section(parser, "qa", QAConfig),
        gateway=_section(parser, "gateway", GatewayConfig),
        **top,
    )
