"""Model, environment and frame data model.

All downstream timing is done in integer microseconds. Profile files carry
milliseconds, which are converted exactly (a value that is not a whole
number of microseconds is rejected).
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import tomli_w

DEFAULT_LADDER: tuple[int, ...] = (45, 90, 134, 179, 224)

Resolution = int


class ProfileError(ValueError):
    """A profile document failed to parse or violates an invariant."""


def ms_to_us(value: float, name: str = "duration") -> int:
    us = round(value * 1000)
    if abs(us - value * 1000) > 1e-6:
        raise ProfileError(f"{name}: {value} ms is not a whole number of microseconds")
    return int(us)


def tx_time_us(size_bits: int, bandwidth_bps: int) -> int:
    """Transmission time of ``size_bits`` at ``bandwidth_bps``, rounded up to 1 us."""
    return -(-size_bits * 1_000_000 // bandwidth_bps)


@dataclass(frozen=True)
class ModelProfile:
    """One CNN model: NPU time, server time and accuracy per input resolution.

    ``npu_accuracy`` is the accuracy of the NPU build at full resolution; the
    NPU runs a reduced-precision variant, so it usually differs from the
    server accuracy at the same resolution. When absent, the server accuracy
    at the largest resolution is used.
    """

    model_id: int
    name: str
    npu_time_ms: float | None
    server_time_ms: float | None
    accuracy_by_resolution: Mapping[int, float]
    npu_accuracy: float | None = None

    def __post_init__(self) -> None:
        if self.npu_time_ms is None and self.server_time_ms is None:
            raise ProfileError(f"model {self.name!r}: needs npu_time_ms or server_time_ms")
        for fname in ("npu_time_ms", "server_time_ms"):
            v = getattr(self, fname)
            if v is not None:
                if v < 0:
                    raise ProfileError(f"model {self.name!r}: {fname} must be >= 0")
                ms_to_us(v, f"model {self.name!r}: {fname}")
        if not self.accuracy_by_resolution:
            raise ProfileError(f"model {self.name!r}: accuracy_by_resolution is empty")
        acc = dict(sorted(self.accuracy_by_resolution.items()))
        prev = None
        for r, a in acc.items():
            if r <= 0:
                raise ProfileError(f"model {self.name!r}: resolution {r} must be positive")
            if not 0.0 <= a <= 1.0:
                raise ProfileError(f"model {self.name!r}: accuracy at {r} px out of [0, 1]")
            if prev is not None and a < prev:
                raise ProfileError(f"model {self.name!r}: accuracy not monotone in resolution")
            prev = a
        object.__setattr__(self, "accuracy_by_resolution", acc)
        if self.npu_accuracy is not None and not 0.0 <= self.npu_accuracy <= 1.0:
            raise ProfileError(f"model {self.name!r}: npu_accuracy out of [0, 1]")

    @property
    def local(self) -> bool:
        return self.npu_time_ms is not None

    @property
    def remote(self) -> bool:
        return self.server_time_ms is not None

    @property
    def npu_us(self) -> int:
        return ms_to_us(self.npu_time_ms)

    @property
    def server_us(self) -> int:
        return ms_to_us(self.server_time_ms)

    def accuracy(self, resolution: Resolution) -> float:
        return self.accuracy_by_resolution[resolution]

    def local_accuracy(self) -> float:
        if self.npu_accuracy is not None:
            return self.npu_accuracy
        return self.accuracy_by_resolution[max(self.accuracy_by_resolution)]


@dataclass(frozen=True)
class EnvProfile:
    bandwidth_bps: float
    rtt_delay_ms: float
    frame_rate_fps: float
    deadline_ms: float
    frame_interval_ms: float = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if not self.bandwidth_bps > 0:
            raise ProfileError("env: bandwidth_bps must be positive")
        if round(self.bandwidth_bps) < 1:
            raise ProfileError("env: bandwidth_bps must be at least 1 bit/s")
        if self.rtt_delay_ms < 0:
            raise ProfileError("env: rtt_delay_ms must be >= 0")
        if not self.frame_rate_fps > 0:
            raise ProfileError("env: frame_rate_fps must be positive")
        if not self.deadline_ms > 0:
            raise ProfileError("env: deadline_ms must be positive")
        ms_to_us(self.rtt_delay_ms, "env: rtt_delay_ms")
        ms_to_us(self.deadline_ms, "env: deadline_ms")
        interval = 1000.0 / self.frame_rate_fps
        if abs(interval * self.frame_rate_fps - 1000.0) > 1e-9 * 1000.0:
            raise ProfileError("env: frame interval inconsistent with frame rate")
        object.__setattr__(self, "frame_interval_ms", interval)

    @property
    def bandwidth(self) -> int:
        """Uplink rate in whole bits per second, as used for transmission times."""
        return int(round(self.bandwidth_bps))

    @property
    def gamma_us(self) -> int:
        return int(round(1_000_000 / self.frame_rate_fps))

    @property
    def deadline_us(self) -> int:
        return ms_to_us(self.deadline_ms)

    @property
    def rtt_us(self) -> int:
        return ms_to_us(self.rtt_delay_ms)

    def with_(self, **changes: Any) -> "EnvProfile":
        return replace(self, **changes)


@dataclass(frozen=True)
class Frame:
    index: int
    arrival_us: int
    size_bits_by_resolution: Mapping[int, int]

    def __post_init__(self) -> None:
        sizes = dict(sorted(self.size_bits_by_resolution.items()))
        prev = 0
        for r, s in sizes.items():
            if s <= prev:
                raise ProfileError(f"frame {self.index}: sizes must be positive and strictly increasing in resolution")
            prev = s
        object.__setattr__(self, "size_bits_by_resolution", sizes)

    @property
    def arrival_ms(self) -> float:
        return self.arrival_us / 1000.0

    def size(self, resolution: Resolution) -> int:
        return self.size_bits_by_resolution[resolution]


@dataclass(frozen=True)
class FrameSource:
    mode: str = "synthetic"
    bits_per_pixel: float = 4.0
    jitter_fraction: float = 0.0
    rng_seed: int = 0
    trace_path: str | None = None
    ladder: tuple[int, ...] = DEFAULT_LADDER

    def __post_init__(self) -> None:
        if self.mode not in ("synthetic", "trace"):
            raise ProfileError(f"source: unknown mode {self.mode!r}")
        if not self.bits_per_pixel > 0:
            raise ProfileError("source: bits_per_pixel must be positive")
        if not 0.0 <= self.jitter_fraction < 1.0:
            raise ProfileError("source: jitter_fraction must be in [0, 1)")
        if self.mode == "trace" and not self.trace_path:
            raise ProfileError("source: trace mode needs trace_path")
        ladder = tuple(self.ladder)
        if not ladder or any(r <= 0 for r in ladder) or list(ladder) != sorted(set(ladder)):
            raise ProfileError("ladder must be a nonempty strictly increasing list of positive sizes")
        object.__setattr__(self, "ladder", ladder)

    @property
    def r_max(self) -> int:
        return self.ladder[-1]


# -- frames -----------------------------------------------------------------


def gen_frames(source: FrameSource, env: EnvProfile, n: int) -> list[Frame]:
    """Generate ``n`` frames arriving every ``env.gamma_us``.

    Synthetic sizes are ``round(bits_per_pixel * side**2 * (1 + u_i))`` where
    ``u_i`` is uniform in ``[-jitter, +jitter]`` and shared by every
    resolution of frame ``i``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    gamma = env.gamma_us
    if source.mode == "trace":
        rows = read_frame_trace(source.trace_path, source.ladder)
        if len(rows) < n:
            raise ProfileError(f"trace has {len(rows)} frames, {n} requested")
        return [Frame(i, i * gamma, rows[i]) for i in range(n)]

    rng = random.Random(source.rng_seed)
    frames = []
    for i in range(n):
        u = rng.uniform(-source.jitter_fraction, source.jitter_fraction) if source.jitter_fraction else 0.0
        sizes = {r: round(source.bits_per_pixel * r * r * (1.0 + u)) for r in source.ladder}
        frames.append(Frame(i, i * gamma, sizes))
    return frames


def read_frame_trace(path: str | Path, ladder: Sequence[int] = DEFAULT_LADDER) -> list[dict[int, int]]:
    """Read a ``index,s45,s90,...`` frame-size table (sizes in bits)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["index"] + [f"s{r}" for r in ladder]
        if header != expected:
            raise ProfileError(f"trace header {header} != {expected}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                idx, *sizes = (int(x) for x in row)
            except ValueError as exc:
                raise ProfileError(f"trace line {lineno}: {exc}") from None
            if idx != len(rows) or len(sizes) != len(ladder):
                raise ProfileError(f"trace line {lineno}: malformed row")
            rows.append(dict(zip(ladder, sizes)))
    return rows


def write_frame_trace(frames: Sequence[Frame], path: str | Path, ladder: Sequence[int] = DEFAULT_LADDER) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index"] + [f"s{r}" for r in ladder])
        for f in frames:
            w.writerow([f.index] + [f.size(r) for r in ladder])


# -- config documents ---------------------------------------------------------


def parse_document(text: str) -> dict[str, Any]:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ProfileError(f"config parse error: {exc}") from None


def _model_from_table(t: Mapping[str, Any], ladder: Sequence[int]) -> ModelProfile:
    try:
        name = str(t["name"])
        acc_raw = t.get("accuracy", {})
        acc = {int(k): float(v) for k, v in acc_raw.items()}
    except (KeyError, ValueError, AttributeError) as exc:
        raise ProfileError(f"model entry malformed: {exc}") from None
    for r in acc:
        if r not in ladder:
            raise ProfileError(f"model {name!r}: resolution {r} not in ladder {list(ladder)}")
    m = ModelProfile(
        model_id=int(t.get("id", -1)),
        name=name,
        npu_time_ms=t.get("npu_time_ms"),
        server_time_ms=t.get("server_time_ms"),
        accuracy_by_resolution=acc,
        npu_accuracy=t.get("npu_accuracy"),
    )
    if m.remote and set(acc) != set(ladder):
        raise ProfileError(f"model {name!r}: server model needs an accuracy for every ladder resolution")
    if m.local and m.npu_accuracy is None and max(ladder) not in acc:
        raise ProfileError(f"model {name!r}: NPU model needs npu_accuracy or accuracy at {max(ladder)} px")
    return m


def load_profiles(
    config: str | Mapping[str, Any], base_dir: str | Path | None = None
) -> tuple[list[ModelProfile], EnvProfile, FrameSource]:
    """Parse and validate a profile document (TOML text or an already-parsed mapping)."""
    doc = parse_document(config) if isinstance(config, str) else config
    try:
        ladder = tuple(int(r) for r in doc.get("ladder", DEFAULT_LADDER))
        src = dict(doc.get("source", {}))
        if src.get("trace_path") and base_dir is not None:
            p = Path(src["trace_path"])
            if not p.is_absolute():
                src["trace_path"] = str(Path(base_dir) / p)
        source = FrameSource(ladder=ladder, **src)
        env_t = doc["env"]
        env = EnvProfile(
            bandwidth_bps=float(env_t["bandwidth_bps"]),
            rtt_delay_ms=float(env_t["rtt_delay_ms"]),
            frame_rate_fps=float(env_t["frame_rate_fps"]),
            deadline_ms=float(env_t["deadline_ms"]),
        )
    except KeyError as exc:
        raise ProfileError(f"missing field {exc}") from None
    except TypeError as exc:
        raise ProfileError(f"bad field: {exc}") from None

    tables = doc.get("models", [])
    if not tables:
        raise ProfileError("empty model list")
    models = []
    for pos, t in enumerate(tables):
        m = _model_from_table(t, ladder)
        if m.model_id < 0:
            m = replace(m, model_id=pos)
        models.append(m)
    ids = [m.model_id for m in models]
    if len(set(ids)) != len(ids):
        raise ProfileError("duplicate model id")
    models.sort(key=lambda m: m.model_id)
    return models, env, source


def profiles_to_dict(models: Sequence[ModelProfile], env: EnvProfile, source: FrameSource) -> dict[str, Any]:
    src: dict[str, Any] = {
        "mode": source.mode,
        "bits_per_pixel": source.bits_per_pixel,
        "jitter_fraction": source.jitter_fraction,
        "rng_seed": source.rng_seed,
    }
    if source.trace_path:
        src["trace_path"] = source.trace_path
    out_models = []
    for m in models:
        t: dict[str, Any] = {"id": m.model_id, "name": m.name}
        if m.npu_time_ms is not None:
            t["npu_time_ms"] = m.npu_time_ms
        if m.server_time_ms is not None:
            t["server_time_ms"] = m.server_time_ms
        if m.npu_accuracy is not None:
            t["npu_accuracy"] = m.npu_accuracy
        t["accuracy"] = {str(r): a for r, a in m.accuracy_by_resolution.items()}
        out_models.append(t)
    return {
        "ladder": list(source.ladder),
        "env": {
            "bandwidth_bps": env.bandwidth_bps,
            "rtt_delay_ms": env.rtt_delay_ms,
            "frame_rate_fps": env.frame_rate_fps,
            "deadline_ms": env.deadline_ms,
        },
        "source": src,
        "models": out_models,
    }


def serialize_profiles(models: Sequence[ModelProfile], env: EnvProfile, source: FrameSource) -> str:
    return tomli_w.dumps(profiles_to_dict(models, env, source))


def default_config_text() -> str:
    return (Path(__file__).parent / "data" / "default_profile.toml").read_text()
