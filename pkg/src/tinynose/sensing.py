"""Sensor physics, ADC conversion, normalization and acquisition simulation."""

from __future__ import annotations

import configparser
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ProtocolError, SensorDomainError
from .labels import CompoundLabel
from .net_core import CHANNELS, N_INPUTS

DEFAULT_ADC_BITS = 10
DEFAULT_ADC_REFERENCE = 5.0


@dataclass(frozen=True)
class SensorChannel:
    """One gas sensor wired as a voltage divider with a load resistor."""

    name: str
    supply_voltage: float = 5.0
    load_resistance: float = 10_000.0
    adc_resolution_bits: int = DEFAULT_ADC_BITS
    adc_reference: float = DEFAULT_ADC_REFERENCE

    def __post_init__(self) -> None:
        if self.name not in CHANNELS:
            raise ValueError(f"unknown sensor {self.name!r}")
        if not self.supply_voltage > 0:
            raise ValueError("supply_voltage must be > 0")
        if not self.load_resistance > 0:
            raise ValueError("load_resistance must be > 0")
        if not 1 <= self.adc_resolution_bits <= 16:
            raise ValueError("adc_resolution_bits must be in [1, 16]")
        if not self.adc_reference > 0:
            raise ValueError("adc_reference must be > 0")

    @property
    def adc_max(self) -> int:
        return (1 << self.adc_resolution_bits) - 1


DEFAULT_CHANNELS = tuple(SensorChannel(name) for name in CHANNELS)


def sensor_resistance(channel: SensorChannel, v_rl: float) -> float:
    """Internal sensor resistance from the voltage across the load resistor.

    ``R_s = (V_C - V_RL) / V_RL * R_L``.
    """
    if v_rl <= 0:
        raise ZeroDivisionError(f"load-resistor voltage must be > 0 V, got {v_rl}")
    if v_rl > channel.supply_voltage:
        raise SensorDomainError(
            f"load-resistor voltage {v_rl} V exceeds supply {channel.supply_voltage} V"
        )
    return (channel.supply_voltage - v_rl) / v_rl * channel.load_resistance


def adc_to_voltage(channel: SensorChannel, raw: int) -> float:
    if not 0 <= raw <= channel.adc_max:
        raise SensorDomainError(f"ADC count {raw} outside [0, {channel.adc_max}]")
    return raw * channel.adc_reference / channel.adc_max


def voltage_to_adc(channel: SensorChannel, volts: float) -> int:
    """Nearest ADC count for a voltage, clamped to the converter range."""
    raw = round(volts * channel.adc_max / channel.adc_reference)
    return min(max(raw, 0), channel.adc_max)


@dataclass(frozen=True)
class SensorFrame:
    timestamp_ms: int
    raw: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.timestamp_ms < 0:
            raise ValueError("timestamp_ms must be non-negative")
        raw = tuple(int(v) for v in self.raw)
        if len(raw) != N_INPUTS:
            raise ValueError(f"frame needs {N_INPUTS} channel values, got {len(raw)}")
        object.__setattr__(self, "raw", raw)


@dataclass(frozen=True)
class LabeledDataset:
    """Time-ordered frames, each tagged with the compound in the chamber."""

    frames: tuple[SensorFrame, ...] = ()
    labels: tuple[CompoundLabel, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.frames) != len(self.labels):
            raise ValueError("frames and labels differ in length")
        if CompoundLabel.Unknown in self.labels:
            raise ValueError("dataset labels must be known compounds")

    def __len__(self) -> int:
        return len(self.frames)

    def raw_matrix(self) -> np.ndarray:
        return np.array([f.raw for f in self.frames], dtype=np.float64).reshape(-1, N_INPUTS)

    def class_counts(self) -> dict[CompoundLabel, int]:
        return dict(Counter(self.labels))

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        return LabeledDataset(
            tuple(self.frames[i] for i in indices), tuple(self.labels[i] for i in indices)
        )

    def channel_stats(self) -> "Normalizer":
        """Per-channel min/max over all frames."""
        return fit_normalizer(self)


@dataclass(frozen=True, eq=False)
class Normalizer:
    per_channel_min: np.ndarray
    per_channel_max: np.ndarray

    def __post_init__(self) -> None:
        lo = np.array(self.per_channel_min, dtype=np.float64)
        hi = np.array(self.per_channel_max, dtype=np.float64)
        if lo.shape != (N_INPUTS,) or hi.shape != (N_INPUTS,):
            raise ValueError("normalizer needs 5 minima and 5 maxima")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("normalizer bounds must be finite")
        for k in range(N_INPUTS):
            if not hi[k] > lo[k]:
                raise ValueError(f"channel {CHANNELS[k]} has max <= min")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "per_channel_min", lo)
        object.__setattr__(self, "per_channel_max", hi)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Normalizer):
            return NotImplemented
        return bool(
            np.array_equal(self.per_channel_min, other.per_channel_min)
            and np.array_equal(self.per_channel_max, other.per_channel_max)
        )

    __hash__ = None  # type: ignore[assignment]

    def apply(self, raw) -> np.ndarray:
        """Vectorised :func:`normalize` over an ``(N, 5)`` count matrix."""
        raw = np.asarray(raw, dtype=np.float64)
        span = self.per_channel_max - self.per_channel_min
        return np.clip((raw - self.per_channel_min) / span, 0.0, 1.0)


def fit_normalizer(data: LabeledDataset) -> Normalizer:
    if len(data) < 2:
        raise ValueError("need at least two frames to fit a normalizer")
    raw = data.raw_matrix()
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    for k in range(N_INPUTS):
        if hi[k] <= lo[k]:
            raise ValueError(f"channel {CHANNELS[k]} is constant ({lo[k]:g}); cannot normalize")
    return Normalizer(lo, hi)


def normalize(norm: Normalizer, frame: SensorFrame) -> np.ndarray:
    return norm.apply(frame.raw)


# --------------------------------------------------------------------------
# Acquisition simulation
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CompoundProfile:
    """Synthetic steady-state response of the array to one compound."""

    label: CompoundLabel
    per_channel_mean: np.ndarray
    per_channel_stddev: np.ndarray
    rise_time_constant_s: float = 0.25

    def __post_init__(self) -> None:
        mean = np.array(self.per_channel_mean, dtype=np.float64)
        std = np.array(self.per_channel_stddev, dtype=np.float64)
        if mean.shape != (N_INPUTS,) or std.shape != (N_INPUTS,):
            raise ValueError("profile needs 5 means and 5 standard deviations")
        if np.any(std < 0):
            raise ValueError("standard deviations must be >= 0")
        if not self.rise_time_constant_s > 0:
            raise ValueError("rise_time_constant_s must be > 0")
        if self.label is CompoundLabel.Unknown:
            raise ValueError("profile label must be a known compound")
        object.__setattr__(self, "per_channel_mean", mean)
        object.__setattr__(self, "per_channel_stddev", std)


# Seven lemon readings from the original device; the default lemon profile
# uses their column means.
LEMON_TABLE_ROWS = (
    (138, 64, 68, 90, 111),
    (139, 64, 69, 90, 111),
    (167, 79, 93, 95, 123),
    (167, 77, 91, 95, 124),
    (168, 78, 91, 96, 129),
    (208, 84, 112, 90, 249),
    (210, 85, 114, 90, 252),
)


def default_profiles() -> tuple[CompoundProfile, ...]:
    """Lemon from the published rows; banana and grape are made-up examples."""
    lemon_mean = np.mean(np.array(LEMON_TABLE_ROWS, dtype=np.float64), axis=0)
    return (
        CompoundProfile(CompoundLabel.Lemon, lemon_mean, [3.0] * 5, 0.25),
        # Not measured data: chosen to be far apart for demos and tests.
        CompoundProfile(CompoundLabel.Banana, [240.0, 110.0, 150.0, 120.0, 300.0], [3.0] * 5, 0.25),
        CompoundProfile(CompoundLabel.Grape, [320.0, 150.0, 80.0, 160.0, 220.0], [3.0] * 5, 0.25),
    )


DEFAULT_BASELINE = (120.0, 55.0, 60.0, 80.0, 95.0)


@dataclass(frozen=True)
class AcquisitionProtocol:
    """Warm up, then capture each compound with a purge between compounds."""

    compounds: tuple[CompoundProfile, ...] = field(default_factory=default_profiles)
    warmup_s: float = 600.0
    capture_s: float = 300.0
    purge_s: float = 300.0
    sample_period_ms: int = 500
    baseline: tuple[float, ...] = DEFAULT_BASELINE
    adc_bits: int = DEFAULT_ADC_BITS

    def __post_init__(self) -> None:
        object.__setattr__(self, "compounds", tuple(self.compounds))
        object.__setattr__(self, "baseline", tuple(float(v) for v in self.baseline))
        for name in ("warmup_s", "capture_s", "purge_s"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if int(self.sample_period_ms) != self.sample_period_ms or self.sample_period_ms < 1:
            raise ValueError("sample_period_ms must be an integer >= 1")
        if not self.compounds:
            raise ValueError("protocol needs at least one compound")
        if len(self.baseline) != N_INPUTS:
            raise ValueError("baseline needs 5 values")
        if not 1 <= self.adc_bits <= 16:
            raise ValueError("adc_bits must be in [1, 16]")
        top = (1 << self.adc_bits) - 1
        for c in self.compounds:
            if np.any(c.per_channel_mean < 0) or np.any(c.per_channel_mean > top):
                raise ValueError(f"{c.label.slug} means fall outside the ADC range [0, {top}]")

    @property
    def frames_per_compound(self) -> int:
        return math.floor(_ms(self.capture_s) / self.sample_period_ms)

    def capture_start_ms(self, k: int) -> int:
        return _ms(self.warmup_s) + k * (_ms(self.capture_s) + _ms(self.purge_s))


def _ms(seconds: float) -> int:
    return int(round(seconds * 1000))


def iter_acquisition(
    protocol: AcquisitionProtocol, seed: int
) -> Iterator[tuple[SensorFrame, CompoundLabel]]:
    """Yield (frame, label) pairs lazily in timestamp order.

    Frames exist only inside capture windows. The ``i``-th reading of a window
    is taken at the end of its sampling period, ``(i + 1) * period`` after the
    cover closes, while the channel mean relaxes from the clean-air baseline to
    the compound's steady-state mean.
    """
    rng = np.random.default_rng(seed)
    top = (1 << protocol.adc_bits) - 1
    baseline = np.array(protocol.baseline)
    period = protocol.sample_period_ms
    for k, profile in enumerate(protocol.compounds):
        start = protocol.capture_start_ms(k)
        mean = profile.per_channel_mean
        for i in range(protocol.frames_per_compound):
            elapsed_ms = (i + 1) * period
            decay = math.exp(-elapsed_ms / 1000.0 / profile.rise_time_constant_s)
            level = mean + (baseline - mean) * decay
            noisy = level + rng.standard_normal(N_INPUTS) * profile.per_channel_stddev
            counts = np.clip(np.rint(noisy), 0, top).astype(int)
            yield SensorFrame(start + elapsed_ms, tuple(counts.tolist())), profile.label


def simulate_acquisition(protocol: AcquisitionProtocol, seed: int) -> LabeledDataset:
    frames, labels = [], []
    for frame, label in iter_acquisition(protocol, seed):
        frames.append(frame)
        labels.append(label)
    return LabeledDataset(tuple(frames), tuple(labels))


# --------------------------------------------------------------------------
# Protocol config files
# --------------------------------------------------------------------------

_PROTOCOL_KEYS = {"warmup_s", "capture_s", "purge_s", "sample_period_ms", "baseline", "adc_bits"}
_COMPOUND_KEYS = {"mean", "stddev", "rise_time_s"}


def _floats(text: str, key: str, n: int) -> list[float]:
    parts = [p.strip() for p in text.split(",")]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ProtocolError(f"key {key!r}: expected {n} comma-separated numbers, got {text!r}")
    if len(values) != n or not all(math.isfinite(v) for v in values):
        raise ProtocolError(f"key {key!r}: expected {n} comma-separated numbers, got {text!r}")
    return values


def _number(section, key: str, cast=float):
    text = section[key]
    try:
        value = cast(text)
    except ValueError:
        raise ProtocolError(f"key {key!r}: not a valid number: {text!r}")
    return value


def load_protocol(text: str) -> AcquisitionProtocol:
    """Parse an INI-style protocol file.

    ``[protocol]`` holds timing keys; each ``[compound <label>]`` section holds
    ``mean``, ``stddev`` (5 comma-separated values each) and ``rise_time_s``.
    Compounds are captured in file order.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ProtocolError(f"malformed protocol file: {exc}".splitlines()[0])

    kwargs = {}
    if parser.has_section("protocol"):
        sec = parser["protocol"]
        for key in sec:
            if key not in _PROTOCOL_KEYS:
                raise ProtocolError(f"unknown key {key!r} in [protocol]")
        for key in ("warmup_s", "capture_s", "purge_s"):
            if key in sec:
                kwargs[key] = _number(sec, key)
        if "sample_period_ms" in sec:
            kwargs["sample_period_ms"] = _number(sec, "sample_period_ms", int)
        if "adc_bits" in sec:
            kwargs["adc_bits"] = _number(sec, "adc_bits", int)
        if "baseline" in sec:
            kwargs["baseline"] = tuple(_floats(sec["baseline"], "baseline", N_INPUTS))

    compounds = []
    for name in parser.sections():
        if name == "protocol":
            continue
        kind, _, slug = name.partition(" ")
        if kind != "compound" or not slug:
            raise ProtocolError(f"unexpected section [{name}]")
        try:
            label = CompoundLabel.from_slug(slug.strip())
        except ValueError as exc:
            raise ProtocolError(f"section [{name}]: {exc}")
        sec = parser[name]
        for key in sec:
            if key not in _COMPOUND_KEYS:
                raise ProtocolError(f"unknown key {key!r} in [{name}]")
        for key in ("mean", "stddev"):
            if key not in sec:
                raise ProtocolError(f"missing key {key!r} in [{name}]")
        rise = _number(sec, "rise_time_s") if "rise_time_s" in sec else 0.25
        try:
            compounds.append(
                CompoundProfile(
                    label,
                    _floats(sec["mean"], "mean", N_INPUTS),
                    _floats(sec["stddev"], "stddev", N_INPUTS),
                    rise,
                )
            )
        except ValueError as exc:
            raise ProtocolError(f"section [{name}]: {exc}")
    if compounds:
        kwargs["compounds"] = tuple(compounds)
    try:
        return AcquisitionProtocol(**kwargs)
    except ValueError as exc:
        raise ProtocolError(str(exc))


def dump_protocol(protocol: AcquisitionProtocol) -> str:
    """Render a protocol in the format :func:`load_protocol` reads."""

    def row(values) -> str:
        return ", ".join(repr(float(v)) for v in values)

    lines = [
        "[protocol]",
        f"warmup_s = {protocol.warmup_s!r}",
        f"capture_s = {protocol.capture_s!r}",
        f"purge_s = {protocol.purge_s!r}",
        f"sample_period_ms = {protocol.sample_period_ms}",
        f"adc_bits = {protocol.adc_bits}",
        f"baseline = {row(protocol.baseline)}",
    ]
    for c in protocol.compounds:
        lines += [
            "",
            f"[compound {c.label.slug}]",
            f"mean = {row(c.per_channel_mean)}",
            f"stddev = {row(c.per_channel_stddev)}",
            f"rise_time_s = {c.rise_time_constant_s!r}",
        ]
    return "\n".join(lines) + "\n"
