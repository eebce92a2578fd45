"""Text formats: model files, dataset CSV and generated firmware source.

Model file layout (one record per line, single spaces between tokens)::

    TINYNOSE 1
    DIMS 5 5 3
    NORM <5 channel minima> <5 channel maxima>
    HLW
    <5 decimals>      x5 rows, hidden unit j over the inputs
    HLB <5 decimals>
    OLW
    <5 decimals>      x3 rows, output unit i over the hidden layer
    OLB <3 decimals>

Reals are written in the shortest form that round-trips to the same double.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DatasetFormatError, ModelFormatError
from .labels import CompoundLabel
from .net_core import N_HIDDEN, N_INPUTS, N_OUTPUTS, NetworkParams, forward
from .sensing import DEFAULT_ADC_BITS, LabeledDataset, Normalizer, SensorFrame

MAGIC = "TINYNOSE"
VERSION = 1

_DECIMAL = re.compile(r"-?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?")


@dataclass(frozen=True, eq=False)
class ModelFile:
    params: NetworkParams
    normalizer: Normalizer
    version: int = VERSION

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModelFile):
            return NotImplemented
        return (
            self.version == other.version
            and self.params == other.params
            and self.normalizer == other.normalizer
        )

    __hash__ = None  # type: ignore[assignment]


def format_real(value: float) -> str:
    return repr(float(value))


def _row(values) -> str:
    return " ".join(format_real(v) for v in values)


def emit_model(model: ModelFile) -> str:
    p = model.params
    lines = [
        f"{MAGIC} {model.version}",
        f"DIMS {N_INPUTS} {N_HIDDEN} {N_OUTPUTS}",
        "NORM " + _row(list(model.normalizer.per_channel_min) + list(model.normalizer.per_channel_max)),
        "HLW",
        *(_row(r) for r in p.hidden_weights),
        "HLB " + _row(p.hidden_bias),
        "OLW",
        *(_row(r) for r in p.output_weights),
        "OLB " + _row(p.output_bias),
    ]
    return "\n".join(lines) + "\n"


class _Lines:
    def __init__(self, text: str) -> None:
        self.lines = text.split("\n")
        if self.lines and self.lines[-1] == "":
            self.lines.pop()
        self.pos = 0

    def next(self, expectation: str) -> tuple[int, list[str]]:
        if self.pos >= len(self.lines):
            raise ModelFormatError(f"line {self.pos + 1}: unexpected end of file, expected {expectation}")
        line = self.lines[self.pos]
        self.pos += 1
        return self.pos, line.split(" ")


def _reals(tokens: list[str], lineno: int, section: str) -> list[float]:
    out = []
    for tok in tokens:
        if not _DECIMAL.fullmatch(tok):
            raise ModelFormatError(f"line {lineno}: {section}: {tok!r} is not a decimal number")
        out.append(float(tok))
    return out


def _section(lines: _Lines, keyword: str, count: int) -> list[float]:
    lineno, tokens = lines.next(f"{keyword} with {count} values")
    if tokens[0] != keyword:
        raise ModelFormatError(f"line {lineno}: expected section {keyword}, found {tokens[0]!r}")
    if len(tokens) - 1 != count:
        raise ModelFormatError(
            f"line {lineno}: {keyword} needs {count} values, found {len(tokens) - 1}"
        )
    return _reals(tokens[1:], lineno, keyword)


def _matrix(lines: _Lines, keyword: str, rows: int, cols: int) -> list[list[float]]:
    lineno, tokens = lines.next(keyword)
    if tokens != [keyword]:
        raise ModelFormatError(f"line {lineno}: expected a bare {keyword} header, found {' '.join(tokens)!r}")
    out = []
    for r in range(rows):
        lineno, tokens = lines.next(f"{keyword} row {r + 1} of {rows}")
        if len(tokens) != cols:
            raise ModelFormatError(
                f"line {lineno}: {keyword} row {r + 1} needs {cols} values, found {len(tokens)}"
            )
        out.append(_reals(tokens, lineno, keyword))
    return out


def parse_model(text: str) -> ModelFile:
    lines = _Lines(text)
    lineno, tokens = lines.next(f"'{MAGIC} {VERSION}'")
    if tokens[0] != MAGIC:
        raise ModelFormatError(f"line {lineno}: bad magic {tokens[0]!r}, expected {MAGIC!r}")
    if tokens != [MAGIC, str(VERSION)]:
        raise ModelFormatError(f"line {lineno}: unsupported header {' '.join(tokens)!r}, expected '{MAGIC} {VERSION}'")

    lineno, tokens = lines.next("DIMS")
    expected_dims = ["DIMS", str(N_INPUTS), str(N_HIDDEN), str(N_OUTPUTS)]
    if tokens != expected_dims:
        raise ModelFormatError(
            f"line {lineno}: dimension mismatch {' '.join(tokens)!r}, expected {' '.join(expected_dims)!r}"
        )

    norm = _section(lines, "NORM", 2 * N_INPUTS)
    hlw = _matrix(lines, "HLW", N_HIDDEN, N_INPUTS)
    hlb = _section(lines, "HLB", N_HIDDEN)
    olw = _matrix(lines, "OLW", N_OUTPUTS, N_HIDDEN)
    olb = _section(lines, "OLB", N_OUTPUTS)
    if lines.pos < len(lines.lines):
        raise ModelFormatError(f"line {lines.pos + 1}: trailing content after OLB")

    try:
        normalizer = Normalizer(norm[:N_INPUTS], norm[N_INPUTS:])
        params = NetworkParams(hlw, hlb, olw, olb)
    except ValueError as exc:
        raise ModelFormatError(str(exc))
    return ModelFile(params, normalizer)


def load_published_model() -> ModelFile:
    """The 5-5-3 weights published with the original Arduino device.

    The normalization block is a placeholder (the lemon sample extremes); the
    preprocessing used when those weights were fitted is not known.
    """
    text = resources.files("tinynose").joinpath("data/published.tnn").read_text()
    return parse_model(text)


# --------------------------------------------------------------------------
# Dataset CSV
# --------------------------------------------------------------------------

DATASET_HEADER = "timestamp_ms,mq2,mq135,tgs2610,tgs2611,mq3,label"
_COUNT = re.compile(r"0|[1-9]\d*")


def load_dataset_csv(text: str, adc_bits: int = DEFAULT_ADC_BITS) -> LabeledDataset:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != DATASET_HEADER:
        raise DatasetFormatError(f"line 1: header must be exactly {DATASET_HEADER!r}")
    top = (1 << adc_bits) - 1
    frames, labels = [], []
    last_ts = -1
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != 7:
            raise DatasetFormatError(f"line {lineno}: expected 7 fields, found {len(fields)}")
        for f in fields[:6]:
            if not _COUNT.fullmatch(f):
                raise DatasetFormatError(f"line {lineno}: {f!r} is not a non-negative integer")
        ts = int(fields[0])
        counts = [int(f) for f in fields[1:6]]
        for v in counts:
            if v > top:
                raise DatasetFormatError(f"line {lineno}: count {v} outside ADC range [0, {top}]")
        if ts < last_ts:
            raise DatasetFormatError(f"line {lineno}: timestamp {ts} goes backwards (previous {last_ts})")
        try:
            label = CompoundLabel.from_slug(fields[6])
        except ValueError as exc:
            raise DatasetFormatError(f"line {lineno}: {exc}")
        last_ts = ts
        frames.append(SensorFrame(ts, tuple(counts)))
        labels.append(label)
    return LabeledDataset(tuple(frames), tuple(labels))


def write_dataset_csv(data: LabeledDataset) -> str:
    out = [DATASET_HEADER]
    for frame, label in zip(data.frames, data.labels):
        out.append(",".join([str(frame.timestamp_ms), *map(str, frame.raw), label.slug]))
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# Firmware source
# --------------------------------------------------------------------------

#: Normalized inputs whose outputs are embedded as self-check vectors.
VERIFICATION_INPUTS = (
    (0.0, 0.0, 0.0, 0.0, 0.0),
    (1.0, 1.0, 1.0, 1.0, 1.0),
    (0.25, 0.5, 0.75, 0.5, 0.25),
)


def c_float(value: float) -> str:
    """Single-precision C literal; 9 significant digits pin a float exactly."""
    text = f"{float(value):.9g}"
    if "." not in text and "e" not in text:
        text += ".0"
    return text + "f"


def _g9(value: float) -> str:
    return f"{float(value):.9g}"


def _c_vector(values) -> str:
    return "{" + ", ".join(c_float(v) for v in values) + "}"


def _c_matrix(rows) -> str:
    return "{\n" + ",\n".join("    " + _c_vector(r) for r in rows) + "\n}"


_C_BODY = """\
static float tn_logsig(float n)
{
    float e = expf(-fabsf(n));
    return n >= 0.0f ? 1.0f / (1.0f + e) : e / (1.0f + e);
}

/* Raw ADC counts to [0, 1], clamped outside the training range. */
void tn_normalize(const int raw[TN_INPUTS], float out[TN_INPUTS])
{
    for (int k = 0; k < TN_INPUTS; ++k) {
        float v = ((float)raw[k] - TN_NORM_MIN[k]) / (TN_NORM_MAX[k] - TN_NORM_MIN[k]);
        out[k] = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    }
}

void tn_forward(const float in[TN_INPUTS], float out[TN_OUTPUTS])
{
    float hidden[TN_HIDDEN];
    for (int j = 0; j < TN_HIDDEN; ++j) {
        float n = TN_HLB[j];
        for (int k = 0; k < TN_INPUTS; ++k)
            n += TN_HLW[j][k] * in[k];
        hidden[j] = tn_logsig(n);
    }
    for (int i = 0; i < TN_OUTPUTS; ++i) {
        float n = TN_OLB[i];
        for (int j = 0; j < TN_HIDDEN; ++j)
            n += TN_OLW[i][j] * hidden[j];
        out[i] = tn_logsig(n);
    }
}

/* Index of the winning compound: 0 lemon, 1 banana, 2 grape. */
int tn_classify(const int raw[TN_INPUTS])
{
    float in[TN_INPUTS], out[TN_OUTPUTS];
    tn_normalize(raw, in);
    tn_forward(in, out);
    int best = 0;
    for (int i = 1; i < TN_OUTPUTS; ++i)
        if (out[i] > out[best])
            best = i;
    return best;
}
"""


def emit_embedded_source(model: ModelFile) -> str:
    p = model.params
    vectors = []
    for i, x in enumerate(VERIFICATION_INPUTS):
        y = forward(p, np.array(x)).output_out
        vectors.append(
            f" * verify[{i}] in = {{{', '.join(_g9(v) for v in x)}}}"
            f" expect = {{{', '.join(_g9(v) for v in y)}}}"
        )
    header = [
        "/* tinynose 5-5-3 log-sigmoid classifier, generated source.",
        " *",
        " * Self-check vectors: tn_forward(in) should reproduce expect to ~1e-5.",
        *vectors,
        " */",
        "#include <math.h>",
        "",
        f"#define TN_INPUTS {N_INPUTS}",
        f"#define TN_HIDDEN {N_HIDDEN}",
        f"#define TN_OUTPUTS {N_OUTPUTS}",
        "",
        f"static const float TN_NORM_MIN[TN_INPUTS] = {_c_vector(model.normalizer.per_channel_min)};",
        f"static const float TN_NORM_MAX[TN_INPUTS] = {_c_vector(model.normalizer.per_channel_max)};",
        f"static const float TN_HLW[TN_HIDDEN][TN_INPUTS] = {_c_matrix(p.hidden_weights)};",
        f"static const float TN_HLB[TN_HIDDEN] = {_c_vector(p.hidden_bias)};",
        f"static const float TN_OLW[TN_OUTPUTS][TN_HIDDEN] = {_c_matrix(p.output_weights)};",
        f"static const float TN_OLB[TN_OUTPUTS] = {_c_vector(p.output_bias)};",
        "",
    ]
    return "\n".join(header) + "\n" + _C_BODY


_VECTOR_LINE = re.compile(r"verify\[(\d+)\] in = \{([^}]*)\} expect = \{([^}]*)\}")


def parse_verification_vectors(source: str) -> list[tuple[np.ndarray, np.ndarray]]:
    """Extract (input, expected output) pairs from generated firmware source."""
    out = []
    for m in _VECTOR_LINE.finditer(source):
        x = np.array([float(v) for v in m.group(2).split(",")])
        y = np.array([float(v) for v in m.group(3).split(",")])
        out.append((x, y))
    return out
