"""Independent reference computations used by the tests.

Plain Python lists and ``math`` only: nothing here imports tinynose's
arithmetic, so agreement with the package is a genuine cross-check.
"""

import math


def ref_logsig(n):
    return 1.0 / (1.0 + math.exp(-n)) if n >= 0 else math.exp(n) / (1.0 + math.exp(n))


def ref_matvec(w, x, b):
    return [math.fsum(wi * xi for wi, xi in zip(row, x)) + bi for row, bi in zip(w, b)]


def ref_forward(hlw, hlb, olw, olb, x):
    """Dense two-layer forward pass; returns the three output activations."""
    hidden = [ref_logsig(n) for n in ref_matvec(hlw, x, hlb)]
    return [ref_logsig(n) for n in ref_matvec(olw, hidden, olb)]


def ref_forward_params(params, x):
    return ref_forward(
        params.hidden_weights.tolist(),
        params.hidden_bias.tolist(),
        params.output_weights.tolist(),
        params.output_bias.tolist(),
        list(map(float, x)),
    )


def max_rel_err(got, want):
    return max(abs(g - w) / max(abs(w), 1e-300) for g, w in zip(got, want))


# Published trained weights, transcribed digit for digit.
PUBLISHED_TOKENS = {
    "HLW": [
        ["0.96053576", "-0.49067116", "-2.25964108", "2.50108093", "0.19458625"],
        ["0.46907827", "5.48986523", "-4.78114212", "-4.99721858", "2.80680594"],
        ["-1.57636870", "-0.58488740", "2.68218068", "-1.25514649", "4.43993330"],
        ["-0.57512130", "2.82730697", "1.04113772", "5.14422524", "-1.64028299"],
        ["2.63760244", "2.83163383", "2.89952632", "-0.36016259", "-2.66582192"],
    ],
    "HLB": ["-1.02772180", "-1.77963962", "2.64182372", "-0.97785230", "1.63223721"],
    "OLW": [
        ["2.24302499", "-3.92702259", "-2.17715966", "2.91615488", "-3.41820192"],
        ["-2.09640007", "7.71309853", "-4.06959432", "0.4036855", "2.39010108"],
        ["1.86633665", "-4.39788864", "6.46096038", "-3.02420647", "-1.04196844"],
    ],
    "OLB": ["-2.90288788", "-1.10540564", "0.49794008"],
}


def published_floats():
    t = PUBLISHED_TOKENS
    return (
        [[float(v) for v in row] for row in t["HLW"]],
        [float(v) for v in t["HLB"]],
        [[float(v) for v in row] for row in t["OLW"]],
        [float(v) for v in t["OLB"]],
    )


LEMON_ROWS = [
    (138, 64, 68, 90, 111),
    (139, 64, 69, 90, 111),
    (167, 79, 93, 95, 123),
    (167, 77, 91, 95, 124),
    (168, 78, 91, 96, 129),
    (208, 84, 112, 90, 249),
    (210, 85, 114, 90, 252),
]
