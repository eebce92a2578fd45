import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tinynose.net_core import N_PARAMS, NetworkParams  # noqa: E402
from tinynose.sensing import AcquisitionProtocol, simulate_acquisition  # noqa: E402
from tinynose.training import TrainConfig, train  # noqa: E402


def random_params(rng, scale=2.0):
    return NetworkParams.from_flat(rng.uniform(-scale, scale, N_PARAMS))


@pytest.fixture(scope="session")
def session_data():
    """Default three-compound session (1800 frames)."""
    return simulate_acquisition(AcquisitionProtocol(), seed=11)


@pytest.fixture(scope="session")
def trained(session_data):
    """A network trained with default settings; shared because training takes seconds."""
    return train(session_data, TrainConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one acceptance criterion; returns a context-manager factory."""
    log = request.config.stash.setdefault(_ACCEPTANCE, [])

    @contextmanager
    def criterion(number, title):
        detail = {}
        try:
            yield detail
        except BaseException as exc:
            line = f"criterion {number} FAIL  {title}: {type(exc).__name__}: {' '.join(str(exc).split())[:200]}"
            log.append(line)
            print(line)
            raise
        extra = ", ".join(f"{k}={v}" for k, v in detail.items())
        line = f"criterion {number} PASS  {title}" + (f" ({extra})" if extra else "")
        log.append(line)
        print(line)

    return criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, [])
    if log:
        terminalreporter.section("acceptance criteria")
        for line in sorted(log, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
