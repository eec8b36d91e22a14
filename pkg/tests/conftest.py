import numpy as np
import pytest

from tabddpm.data import ColumnSpec, TableSchema
from tabddpm.toy import TOY_SCHEMA, make_toy


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_schema():
    return TableSchema(
        [
            ColumnSpec("age", "continuous"),
            ColumnSpec("bmi", "continuous"),
            ColumnSpec("smoker", "categorical", ("never", "former", "current")),
            ColumnSpec("outcome", "categorical", ("no", "yes")),
        ],
        target="outcome",
    )


@pytest.fixture(scope="session")
def toy_schema():
    return TOY_SCHEMA


@pytest.fixture(scope="session")
def toy_train():
    return make_toy(2000, seed=0)


@pytest.fixture(scope="session")
def toy_test():
    return make_toy(600, seed=99)


@pytest.fixture(scope="session")
def quick_model(toy_train, toy_schema):
    from tabddpm.model import TabDDPM

    return TabDDPM(toy_schema, T=50, hidden_dims=(64, 64), embed_dim=32, epochs=20, random_state=0).fit(toy_train)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        status, title, detail, seconds = RESULTS[number]
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in detail.items())
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {title} ({seconds:.1f}s) {info}")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt(x)}" for k, x in v.items()) + "}"
    if isinstance(v, tuple):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return str(v)
