from __future__ import annotations

import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

FIXTURES = HERE / "fixtures"
TABLES = FIXTURES / "tables"
SYNTH_SMALL = FIXTURES / "synth_small"
GOLDEN = HERE / "golden"

_acceptance: list = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): acceptance criterion, summarized at the end of the run")


@pytest.fixture
def tables_dir() -> Path:
    return TABLES


@pytest.fixture
def synth_dir() -> Path:
    return SYNTH_SMALL


def corpus_paths(directory: Path) -> dict:
    names = ("messages", "profiles", "famous", "edges", "wiki")
    return {n: str(directory / f"{n}.csv") for n in names if (directory / f"{n}.csv").exists()}


def small_config(**extra):
    """Fast pipeline settings over the small synthetic fixture."""
    from emotree.pipeline import PipelineConfig
    settings = dict(n_topics=4, lda_iters=50, boost_iterations=20, mlp_epochs=60)
    settings.update(extra)
    return PipelineConfig(**corpus_paths(SYNTH_SMALL), **settings)


@pytest.fixture(scope="session")
def small_state():
    from emotree.pipeline import build_state
    cfg = small_config()
    return cfg, build_state(cfg)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    name = dict(report.user_properties).get("acceptance")
    if name is None:
        return
    detail = dict(report.user_properties).get("detail", "")
    _acceptance.append((name, report.passed, detail))


@pytest.fixture(autouse=True)
def _acceptance_name(request):
    marker = request.node.get_closest_marker("acceptance")
    if marker is not None:
        request.node.user_properties.append(("acceptance", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _acceptance:
        line = f"{'PASS' if ok else 'FAIL'}  {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
