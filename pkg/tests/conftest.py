import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tsrnet.tensor import precision  # noqa: E402
from tsrnet.toyset import write_toy_dataset  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def f64():
    with precision("float64"):
        yield


@pytest.fixture(scope="session")
def toy_root(tmp_path_factory):
    """100 images, 5 classes, written once per session."""
    return write_toy_dataset(tmp_path_factory.mktemp("toy"), n_classes=5, per_class=20, seed=0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def toy_runs(toy_root, tmp_path_factory):
    """Two CLI ``train`` runs on the toy set with the same config and seed."""
    import time
    from types import SimpleNamespace

    from tsrnet.cli import main

    base = tmp_path_factory.mktemp("runs")
    config = base / "toy.cfg"
    config.write_text("# overfit smoke run\nmax_epochs = 300\nseed = 0\n")
    outs = []
    for name in ("a", "b"):
        out = base / name
        start = time.perf_counter()
        code = main(["train", "--config", str(config), "--data-root", str(toy_root), "--out-dir", str(out)])
        outs.append(SimpleNamespace(code=code, out=out, seconds=time.perf_counter() - start))
    return outs
