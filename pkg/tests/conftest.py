import pytest

from oracles import build_reference_lib


@pytest.fixture(scope="session")
def reference_lib(tmp_path_factory):
    lib = build_reference_lib(tmp_path_factory.mktemp("cref"))
    if lib is None:
        pytest.fail("no C compiler found; the reference routine cannot be built")
    return lib


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
