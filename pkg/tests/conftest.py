import pytest

from icnsim import RunConfig, WorkloadSpec, gen_line

_ACCEPTANCE = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, ok, detail):
        _ACCEPTANCE.append((number, ok, detail))
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def line_config(n, requests, strategy="CEE", **kw):
    """A scripted run on an n-node line; requests are (consumer, prefix, chunk, t_ms)."""
    from icnsim import StrategyParams

    if isinstance(strategy, str):
        strategy = StrategyParams.parse(strategy)
    return RunConfig(topology=gen_line(n), strategy=strategy,
                     workload=WorkloadSpec(kind="scripted", requests=tuple(requests)), **kw)


class ConstRng:
    """Stand-in node rng whose draws are fixed."""

    def __init__(self, value):
        self.value = value

    def random(self):
        return self.value

    def integers(self, n, *args, **kwargs):
        return 0
