import re

import numpy as np
import pytest

from hbasim import presets
from hbasim.spectra import Spectrum, SpectrumKind, format_spectrum_csv


@pytest.fixture(scope="session")
def lds798_hba():
    return presets.lds798_hba_experiment()


@pytest.fixture(scope="session")
def rh6g():
    return presets.rh6g_c2pa_experiment()


@pytest.fixture
def write_spectrum(tmp_path):
    def _write(name, spectrum_or_grid, values=None):
        if values is not None:
            spectrum_or_grid = Spectrum(np.asarray(spectrum_or_grid), np.asarray(values),
                                        SpectrumKind.EMISSION)
        path = tmp_path / name
        path.write_text(format_spectrum_csv(spectrum_or_grid), encoding="utf-8")
        return path
    return _write


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Record one PASS/FAIL line per criterion; echoed at the end of the run."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def _log(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        lines.append(line)
        print(line)
        return ok
    return _log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(re.search(r"criterion (\d+)", s).group(1))):
            terminalreporter.write_line(line)
