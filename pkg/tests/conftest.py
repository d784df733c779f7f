"""Shared fixtures: the seeded system box and the acceptance summary hook."""

import numpy as np
import pytest

from qmekit.core import build_spectrum, hermitian_channel, ladder_channels
from qmekit.bath import flat_spectrum, thermal_ohmic_spectrum


def make_system(seed):
    """One seeded (spectrum, couplings, bath) triple.

    Levels are dyadic ticks (k/64) so degeneracies and Bohr-frequency
    coincidences are exact in floating point; every third system carries
    a forced degenerate pair.  Dimensions cycle 2..6, couplings
    alternate hermitian/ladder, baths alternate flat/thermal-ohmic.
    """
    rng = np.random.default_rng(seed)
    d = 2 + seed % 5
    ticks = rng.choice(np.arange(-128, 129), size=d, replace=False)
    ticks = np.sort(ticks)
    if seed % 3 == 0 and d >= 3:
        ticks[1] = ticks[0]
    spectrum = build_spectrum(ticks / 64.0)

    m = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / 2
    if seed % 2 == 0:
        couplings = hermitian_channel(m + m.conj().T)
    else:
        couplings = ladder_channels(m)

    if seed % 4 < 2:
        bath = flat_spectrum(couplings.n_channels, 0.1 + 0.4 * rng.random())
    else:
        beta = float(rng.choice([0.5, 1.0, 2.0, 5.0]))
        bath = thermal_ohmic_spectrum(0.1 + 0.3 * rng.random(), 5.0, beta,
                                      n_channels=couplings.n_channels)
    return spectrum, couplings, bath


BOX_SIZE = 108


@pytest.fixture(scope="session")
def system_box():
    """Seeded systems spanning d=2..6, with and without degeneracy,
    flat and thermal baths."""
    return [make_system(s) for s in range(BOX_SIZE)]


# registry filled by test_acceptance, printed after the run
ACCEPTANCE = []


def record_criterion(number, description, passed, metric):
    ACCEPTANCE.append((int(number), description, bool(passed), metric))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, desc, ok, metric in sorted(ACCEPTANCE):
        word = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[PRIMARY {n}] {desc}: {word} ({metric})")
