"""Run the complete-positivity probe against three generators.

One is a jump expansion and passes.  One has its gain terms negated,
which is the classic way a hand-derived kernel goes wrong, and the probe
returns a replayable witness state.  One is a resonance-argument kernel
whose Choi spectrum dips negative even though no state ever leaves the
cone within the probe horizon: the honest verdict there is inconclusive,
because positive maps that are not completely positive exist.
"""

import numpy as np

from qmekit.core import build_spectrum, hermitian_channel, ladder_channels
from qmekit.bath import flat_spectrum, thermal_ohmic_spectrum
from qmekit.kernels import build_kernel
from qmekit.dynamics import build_liouvillian
from qmekit.diagnostics import flip_gain_sign, map_check


def show(tag, result):
    print(f"{tag}: {result.verdict}")
    print(f"  probe times {tuple(round(t, 4) for t in result.probe_times)}")
    print(f"  min Choi eigenvalue {np.min(result.choi_min):.3e}, "
          f"scan minimum {result.scan_min:.3e}")
    if result.witness_ket is not None:
        print(f"  witness state at t={result.witness_time:g}: "
              f"{np.round(result.witness_ket, 4)}")
    print()


qubit = build_spectrum([0.0, 1.0])
ladder = ladder_channels(np.array([[0, 1], [0, 0]], dtype=complex))
qbath = flat_spectrum(2, 0.3)
good = build_kernel(qubit, ladder, qbath, "lindblad")
liouv = build_liouvillian(qubit, good)
show("jump expansion", map_check(liouv, good))

bad = flip_gain_sign(qubit, ladder, qbath)
show("gain-negated kernel", map_check(build_liouvillian(qubit, bad), bad))

three = build_spectrum([0.0, 5 / 16, 1.0])
coupling = hermitian_channel(
    np.array([[0.0, 0.7, 0.3], [0.7, 0.0, 0.55], [0.3, 0.55, 0.0]]))
rk = build_kernel(three, coupling, thermal_ohmic_spectrum(0.4, 5.0, 1.3),
                  "redfield-in")
show("incoming-resonance kernel", map_check(build_liouvillian(three, rk), rk))
