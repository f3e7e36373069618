import json
import os
import subprocess
import sys

import numpy as np

PROBE = r"""
import json
import numpy as np
from dtph import DescriptorSystem, _accel
from dtph.classify import classify
from dtph.matcore import eigvals_general
from dtph.sim import simulate

rng = np.random.default_rng(3)
M = rng.standard_normal((6, 6))
Mc = M + 1j * rng.standard_normal((6, 6))
ev = np.sort_complex(eigvals_general(M))
evc = np.sort_complex(eigvals_general(Mc))
s = DescriptorSystem(1, 0.5, 0.5, 0, 1)
rep = classify(s, audit_trajectories=0, n_angles=8)
tr = simulate(DescriptorSystem(np.eye(2), [[0.5, 0.1], [0.0, 0.3]], np.ones((2, 1)), np.ones((1, 2)), 0),
              np.ones(6), np.zeros(2))
print(json.dumps({
    "numba": _accel.USE_NUMBA,
    "ev": [[z.real, z.imag] for z in ev],
    "evc": [[z.real, z.imag] for z in evc],
    "verdicts": rep.verdicts,
    "y": tr.y.ravel().tolist(),
}))
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("DTPH_DISABLE_NUMBA", None)
    if disable:
        env["DTPH_DISABLE_NUMBA"] = "1"
    r = subprocess.run([sys.executable, "-c", PROBE], capture_output=True, text=True, env=env, timeout=300)
    assert r.returncode == 0, r.stderr
    return json.loads(r.stdout)


def test_numba_and_numpy_paths_agree():
    fast, slow = _run(False), _run(True)
    assert fast["numba"] is True and slow["numba"] is False
    assert fast["verdicts"] == slow["verdicts"]
    for k in ("ev", "evc", "y"):
        assert np.allclose(fast[k], slow[k], atol=1e-10)
