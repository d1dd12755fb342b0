"""The emitter-cascade cross-check, run as an executable verification.

Replacing the one-photon input by a two-level emitter ancilla (prepared
excited, with decaying coupling matched to the envelope) cascaded ahead of
the system gives an ordinary vacuum problem on the joint space whose
ancilla corners, rescaled by the remaining envelope mass, must reproduce
every hierarchy block.  The same construction with a diagonal modulator
ancilla covers coherent combinations.  Agreement at 1e-6 or better over
the region where the weights have not emptied is the package's strongest
internal consistency statement; the same check is available from the
command line as `qtraj oracle-check`.
"""

import numpy as np

from qtraj import (
    PhotonField,
    SlhTriple,
    TimeGrid,
    gaussian_wavepacket,
    two_level,
)
from qtraj.hierarchy import compare_blocks, run_master, run_oracle
from qtraj.operators import cavity

tl = two_level()
wp = gaussian_wavepacket(1.46, 3.0)
field = PhotonField(gamma=np.array([[1.0, 0.0], [0.0, 0.0]]), wavepacket=wp)
grid = TimeGrid(0.0, 8.0, 1e-3)

systems = {
    "two-level atom": (SlhTriple(tl["identity"], tl["sigma_minus"], np.zeros((2, 2))),
                       tl["proj_g"]),
}
cv = cavity(4)
vac4 = np.zeros((4, 4), dtype=complex)
vac4[0, 0] = 1.0
systems["detuned cavity (4 levels)"] = (
    SlhTriple(cv["identity"], cv["annihilation"], 0.5 * cv["number"]), vac4)
systems["atom with scattering phase"] = (
    SlhTriple(np.exp(0.7j) * tl["identity"], tl["sigma_minus"], 0.3 * tl["sz"]),
    tl["proj_g"])

print("hierarchy vs cascaded-pair reconstruction, one-photon input")
for name, (G, rho0) in systems.items():
    run = run_master(G, field, rho0, grid)
    oracle = run_oracle(G, field, rho0, grid)
    devs = compare_blocks(run, oracle)
    cover = float(np.mean(oracle.valid))
    print(f"  {name:28s} max block deviation {max(devs.values()):.2e} "
          f"(valid on {cover:.0%} of samples)")
