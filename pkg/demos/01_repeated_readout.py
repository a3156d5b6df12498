"""
Two readouts of one branch
==========================

A Bell pair is prepared, the first qubit is collapsed, and the oracle then
reports two full-width readouts of the surviving state. Inside a branch the
two reads agree bit for bit, because the collapse froze the state onto one
computational-basis line. Across branches the mixture stays fifty-fifty, so
nothing about the marginal gives the repetition away.
"""

import numpy as np

from ncmlab.ncmo import oracle_exact, oracle_sample
from ncmlab.qsim import bell_circuit

# One collapsed qubit at step 1, then a silent step that only reads.
circuit = bell_circuit(measure_first_step=1, extra_steps=1)

law = oracle_exact(circuit)
print("joint law of (v1, v2) with the collapse:")
for flat, w in law.items():
    print(f"  v1={flat[:2]} v2={flat[2:]}  {w:.4f}")
assert set(law.support) == {"0000", "1111"}

# The same circuit with the collapse removed. Both readouts still agree
# within a run of the *oracle* only in half the mass: the state stays in
# superposition, so the two reads are drawn independently from it.
open_circuit = bell_circuit(measure_first_step=0, extra_steps=1)
open_law = oracle_exact(open_circuit)
print("\nwithout the mid-circuit collapse:")
for flat, w in open_law.items():
    print(f"  v1={flat[:2]} v2={flat[2:]}  {w:.4f}")
assert set(open_law.support) == {"0000", "0011", "1100", "1111"}

# The two-bit marginal of v1 is uniform over 00 and 11 in both circuits.
# Comparing v1 against v2 is what tells the two worlds apart.
rng = np.random.default_rng(7)
print("\nfive live sessions of the collapsed circuit:")
for _ in range(5):
    out = oracle_sample(circuit, rng)
    print(f"  v1={out.reads[0]} v2={out.reads[1]}")
    assert out.reads[0] == out.reads[1]

print("\nfive live sessions of the open circuit:")
for _ in range(5):
    out = oracle_sample(open_circuit, rng)
    flag = "agree" if out.reads[0] == out.reads[1] else "differ"
    print(f"  v1={out.reads[0]} v2={out.reads[1]}  ({flag})")
