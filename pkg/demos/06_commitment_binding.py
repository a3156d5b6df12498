"""
One commitment, two openings
============================

The toy bit commitment hashes a superposed key register through a public
table and sends the measured digest; the committed bit rides along as the
first key bit. Whether collisions break binding turns on how literally the
sender's state is read.

The coherent reading keeps the full superposition, so conditioning on the
digest leaves both bit values available whenever the digest class carries
both parities. The literal reading regenerates from the bit-0 commit alone,
and its second opening then always carries the wrong first bit.
"""

import numpy as np

from ncmlab.primitives import (ToyCommitment, algorithm_c_com_success,
                               balanced_table, both_parity_mass,
                               com_break_exact, com_break_via_collision,
                               com_to_dcrpuzz, hiding_and_correctness_audit)

# A deterministic table whose digest classes are parity-balanced except for
# two deliberately lopsided ones, sized so every exact value below is a
# small dyadic rational.
com = ToyCommitment(3, 1, balanced_table(3, 1))

print(f"hiding distance between the two commit laws: {com.hiding_sd():.6f}")

both = both_parity_mass(com)
print(f"digest mass whose class holds both bit values: {both:.6f}")

# Collision answers under the coherent reading open to independent uniform
# bits on both-parity digests, so the binding break succeeds with exactly
# half that mass.
coherent = com_to_dcrpuzz(com, "coherent")
win = com_break_exact(com, coherent)
print(f"\ncoherent collision break, exact : {win:.6f}")
print(f"half the both-parity mass       : {0.5 * both:.6f}")
assert abs(win - 0.5 * both) <= 1e-12

rng = np.random.default_rng(5)
report = com_break_via_collision(com, trials=4000, rng=rng, form="coherent")
print(f"empirical over {report.trials} games  : {report.rate:.4f}")

# The literal reading never wins. Its collision pairs reuse bit-0 keys, and
# the receiver checks the first bit of the opened key.
literal = com_to_dcrpuzz(com, "literal")
lit = com_break_exact(com, literal)
print(f"\nliteral collision break, exact  : {lit}")
assert lit == 0.0

# A double-opener that regenerates the sender state after the commit shows
# the same split.
print(f"double-opener success, coherent : "
      f"{algorithm_c_com_success(com, 'coherent'):.6f}")
print(f"double-opener success, literal  : "
      f"{algorithm_c_com_success(com, 'literal'):.6f}")

# The audit ties the pieces together: digests whose per-bit opening success
# clears 1 - 1/p on both sides contribute at least (1 - 1/p)^2 of their
# mass to the joint opening rate.
audit = hiding_and_correctness_audit(com, p=8.0)
print(f"\naudit at p = 8 (threshold {1 - 1 / 8.0:.3f})")
print(f"  good digests for bit 0: {sorted(audit.g0)}")
print(f"  good digests for bit 1: {sorted(audit.g1)}")
print(f"  good mass  {audit.good_mass:.6f}")
print(f"  bound      {audit.bound:.6f}")
print(f"  both open  {audit.both_open:.6f}")
print(f"  holds      {audit.holds}")
assert audit.holds
