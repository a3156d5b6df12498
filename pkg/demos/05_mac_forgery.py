"""
Forging one-time tags from collisions
=====================================

The toy tagging scheme encodes a random key pair (x, theta) in conjugate
bases and publishes a table digest of it as the verification key. Signing
measures the encoded qubits in the bases the message selects. Verification
accepts any answer consistent with some preimage of the digest, so every
signature in the honest conditional verifies, and the only way a collision
pair can lose the forgery game is by repeating the same message.
"""

import numpy as np

from ncmlab.primitives import (algorithm_c_mac, mac_break_exact,
                               mac_break_via_collision, naive_forge_win_exact,
                               toy_mac)

rng = np.random.default_rng(11)
mac = toy_mac(4, 4, rng)

# honest round trip
vk, (x, theta) = mac.gen(rng)
m = "1010"
sigma = mac.sign(x, theta, m, rng)
print(f"vk={vk}  m={m}  sigma={sigma}  verifies={mac.ver(vk, m, sigma)}")
assert mac.ver(vk, m, sigma)

# Two collision answers are two independent draws of (message, signature)
# given the digest. Both verify; the pair forges unless the messages tie,
# and the messages are uniform, so the win rate is 1 - 2^-4 no matter what
# the table looks like.
exact = mac_break_exact(mac)
print(f"\ncollision forgery, closed form : {exact:.6f}")
print(f"target 1 - 2^-4               : {1 - 2 ** -4:.6f}")
assert abs(exact - (1 - 2 ** -4)) <= 1e-12

report = mac_break_via_collision(mac, trials=2000, rng=rng)
print(f"empirical over {report.trials} games : {report.rate:.4f}")
assert abs(report.rate - exact) <= 0.05

# A forger without collision access: measure the signing key once in the
# computational basis and submit that single readout under two messages.
# Its win depends on the table and stays a constant factor behind.
print(f"\nmeasure-once forger, this table: {naive_forge_win_exact(mac):.6f}")

# The collision pairs above come from a retrying procedure: sample digests
# until the same one appears twice, keeping the first and last answers.
# Retries follow a mixture of geometrics over the digest law.
small = toy_mac(2, 2, rng)
counts = [algorithm_c_mac(small, rng)[5] for _ in range(400)]
support = len(small.vk_law())
print(f"\nretry counts on a 4-bit table: mean {np.mean(counts):.2f}, "
      f"digest support minus one = {support - 1}")
