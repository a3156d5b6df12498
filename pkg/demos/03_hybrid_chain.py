"""
Walking the hybrid chain
========================

B(k) answers the first k oracle queries genuinely and fakes the rest from
the transcript with an adversary's guesses. B(T) is the real oracle, B(0)
is the fully simulated one. The distance between adjacent hybrids equals,
exactly, the adversary's single-step guessing distance at that step, so the
endpoint distance telescopes into a sum of per-step terms.
"""

from ncmlab.puzzles import per_step_sd, step_adversary
from ncmlab.qsim import bell_circuit

# Bell pair, first qubit collapsed at step 1, one extra readout step.
circuit = bell_circuit(measure_first_step=1, extra_steps=1)
x = "0"


def show(report, name):
    print(f"adversary: {name}")
    for t, (h, s) in enumerate(zip(report.hybrid_gaps, report.step_gaps), 1):
        print(f"  step {t}:  SD(B({t - 1}), B({t})) = {h:.6f}   "
              f"single-step gap = {s:.6f}   diff {abs(h - s):.1e}")
        assert abs(h - s) <= 1e-9
    print(f"  endpoint SD(B(0), B(T)) = {report.endpoint_gap:.6f}")
    print(f"  telescoped sum          = {report.telescoped:.6f}")
    assert report.endpoint_gap <= report.telescoped + 1e-12
    print()


# An adversary that ignores the transcript and guesses uniformly leaves
# visible gaps at both steps.
show(per_step_sd(x, circuit, step_adversary("oblivious")), "oblivious")

# One that reproduces the exact conditional readout law closes every gap,
# which makes the simulated chain indistinguishable from the oracle.
report = per_step_sd(x, circuit, step_adversary("perfect"))
show(report, "perfect")
assert report.endpoint_gap == 0.0
assert all(g == 0.0 for g in report.hybrid_gaps)

# Rejection sampling with a finite retry budget targets the same law as the
# perfect adversary, so its exact chain distances are identical.
show(per_step_sd(x, circuit, step_adversary("rejection:64")), "rejection:64")
