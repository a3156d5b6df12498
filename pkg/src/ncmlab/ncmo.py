"""The non-collapsing readout oracle and machines that query it.

A query is a circuit. The oracle runs it once: at each step it performs the
collapsing measurement of the first m_t qubits (outcome u_t, transcript
tau_t), and additionally reports one full-width readout v_t drawn from the
Born law of the post-measurement state. The joint law of (v_1, ..., v_T)
factors over the collapsing branch:

    Pr[v_1..v_T] = sum_tau Pr[tau] * prod_t Pr[v_t | state at tau_t]

so reads are conditionally independent given the branch, and v_t always
begins with u_t. ``oracle_exact`` materializes that law; ``oracle_sample``
draws from it by direct simulation; ``q_t``, ``q1`` and ``q2`` expose the
partial views used by the puzzle constructions.

Machines: a BaseMachine is a deterministic map from (instance, accuracy,
answers so far) to either the next query or a final output. Sessions against
a sampling backend give the output distribution; ``session_law`` computes it
exactly by nested enumeration when every backend law is available.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dist import FiniteDist, check_bits, mixture, product, push_forward
from .errors import (
    InstanceTooLargeError,
    ProtocolError,
    RetryBudgetExceededError,
    StructureError,
)
from .qsim import (
    BranchTree,
    Circuit,
    apply_step_unitary,
    enumerate_branches,
    initial_state,
    measure_first,
    outcome_probs,
    project_first,
    readout_dist,
    run_prefix,
)

MAX_EXACT_OUTPUT_BITS = 20
DEFAULT_RETRY_BUDGET = 10 ** 6

Transcript = tuple[str, ...]


@dataclass(frozen=True)
class OracleOutput:
    """The T full-width readouts of one oracle call."""

    reads: tuple[str, ...]

    def flat(self) -> str:
        return "".join(self.reads)


def oracle_sample(circuit: Circuit, rng: np.random.Generator) -> OracleOutput:
    """One oracle call by direct simulation.

    Samples the collapsing branch step by step and, after each collapse,
    draws an independent full-width readout of the current state.
    """
    n = circuit.qubits
    state = initial_state(n)
    reads = []
    for step in circuit.steps:
        state = apply_step_unitary(state, step, n)
        u, state, _ = measure_first(state, step.measure, n, rng)
        v = readout_dist(state, n).sample(rng)
        # the readout must extend the collapsing outcome
        assert v[:step.measure] == u, "readout disagrees with its branch"
        reads.append(v)
    return OracleOutput(reads=tuple(reads))


def oracle_sample_many(circuit: Circuit, shots: int,
                       rng: np.random.Generator) -> list[OracleOutput]:
    """Vectorized oracle calls sharing one simulation per branch prefix.

    Walks the measurement tree once, splitting the shot population
    multinomially at each collapse using freshly computed Born weights, and
    drawing all readouts for a group at once. The per-shot law is identical
    to ``oracle_sample``; only the bookkeeping is batched.
    """
    n = circuit.qubits
    out: list[list[str] | None] = [None] * shots
    groups = [(initial_state(n), list(range(shots)), [])]
    for step in circuit.steps:
        next_groups = []
        for state, members, prefix in groups:
            evolved = apply_step_unitary(state, step, n)
            m = step.measure
            if m == 0:
                splits = [("", evolved, members)]
            else:
                probs = np.clip(outcome_probs(evolved, m, n), 0.0, None)
                probs = probs / probs.sum()
                counts = rng.multinomial(len(members), probs)
                splits = []
                start = 0
                for idx, cnt in enumerate(counts):
                    if cnt == 0:
                        continue
                    post, _ = project_first(evolved, m, idx, n)
                    splits.append((format(idx, f"0{m}b"), post,
                                   members[start:start + cnt]))
                    start += cnt
            for u, post, sub in splits:
                dist = readout_dist(post, n)
                for shot, v in zip(sub, dist.sample_many(rng, len(sub))):
                    row = out[shot]
                    if row is None:
                        row = []
                        out[shot] = row
                    row.append(v)
                next_groups.append((post, sub, prefix + [u]))
        groups = next_groups
    return [OracleOutput(reads=tuple(row)) for row in out]


def _guard_output_bits(circuit: Circuit, what: str):
    bits = circuit.depth * circuit.qubits
    if bits > MAX_EXACT_OUTPUT_BITS:
        raise InstanceTooLargeError(
            f"{what} would materialize 2^{bits} outputs; the cap is "
            f"T*n <= {MAX_EXACT_OUTPUT_BITS} bits. Use the factored views "
            f"(q_t, q1, q2) instead.")


def oracle_exact(circuit: Circuit,
                 tree: BranchTree | None = None) -> FiniteDist:
    """Exact joint law of (v_1, ..., v_T), concatenated."""
    _guard_output_bits(circuit, "oracle_exact")
    if tree is None:
        tree = enumerate_branches(circuit)
    parts = []
    for leaf in tree.leaves():
        readouts = [node.readout for node in tree.path(leaf.outcomes)]
        parts.append((leaf.prob, product(readouts)))
    return mixture(parts)


# -- partial views ------------------------------------------------------------

def _check_step_index(circuit: Circuit, t: int):
    if not 1 <= t <= circuit.depth:
        raise StructureError(f"step index {t} outside 1..{circuit.depth}")


def q_t(circuit: Circuit, t: int,
        rng: np.random.Generator) -> tuple[Transcript, str]:
    """Sample (tau_t, w_t): run t steps, read out, strip the u_t prefix."""
    _check_step_index(circuit, t)
    tau, state = run_prefix(circuit, t, rng)
    v = readout_dist(state, circuit.qubits).sample(rng)
    return tau, v[circuit.steps[t - 1].measure:]


def suffix_readout(node_readout: FiniteDist, m: int) -> FiniteDist:
    """Drop the first m bits of a readout law (they are branch-constant)."""
    return push_forward(node_readout, lambda s: s[m:])


def q_t_law(circuit: Circuit, t: int,
            tree: BranchTree | None = None) -> FiniteDist:
    """Exact law of tau_t || w_t, transcripts flattened."""
    _check_step_index(circuit, t)
    if tree is None:
        tree = enumerate_branches(circuit)
    m = circuit.steps[t - 1].measure
    parts = []
    for node in tree.nodes_at(t):
        flat = "".join(node.outcomes)
        w = suffix_readout(node.readout, m)
        parts.append((node.prob, push_forward(w, lambda s, f=flat: f + s)))
    return mixture(parts)


def _validate_transcript(circuit: Circuit, tau: Transcript):
    if len(tau) > circuit.depth:
        raise StructureError(
            f"transcript of length {len(tau)} for a depth-{circuit.depth} circuit")
    for i, u in enumerate(tau):
        check_bits(u)
        if len(u) != circuit.steps[i].measure:
            raise StructureError(
                f"transcript entry {i + 1} has width {len(u)}, step measures "
                f"{circuit.steps[i].measure}")


def q1_law(circuit: Circuit, tau: Transcript,
           tree: BranchTree | None = None) -> FiniteDist:
    """Exact law of the remaining collapsing outcomes u_{t+1}..u_T given tau."""
    _validate_transcript(circuit, tau)
    if tree is None:
        tree = enumerate_branches(circuit)
    base = tree.node(tuple(tau))
    out: dict[str, float] = {}

    def walk(node, acc):
        if node.depth == circuit.depth:
            out[acc] = out.get(acc, 0.0) + node.prob / base.prob
            return
        for ch in node.children:
            walk(ch, acc + ch.outcomes[-1])

    walk(base, "")
    return FiniteDist(out)


def q2_law(circuit: Circuit, tau: Transcript,
           tree: BranchTree | None = None) -> FiniteDist:
    """Exact law of w_1..w_t given tau: independent readouts along the path."""
    _validate_transcript(circuit, tau)
    if tree is None:
        tree = enumerate_branches(circuit)
    nodes = tree.path(tuple(tau))
    return product([
        suffix_readout(node.readout, circuit.steps[i].measure)
        for i, node in enumerate(nodes)])


def _rejection_run(circuit: Circuit, tau: Transcript,
                   rng: np.random.Generator,
                   budget: int) -> tuple[Transcript, list[str]]:
    """Full oracle runs until the first len(tau) collapses match tau."""
    t = len(tau)
    for _ in range(budget):
        output = oracle_sample(circuit, rng)
        us = tuple(output.reads[i][:circuit.steps[i].measure]
                   for i in range(circuit.depth))
        if us[:t] == tuple(tau):
            return us, list(output.reads)
    raise RetryBudgetExceededError(
        f"no oracle run matched the transcript within {budget} attempts")


def q1(circuit: Circuit, tau: Transcript, rng: np.random.Generator,
       policy: str = "exact",
       budget: int = DEFAULT_RETRY_BUDGET) -> Transcript:
    """Sample the remaining collapsing outcomes given a transcript prefix.

    policy 'exact' draws from the branch-tree conditional; 'rejection'
    reruns the oracle until the prefix matches, which is the operational
    reading but can exhaust its budget.
    """
    _validate_transcript(circuit, tau)
    t = len(tau)
    if policy == "rejection":
        us, _ = _rejection_run(circuit, tau, rng, budget)
        return us[t:]
    if policy != "exact":
        raise StructureError(f"unknown policy {policy!r}")
    law = q1_law(circuit, tau)
    flat = law.sample(rng)
    widths = [s.measure for s in circuit.steps[t:]]
    outs, pos = [], 0
    for w in widths:
        outs.append(flat[pos:pos + w])
        pos += w
    return tuple(outs)


def q2(circuit: Circuit, tau: Transcript, rng: np.random.Generator,
       policy: str = "exact",
       budget: int = DEFAULT_RETRY_BUDGET) -> tuple[str, ...]:
    """Sample the non-collapsing suffixes w_1..w_t given a transcript."""
    _validate_transcript(circuit, tau)
    t = len(tau)
    if policy == "rejection":
        _, reads = _rejection_run(circuit, tau, rng, budget)
        return tuple(reads[i][circuit.steps[i].measure:] for i in range(t))
    if policy != "exact":
        raise StructureError(f"unknown policy {policy!r}")
    tree = enumerate_branches(circuit)
    nodes = tree.path(tuple(tau))
    ws = []
    for i, node in enumerate(nodes):
        m = circuit.steps[i].measure
        ws.append(suffix_readout(node.readout, m).sample(rng))
    return tuple(ws)


# -- machines and sessions ----------------------------------------------------

@dataclass(frozen=True)
class NextQuery:
    circuit: Circuit


@dataclass(frozen=True)
class FinalOutput:
    bits: str


class BaseMachine:
    """Deterministic machine with an oracle-query budget.

    Subclasses implement ``step(x, eps, history)`` where history is the
    tuple of OracleOutput answers so far, returning NextQuery or
    FinalOutput. Determinism is part of the contract: the same arguments
    must always produce the same result.
    """

    query_bound: int = 1

    def step(self, x: str, eps: float,
             history: tuple[OracleOutput, ...]) -> NextQuery | FinalOutput:
        raise NotImplementedError


class FnMachine(BaseMachine):
    """Adapter turning a plain function into a BaseMachine."""

    def __init__(self, fn: Callable, query_bound: int = 1):
        self._fn = fn
        self.query_bound = query_bound

    def step(self, x, eps, history):
        return self._fn(x, eps, history)


def oracle_backend(circuit: Circuit, rng: np.random.Generator) -> OracleOutput:
    return oracle_sample(circuit, rng)


def run_session(machine: BaseMachine, x: str, eps: float,
                backend: Callable[[Circuit, np.random.Generator], OracleOutput],
                rng: np.random.Generator) -> str:
    """Drive a machine against a sampling backend until it halts."""
    history: tuple[OracleOutput, ...] = ()
    queries = 0
    while True:
        move = machine.step(x, eps, history)
        if isinstance(move, FinalOutput):
            return check_bits(move.bits)
        if not isinstance(move, NextQuery):
            raise ProtocolError(f"machine returned {type(move).__name__}")
        queries += 1
        if queries > machine.query_bound:
            raise ProtocolError(
                f"machine exceeded its query bound of {machine.query_bound}")
        history = history + (backend(move.circuit, rng),)


def _split_reads(circuit: Circuit, flat: str) -> OracleOutput:
    n = circuit.qubits
    return OracleOutput(reads=tuple(
        flat[i * n:(i + 1) * n] for i in range(circuit.depth)))


def session_law(machine: BaseMachine, x: str, eps: float,
                backend_law: Callable[[Circuit, int], FiniteDist]) -> FiniteDist:
    """Exact output law of a session, enumerating every answer path.

    ``backend_law(circuit, k)`` is the exact answer law (flattened reads)
    for the k-th query, counted from 0, so hybrid backends can switch per
    query position.
    """
    out: dict[str, float] = {}

    def walk(history: tuple[OracleOutput, ...], weight: float, queries: int):
        move = machine.step(x, eps, history)
        if isinstance(move, FinalOutput):
            key = check_bits(move.bits)
            out[key] = out.get(key, 0.0) + weight
            return
        if not isinstance(move, NextQuery):
            raise ProtocolError(f"machine returned {type(move).__name__}")
        if queries + 1 > machine.query_bound:
            raise ProtocolError(
                f"machine exceeded its query bound of {machine.query_bound}")
        law = backend_law(move.circuit, queries)
        for flat, p in law.items():
            walk(history + (_split_reads(move.circuit, flat),),
                 weight * p, queries + 1)

    walk((), 1.0, 0)
    return FiniteDist(out)


def exact_oracle_backend_law(circuit: Circuit, k: int = 0) -> FiniteDist:
    return oracle_exact(circuit)


@dataclass(frozen=True)
class PdqpInstanceFamily:
    """A machine together with its instance ensemble.

    ``instance_laws`` maps a security parameter to the exact law of the
    instance generator. ``reference`` optionally pins the target
    distribution per instance for accuracy audits.
    """

    machine: BaseMachine
    instance_laws: dict[int, FiniteDist] = field(default_factory=dict)
    reference: dict[str, FiniteDist] = field(default_factory=dict)

    def instance_law(self, lam: int) -> FiniteDist:
        if lam not in self.instance_laws:
            raise StructureError(f"no instance law for parameter {lam}")
        return self.instance_laws[lam]

    def sample_instance(self, lam: int, rng: np.random.Generator) -> str:
        return self.instance_law(lam).sample(rng)

    def circuit_for(self, x: str, eps: float = 0.5) -> Circuit:
        move = self.machine.step(x, eps, ())
        if not isinstance(move, NextQuery):
            raise StructureError(
                "machine halts without querying; the instance has no circuit")
        return move.circuit

    def output_law(self, x: str, eps: float = 0.5,
                   backend_law=None) -> FiniteDist:
        if backend_law is None:
            backend_law = exact_oracle_backend_law
        return session_law(self.machine, x, eps, backend_law)

    def check_reference(self, x: str, eps: float) -> float:
        from .dist import sd as _sd
        if x not in self.reference:
            raise StructureError(f"no reference law for instance {x!r}")
        return _sd(self.output_law(x, eps), self.reference[x])


class _OneBitWrapped(BaseMachine):
    def __init__(self, inner: BaseMachine):
        self._inner = inner
        self.query_bound = inner.query_bound

    def step(self, x, eps, history):
        move = self._inner.step(x, eps, history)
        if isinstance(move, FinalOutput) and len(move.bits) != 1:
            raise StructureError(
                f"decision machine produced {len(move.bits)} output bits, "
                f"expected exactly 1")
        return move


def decision_as_sampling(machine: BaseMachine,
                         instance_laws: dict[int, FiniteDist] | None = None,
                         ) -> PdqpInstanceFamily:
    """View a one-bit decision machine as a sampling family.

    The wrapped machine's output law is untouched; outputs longer than one
    bit raise at evaluation time.
    """
    return PdqpInstanceFamily(machine=_OneBitWrapped(machine),
                              instance_laws=instance_laws or {})
