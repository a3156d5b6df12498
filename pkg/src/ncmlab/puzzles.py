"""Puzzles built from oracle runs, and the hybrid argument around them.

The sampler takes an instance x, picks a step t uniformly, runs the first t
steps of x's circuit, and publishes puzz = (x, t, tau_t) with the read's
unmeasured suffix w_t as the answer. Solving means reproducing the
conditional law of w_t given the transcript.

The hybrid machine B(k) answers reads 1..k genuinely (Born readout of the
post-measurement state) and reads k+1..T with adversary guesses w'_i glued
onto the true collapsing outcome u_i. B(T) is the oracle, B(0) is the
guess-everything machine. Two exact identities drive all the checks here:

  per-step collapse:  SD(B(t-1), B(t)) = SD({tau_t, w_t}, {tau_t, A(tau_t)})
  telescoping:        SD(B(0), B(T)) <= sum_t SD(B(t-1), B(t))

Advantage of an adversary against a puzzle sampler is the statistical
distance between {puzz, ans} and {puzz, A(puzz)}.

Encodings (fixed widths, so joints stay FiniteDists):
  puzz  = x | t as 8 big-endian bits | flattened tau zero-padded to the
          family's widest transcript. Widths are taken over the declared
          instance support, so one layout covers the whole law.
  ans   = w_t zero-padded to the family's widest read.
  aux z = len(x) as 8 bits | x | a run of floor(1/eps) ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dist import (
    FiniteDist,
    check_bits,
    condition,
    mixture,
    product,
    push_forward,
    sd,
)
from .errors import ParseError, StructureError
from .ncmo import (
    BaseMachine,
    DEFAULT_RETRY_BUDGET,
    OracleOutput,
    PdqpInstanceFamily,
    Transcript,
    _guard_output_bits,
    _rejection_run,
    oracle_exact,
    oracle_sample,
    q_t_law,
    run_prefix,
    run_session,
    session_law,
    suffix_readout,
)
from .qsim import (
    BranchTree,
    Circuit,
    apply_step_unitary,
    enumerate_branches,
    initial_state,
    measure_first,
    readout_dist,
)

T_FIELD_BITS = 8


# -- step adversaries ---------------------------------------------------------

class StepAdversary:
    """Guesses the unread suffix w_t from (x, circuit, t, tau_t).

    ``law`` is the exact guess distribution, used by every closed-form
    identity; ``guess`` draws from it (or from whatever process the kind
    defines). Build one per conceptual attacker.
    """

    kind = "custom"

    def law(self, x: str, circuit: Circuit, t: int,
            tau: Transcript) -> FiniteDist:
        raise NotImplementedError

    def guess(self, x: str, circuit: Circuit, t: int, tau: Transcript,
              rng: np.random.Generator) -> str:
        return self.law(x, circuit, t, tau).sample(rng)


def _tree_for(circuit: Circuit, cache: dict) -> BranchTree:
    tree = cache.get(id(circuit))
    if tree is None or tree.circuit is not circuit:
        tree = enumerate_branches(circuit)
        cache[id(circuit)] = tree
    return tree


class PerfectAdversary(StepAdversary):
    """Answers with the exact conditional of w_t given the transcript."""

    kind = "perfect"

    def __init__(self):
        self._trees: dict = {}

    def law(self, x, circuit, t, tau):
        tree = _tree_for(circuit, self._trees)
        node = tree.node(tuple(tau))
        return suffix_readout(node.readout, circuit.steps[t - 1].measure)


class RejectionAdversary(StepAdversary):
    """Re-runs the oracle until the transcript matches, then reads w_t.

    Its target law is the exact conditional, so closed-form identities use
    that; the sampling path really does rejection with a retry budget.
    """

    kind = "rejection"

    def __init__(self, budget: int = DEFAULT_RETRY_BUDGET):
        self.budget = budget
        self._perfect = PerfectAdversary()

    def law(self, x, circuit, t, tau):
        return self._perfect.law(x, circuit, t, tau)

    def guess(self, x, circuit, t, tau, rng):
        _, reads = _rejection_run(circuit, tuple(tau), rng, self.budget)
        return reads[t - 1][circuit.steps[t - 1].measure:]


class ObliviousAdversary(StepAdversary):
    """Ignores the transcript and guesses uniformly."""

    kind = "oblivious"

    def law(self, x, circuit, t, tau):
        return FiniteDist.uniform(circuit.qubits - circuit.steps[t - 1].measure)


class ConstantAdversary(StepAdversary):
    """Always guesses a fixed bit value, a minimal custom attacker."""

    kind = "custom"

    def __init__(self, bit: str = "0"):
        if bit not in ("0", "1"):
            raise StructureError("constant adversary bit must be '0' or '1'")
        self.bit = bit

    def law(self, x, circuit, t, tau):
        width = circuit.qubits - circuit.steps[t - 1].measure
        return FiniteDist.point(self.bit * width)


def step_adversary(kind: str) -> StepAdversary:
    """Build a step adversary from a short name like 'rejection:5000'."""
    name, _, arg = kind.partition(":")
    if name == "perfect":
        return PerfectAdversary()
    if name == "oblivious":
        return ObliviousAdversary()
    if name == "rejection":
        return RejectionAdversary(int(arg) if arg else DEFAULT_RETRY_BUDGET)
    if name == "constant":
        return ConstantAdversary(arg or "0")
    raise StructureError(f"unknown adversary kind {kind!r}")


# -- hybrid machines ----------------------------------------------------------

def hybrid_b(k: int, x: str, circuit: Circuit, adv: StepAdversary,
             rng: np.random.Generator) -> OracleOutput:
    """One draw from hybrid B(k): genuine reads up to k, guesses after."""
    if not 0 <= k <= circuit.depth:
        raise StructureError(f"hybrid index {k} outside 0..{circuit.depth}")
    n = circuit.qubits
    state = initial_state(n)
    tau: Transcript = ()
    reads = []
    for i, step in enumerate(circuit.steps, start=1):
        state = apply_step_unitary(state, step, n)
        u, state, _ = measure_first(state, step.measure, n, rng)
        tau = tau + (u,)
        if i <= k:
            reads.append(readout_dist(state, n).sample(rng))
        else:
            reads.append(u + adv.guess(x, circuit, i, tau, rng))
    return OracleOutput(reads=tuple(reads))


def hybrid_b_law(k: int, x: str, circuit: Circuit, adv: StepAdversary,
                 tree: BranchTree | None = None) -> FiniteDist:
    """Exact output law of hybrid B(k), concatenated reads."""
    if not 0 <= k <= circuit.depth:
        raise StructureError(f"hybrid index {k} outside 0..{circuit.depth}")
    _guard_output_bits(circuit, "hybrid_b_law")
    if tree is None:
        tree = enumerate_branches(circuit)
    parts = []
    for leaf in tree.leaves():
        path = tree.path(leaf.outcomes)
        dists = []
        for i, node in enumerate(path, start=1):
            if i <= k:
                dists.append(node.readout)
            else:
                u = node.outcomes[-1]
                guess = adv.law(x, circuit, i, node.outcomes)
                dists.append(push_forward(guess, lambda s, u=u: u + s))
        parts.append((leaf.prob, product(dists)))
    return mixture(parts)


def q_star(x: str, circuit: Circuit, adv: StepAdversary,
           rng: np.random.Generator) -> OracleOutput:
    """The guess-everything machine: hybrid B(0)."""
    return hybrid_b(0, x, circuit, adv, rng)


def q_star_law(x: str, circuit: Circuit, adv: StepAdversary,
               tree: BranchTree | None = None) -> FiniteDist:
    return hybrid_b_law(0, x, circuit, adv, tree)


def step_pair_law(x: str, circuit: Circuit, t: int, adv: StepAdversary | None,
                  tree: BranchTree | None = None) -> FiniteDist:
    """Law of tau_t || w_t (adv None) or tau_t || A(tau_t) (adv given)."""
    if tree is None:
        tree = enumerate_branches(circuit)
    if adv is None:
        return q_t_law(circuit, t, tree)
    parts = []
    for node in tree.nodes_at(t):
        flat = "".join(node.outcomes)
        guess = adv.law(x, circuit, t, node.outcomes)
        parts.append((node.prob, push_forward(guess, lambda s, f=flat: f + s)))
    return mixture(parts)


@dataclass(frozen=True)
class HybridReport:
    """Exact distances along the hybrid chain for one circuit."""

    hybrid_gaps: tuple[float, ...]      # SD(B(t-1), B(t)) for t = 1..T
    step_gaps: tuple[float, ...]        # SD({tau_t,w_t}, {tau_t,A}) for t = 1..T
    endpoint_gap: float                 # SD(B(0), B(T))

    @property
    def telescoped(self) -> float:
        return sum(self.hybrid_gaps)


def per_step_sd(x: str, circuit: Circuit, adv: StepAdversary) -> HybridReport:
    """Exact hybrid-chain distances; the two gap lists agree entrywise."""
    tree = enumerate_branches(circuit)
    laws = [hybrid_b_law(k, x, circuit, adv, tree)
            for k in range(circuit.depth + 1)]
    hybrid_gaps = tuple(sd(laws[t - 1], laws[t])
                        for t in range(1, circuit.depth + 1))
    step_gaps = tuple(
        sd(step_pair_law(x, circuit, t, None, tree),
           step_pair_law(x, circuit, t, adv, tree))
        for t in range(1, circuit.depth + 1))
    return HybridReport(hybrid_gaps=hybrid_gaps, step_gaps=step_gaps,
                        endpoint_gap=sd(laws[0], laws[-1]))


# -- puzzle samplers ----------------------------------------------------------

class PuzzleSampler:
    """A puzzle source: seeded sampling plus an exact joint law."""

    puzz_len: int
    ans_len: int

    def sample(self, rng: np.random.Generator) -> tuple[str, str]:
        raise NotImplementedError

    def joint_law(self) -> FiniteDist:
        raise NotImplementedError

    def puzzle_marginal(self) -> FiniteDist:
        return push_forward(self.joint_law(), lambda s: s[:self.puzz_len])

    def conditional(self, puzz: str) -> FiniteDist:
        return condition(self.joint_law(), puzz)


@dataclass(frozen=True)
class PuzzleLayout:
    """Fixed-width field layout for instance-derived puzzles."""

    x_len: int
    tau_width: int          # flattened transcript, zero-padded
    ans_width: int          # w_t, zero-padded
    include_x: bool = True

    @property
    def puzz_len(self) -> int:
        x_part = self.x_len if self.include_x else 0
        return x_part + T_FIELD_BITS + self.tau_width


def _flatten_pad(parts: tuple[str, ...], width: int) -> str:
    flat = "".join(parts)
    if len(flat) > width:
        raise StructureError(f"transcript wider than layout ({len(flat)} > {width})")
    return flat + "0" * (width - len(flat))


class InstancePuzzleSampler(PuzzleSampler):
    """puzz = (x, t, tau_t), ans = w_t, over a declared instance family.

    eps only sizes the accuracy field of downstream solvers; the sampler
    itself is exact.
    """

    def __init__(self, fam: PdqpInstanceFamily, lam: int, eps: float = 0.5):
        self.fam = fam
        self.lam = lam
        self.eps = eps
        self.instances = fam.instance_law(lam)
        self._circuits = {x: fam.circuit_for(x, eps)
                          for x in self.instances.support}
        for x, c in self._circuits.items():
            if c.depth >= (1 << T_FIELD_BITS):
                raise StructureError(
                    f"instance {x!r} has {c.depth} steps; the t field holds "
                    f"at most {(1 << T_FIELD_BITS) - 1}")
        self.layout = PuzzleLayout(
            x_len=self.instances.length,
            tau_width=max(sum(c.measure_widths())
                          for c in self._circuits.values()),
            ans_width=max(c.qubits - m
                          for c in self._circuits.values()
                          for m in c.measure_widths()))
        self.puzz_len = self.layout.puzz_len
        self.ans_len = self.layout.ans_width
        self._trees = {x: enumerate_branches(c)
                       for x, c in self._circuits.items()}

    def circuit(self, x: str) -> Circuit:
        return self._circuits[x]

    def encode_puzz(self, x: str, t: int, tau: Transcript) -> str:
        lay = self.layout
        head = x if lay.include_x else ""
        return (head + format(t, f"0{T_FIELD_BITS}b")
                + _flatten_pad(tuple(tau), lay.tau_width))

    def decode_puzz(self, puzz: str) -> tuple[str, int, Transcript]:
        lay = self.layout
        if len(puzz) != self.puzz_len:
            raise ParseError(f"puzzle has {len(puzz)} bits, layout wants "
                             f"{self.puzz_len}")
        x = puzz[:lay.x_len]
        pos = lay.x_len
        t = int(puzz[pos:pos + T_FIELD_BITS], 2)
        pos += T_FIELD_BITS
        if x not in self._circuits:
            raise ParseError(f"unknown instance {x!r} in puzzle")
        c = self._circuits[x]
        if not 1 <= t <= c.depth:
            raise ParseError(f"step field {t} outside 1..{c.depth}")
        widths = c.measure_widths()[:t]
        tau = []
        for wdt in widths:
            tau.append(puzz[pos:pos + wdt])
            pos += wdt
        if puzz[pos:].strip("0"):
            raise ParseError("nonzero padding in puzzle transcript field")
        return x, t, tuple(tau)

    def pad_ans(self, w: str) -> str:
        if len(w) > self.ans_len:
            raise StructureError("answer wider than layout")
        return w + "0" * (self.ans_len - len(w))

    def true_ans_width(self, x: str, t: int) -> int:
        c = self._circuits[x]
        return c.qubits - c.steps[t - 1].measure

    def sample(self, rng: np.random.Generator) -> tuple[str, str]:
        x = self.instances.sample(rng)
        c = self._circuits[x]
        t = int(rng.integers(1, c.depth + 1))
        tau, state = run_prefix(c, t, rng)
        v = readout_dist(state, c.qubits).sample(rng)
        w = v[c.steps[t - 1].measure:]
        return self.encode_puzz(x, t, tau), self.pad_ans(w)

    def joint_law(self) -> FiniteDist:
        parts = []
        for x in self.instances.support:
            px = self.instances.prob(x)
            c = self._circuits[x]
            tree = self._trees[x]
            for t in range(1, c.depth + 1):
                m = c.steps[t - 1].measure
                for node in tree.nodes_at(t):
                    puzz = self.encode_puzz(x, t, node.outcomes)
                    w_law = suffix_readout(node.readout, m)
                    parts.append((
                        px * node.prob / c.depth,
                        push_forward(w_law,
                                     lambda s, p=puzz: p + self.pad_ans(s))))
        return mixture(parts)

    def per_step_terms(self, adv: StepAdversary) -> dict:
        """Exact SD terms of the advantage split by (x, t)."""
        terms = {}
        for x in self.instances.support:
            c = self._circuits[x]
            for t in range(1, c.depth + 1):
                tree = self._trees[x]
                honest = step_pair_law(x, c, t, None, tree)
                guessed = step_pair_law(x, c, t, adv, tree)
                terms[(x, t)] = sd(honest, guessed)
        return terms


class AuxInputPuzzleSampler(InstancePuzzleSampler):
    """Same construction with x moved into the auxiliary input z.

    The puzzle drops the instance field; everything is conditioned on the
    single instance carried by z.
    """

    def __init__(self, fam: PdqpInstanceFamily, z: str):
        x, eps = parse_aux_input(z)
        single = PdqpInstanceFamily(
            machine=fam.machine,
            instance_laws={len(x): FiniteDist.point(x)},
            reference=fam.reference)
        super().__init__(single, len(x), eps)
        self.z = z
        self.x = x
        self.layout = PuzzleLayout(
            x_len=len(x), tau_width=self.layout.tau_width,
            ans_width=self.layout.ans_width, include_x=False)
        self.puzz_len = self.layout.puzz_len

    def encode_puzz(self, x, t, tau):
        if x != self.x:
            raise StructureError("aux-input sampler is bound to one instance")
        return (format(t, f"0{T_FIELD_BITS}b")
                + _flatten_pad(tuple(tau), self.layout.tau_width))

    def decode_puzz(self, puzz):
        if len(puzz) != self.puzz_len:
            raise ParseError(f"puzzle has {len(puzz)} bits, layout wants "
                             f"{self.puzz_len}")
        t = int(puzz[:T_FIELD_BITS], 2)
        c = self._circuits[self.x]
        if not 1 <= t <= c.depth:
            raise ParseError(f"step field {t} outside 1..{c.depth}")
        pos = T_FIELD_BITS
        tau = []
        for wdt in c.measure_widths()[:t]:
            tau.append(puzz[pos:pos + wdt])
            pos += wdt
        if puzz[pos:].strip("0"):
            raise ParseError("nonzero padding in puzzle transcript field")
        return self.x, t, tuple(tau)


def samp_from_instance(fam: PdqpInstanceFamily, lam: int,
                       rng: np.random.Generator,
                       eps: float = 0.5) -> tuple[str, str]:
    """One puzzle draw from the instance construction."""
    return InstancePuzzleSampler(fam, lam, eps).sample(rng)


def encode_aux_input(x: str, eps: float) -> str:
    check_bits(x)
    if len(x) >= (1 << T_FIELD_BITS):
        raise StructureError("instance too wide for the aux-input header")
    if not 0 < eps <= 1:
        raise StructureError(f"accuracy eps must be in (0, 1], got {eps}")
    return format(len(x), f"0{T_FIELD_BITS}b") + x + "1" * int(1 / eps)


def parse_aux_input(z: str) -> tuple[str, float]:
    check_bits(z)
    if len(z) < T_FIELD_BITS:
        raise ParseError("aux input shorter than its header")
    x_len = int(z[:T_FIELD_BITS], 2)
    if len(z) < T_FIELD_BITS + x_len:
        raise ParseError("aux input truncates the instance field")
    x = z[T_FIELD_BITS:T_FIELD_BITS + x_len]
    unary = z[T_FIELD_BITS + x_len:]
    if "0" in unary:
        raise ParseError("accuracy field must be a run of ones")
    k = len(unary)
    if k == 0:
        raise ParseError("accuracy field is empty")
    return x, 1.0 / k


def aux_samp(fam: PdqpInstanceFamily, z: str,
             rng: np.random.Generator) -> tuple[str, str]:
    """One puzzle draw from the auxiliary-input construction."""
    return AuxInputPuzzleSampler(fam, z).sample(rng)


# -- puzzle adversaries and advantage ------------------------------------------

class PuzzleAdversary:
    """Maps a puzzle to a guessed answer; the exact guess law drives
    closed-form advantage."""

    def law(self, puzz: str) -> FiniteDist:
        raise NotImplementedError

    def guess(self, puzz: str, rng: np.random.Generator) -> str:
        return self.law(puzz).sample(rng)


class ConditionalPuzzleAdversary(PuzzleAdversary):
    """The information-theoretic optimum: the true conditional."""

    def __init__(self, sampler: PuzzleSampler):
        self._joint = sampler.joint_law()

    def law(self, puzz):
        return condition(self._joint, puzz)


class ConstantPuzzleAdversary(PuzzleAdversary):
    def __init__(self, ans: str):
        self.ans = check_bits(ans)

    def law(self, puzz):
        return FiniteDist.point(self.ans)


class UniformPuzzleAdversary(PuzzleAdversary):
    def __init__(self, ans_len: int):
        self.ans_len = ans_len

    def law(self, puzz):
        return FiniteDist.uniform(self.ans_len)


class StepPuzzleAdversary(PuzzleAdversary):
    """Lift a step adversary to puzzle level by decoding (x, t, tau)."""

    def __init__(self, sampler: InstancePuzzleSampler, adv: StepAdversary):
        self.sampler = sampler
        self.adv = adv

    def law(self, puzz):
        x, t, tau = self.sampler.decode_puzz(puzz)
        raw = self.adv.law(x, self.sampler.circuit(x), t, tau)
        return push_forward(raw, self.sampler.pad_ans)

    def guess(self, puzz, rng):
        x, t, tau = self.sampler.decode_puzz(puzz)
        raw = self.adv.guess(x, self.sampler.circuit(x), t, tau, rng)
        return self.sampler.pad_ans(raw)


@dataclass(frozen=True)
class AdvantageReport:
    alpha: float
    mode: str
    shots: int = 0
    margin: float = 0.0
    per_step: tuple = ()

    def summary(self) -> str:
        if self.mode == "exact":
            return f"advantage {self.alpha:.9f} (exact)"
        return (f"advantage {self.alpha:.6f} "
                f"(empirical, {self.shots} shots, margin {self.margin:.4f})")


def advantage(sampler: PuzzleSampler, adversary: PuzzleAdversary,
              mode: str = "exact", shots: int = 10000,
              rng: np.random.Generator | None = None) -> AdvantageReport:
    """Distance between {puzz, ans} and {puzz, A(puzz)}."""
    if mode == "exact":
        honest = sampler.joint_law()
        marg = push_forward(honest, lambda s: s[:sampler.puzz_len])
        parts = []
        for puzz in marg.support:
            guess = adversary.law(puzz)
            parts.append((marg.prob(puzz),
                          push_forward(guess, lambda s, p=puzz: p + s)))
        alpha = sd(honest, mixture(parts))
        per_step = ()
        if (isinstance(sampler, InstancePuzzleSampler)
                and isinstance(adversary, StepPuzzleAdversary)):
            terms = sampler.per_step_terms(adversary.adv)
            per_step = tuple(sorted(terms.items()))
        return AdvantageReport(alpha=alpha, mode="exact", per_step=per_step)
    if mode != "empirical":
        raise StructureError(f"unknown advantage mode {mode!r}")
    if rng is None:
        raise StructureError("empirical advantage needs an rng")
    honest_draws = []
    guessed_draws = []
    for _ in range(shots):
        puzz, ans = sampler.sample(rng)
        honest_draws.append(puzz + ans)
        puzz2, _ = sampler.sample(rng)
        guessed_draws.append(puzz2 + adversary.guess(puzz2, rng))
    from .dist import empirical
    h = empirical(honest_draws).to_dist()
    g = empirical(guessed_draws).to_dist()
    support = len(set(h.support) | set(g.support))
    margin = float(np.sqrt(2.0 * support / shots))  # crude large-deviation scale
    return AdvantageReport(alpha=sd(h, g), mode="empirical", shots=shots,
                           margin=margin)


def support_verifier(sampler: PuzzleSampler) -> Callable[[str, str], bool]:
    """Brute-force acceptance: valid iff Pr[ans | puzz] > 0."""
    joint = sampler.joint_law()

    def verify(puzz: str, ans: str) -> bool:
        return (puzz + ans) in joint

    return verify


# -- solvers and the adaptive replacement --------------------------------------

def _to_step_adversary(adv) -> StepAdversary:
    if isinstance(adv, StepAdversary):
        return adv
    raise StructureError("solver backends need a StepAdversary")


def solver_f(fam: PdqpInstanceFamily, x: str, eps: float, adv: StepAdversary,
             rng: np.random.Generator) -> str:
    """Run the base machine with every read answered by hybrid B(0)."""
    if fam.machine.query_bound != 1:
        raise StructureError(
            "solver_f drives single-query machines; use "
            "adaptive_replacement for larger bounds")
    adv = _to_step_adversary(adv)

    def backend(circuit, rng_):
        return q_star(x, circuit, adv, rng_)

    return run_session(fam.machine, x, eps, backend, rng)


def solver_f_law(fam: PdqpInstanceFamily, x: str, eps: float,
                 adv: StepAdversary) -> FiniteDist:
    if fam.machine.query_bound != 1:
        raise StructureError(
            "solver_f drives single-query machines; use "
            "adaptive_replacement for larger bounds")
    adv = _to_step_adversary(adv)
    return session_law(
        fam.machine, x, eps,
        lambda circuit, k: q_star_law(x, circuit, adv))


def adaptive_replacement_law(machine: BaseMachine, x: str, eps: float,
                             i: int, adv: StepAdversary) -> FiniteDist:
    """Exact session law with the first i queries answered by B(0).

    Queries are replaced in order: positions 0..i-1 go to the solver
    surrogate, the rest to the true oracle. i = 0 is the genuine session,
    i = query_bound replaces everything.
    """
    if not 0 <= i <= machine.query_bound:
        raise StructureError(
            f"replacement index {i} outside 0..{machine.query_bound}")
    adv = _to_step_adversary(adv)

    def backend_law(circuit, k):
        if k < i:
            return q_star_law(x, circuit, adv)
        return oracle_exact(circuit)

    return session_law(machine, x, eps, backend_law)


def adaptive_replacement_sample(machine: BaseMachine, x: str, eps: float,
                                i: int, adv: StepAdversary,
                                rng: np.random.Generator) -> str:
    if not 0 <= i <= machine.query_bound:
        raise StructureError(
            f"replacement index {i} outside 0..{machine.query_bound}")
    adv = _to_step_adversary(adv)
    count = {"k": 0}

    def backend(circuit, rng_):
        k = count["k"]
        count["k"] += 1
        if k < i:
            return q_star(x, circuit, adv, rng_)
        return oracle_sample(circuit, rng_)

    return run_session(machine, x, eps, backend, rng)
