"""Collision puzzles: sample an answer twice from the same conditional.

A scheme publishes pp, then samples (puzz, ans). Its collision law draws
(puzz, ans) honestly and a second answer ans' from the exact conditional of
ans given puzz. Security for such a scheme would mean no cheap procedure
approximates that collision law; here everything is enumerable, so the law
itself, adversaries against it, and the two-read oracle pipeline that
reproduces it are all compared exactly.

The oracle pipeline: purify the sampler into a preparation unitary, measure
the puzzle register collapsingly, and take two non-collapsing reads. Read
one supplies (puzz, ans), read two supplies ans'; conditional independence
of the reads given the collapse branch is precisely the collision property.

Registers are laid out puzz | ans | junk. Junk qubits let a preparation
entangle the answer with workspace; they are traced out of every law.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .dist import FiniteDist, condition, empirical, marginal, mixture, push_forward, sd
from .errors import InstanceTooLargeError, ParseError, StructureError
from .ncmo import oracle_exact, oracle_sample
from .qsim import (
    MAX_QUBITS,
    Circuit,
    Gate,
    Step,
    apply_step_unitary,
    circuit_from_json,
    circuit_to_json,
    initial_state,
)

MAX_COL_SUPPORT = 1 << 20


@dataclass(frozen=True)
class CollisionTriple:
    puzz: str
    ans: str
    ans2: str

    def flat(self) -> str:
        return self.puzz + self.ans + self.ans2


class DcrScheme:
    """Setup law plus a per-pp sampler, as laws and optionally as states.

    ``samp_laws[pp]`` is the exact law of puzz followed by ans. ``states[pp]``
    is an amplitude vector over puzz | ans | junk qubits whose Born law must
    marginalize to samp_laws[pp]; when only laws are given and there is no
    junk, the state is the entrywise square root (lazily, within the qubit
    cap). The two descriptions are cross-checked at construction.
    """

    def __init__(self, *, puzz_len: int, ans_len: int, junk_len: int = 0,
                 setup: FiniteDist, samp_laws: dict[str, FiniteDist] | None = None,
                 states: dict[str, np.ndarray] | None = None):
        if puzz_len < 0 or ans_len <= 0 or junk_len < 0:
            raise StructureError("register widths must be sensible")
        self.puzz_len = puzz_len
        self.ans_len = ans_len
        self.junk_len = junk_len
        self.pp_len = setup.length
        self._setup = setup
        self._samp_laws = dict(samp_laws or {})
        self._states = {k: np.asarray(v, dtype=complex)
                        for k, v in (states or {}).items()}
        for pp in setup.support:
            if pp not in self._samp_laws and pp not in self._states:
                raise StructureError(f"pp {pp!r} has neither a law nor a state")
        for pp, amps in self._states.items():
            if amps.shape != (1 << self.qubits,):
                raise StructureError(
                    f"state for pp {pp!r} has {amps.shape} amplitudes, "
                    f"register layout wants {1 << self.qubits}")
            if abs(np.vdot(amps, amps).real - 1.0) > 1e-9:
                raise StructureError(f"state for pp {pp!r} is not normalized")
            derived = self._law_of_state(amps)
            declared = self._samp_laws.get(pp)
            if declared is None:
                self._samp_laws[pp] = derived
            elif sd(declared, derived) > 1e-9:
                raise StructureError(
                    f"state and law for pp {pp!r} disagree "
                    f"(sd {sd(declared, derived):.3g})")
        for pp, law in self._samp_laws.items():
            if law.length != puzz_len + ans_len:
                raise StructureError(
                    f"samp law for pp {pp!r} has length {law.length}, "
                    f"registers want {puzz_len + ans_len}")

    @property
    def qubits(self) -> int:
        return self.puzz_len + self.ans_len + self.junk_len

    def _law_of_state(self, amps: np.ndarray) -> FiniteDist:
        n = self.qubits
        probs = {}
        for i, a in enumerate(amps):
            p = (a.conjugate() * a).real
            if p > 1e-14:
                probs[format(i, f"0{n}b")] = p
        full = FiniteDist(probs, _validate=False)
        if self.junk_len == 0:
            return full
        return marginal(full, range(self.puzz_len + self.ans_len))

    def setup_law(self) -> FiniteDist:
        return self._setup

    def sample_pp(self, rng: np.random.Generator) -> str:
        return self._setup.sample(rng)

    def samp_law(self, pp: str) -> FiniteDist:
        if pp not in self._samp_laws:
            raise StructureError(f"unknown pp {pp!r}")
        return self._samp_laws[pp]

    def samp(self, pp: str, rng: np.random.Generator) -> tuple[str, str]:
        flat = self.samp_law(pp).sample(rng)
        return flat[:self.puzz_len], flat[self.puzz_len:]

    def state(self, pp: str) -> np.ndarray | None:
        if pp in self._states:
            return self._states[pp]
        if self.junk_len > 0:
            return None  # a junked law underdetermines its purification
        if self.qubits > MAX_QUBITS:
            return None
        law = self.samp_law(pp)
        amps = np.zeros(1 << self.qubits, dtype=complex)
        for key, p in law.items():
            amps[int(key, 2)] = np.sqrt(p)
        self._states[pp] = amps
        return amps


# -- the collision law ----------------------------------------------------------

def _group_by_puzz(samp: FiniteDist,
                   p_len: int) -> dict[str, dict[str, float]]:
    """One pass over the sampler law: puzz -> {ans: joint mass}."""
    groups: dict[str, dict[str, float]] = {}
    for flat, w in samp.items():
        groups.setdefault(flat[:p_len], {})[flat[p_len:]] = w
    return groups


def col_law(scheme: DcrScheme, pp: str) -> FiniteDist:
    """Exact law of (puzz, ans, ans'), the second answer resampled."""
    groups = _group_by_puzz(scheme.samp_law(pp), scheme.puzz_len)
    size = sum(len(g) ** 2 for g in groups.values())
    if size > MAX_COL_SUPPORT:
        raise InstanceTooLargeError(
            f"collision law would hold {size} atoms; cap is {MAX_COL_SUPPORT}")
    probs = {}
    for puzz, g in groups.items():
        mass = sum(g.values())
        for a, pa in g.items():
            for a2, pa2 in g.items():
                probs[puzz + a + a2] = pa * pa2 / mass
    return FiniteDist(probs, _validate=False)


def col_sample(scheme: DcrScheme, pp: str,
               rng: np.random.Generator) -> CollisionTriple:
    puzz, ans = scheme.samp(pp, rng)
    ans2 = condition(scheme.samp_law(pp), puzz).sample(rng)
    return CollisionTriple(puzz=puzz, ans=ans, ans2=ans2)


class ColSampler:
    """Repeated collision draws with the per-puzzle conditionals cached."""

    def __init__(self, scheme: DcrScheme, pp: str):
        groups = _group_by_puzz(scheme.samp_law(pp), scheme.puzz_len)
        marg = {puzz: sum(g.values()) for puzz, g in groups.items()}
        self._marg = FiniteDist(marg, _validate=False)
        self._conds = {
            puzz: FiniteDist({a: w / marg[puzz] for a, w in g.items()},
                             _validate=False)
            for puzz, g in groups.items()}

    def sample(self, rng: np.random.Generator) -> CollisionTriple:
        puzz = self._marg.sample(rng)
        cond = self._conds[puzz]
        return CollisionTriple(puzz=puzz, ans=cond.sample(rng),
                               ans2=cond.sample(rng))


def col(scheme: DcrScheme, pp: str, mode: str = "exact",
        rng: np.random.Generator | None = None):
    """Collision draw (mode 'sample') or its exact law (mode 'exact')."""
    if mode == "exact":
        return col_law(scheme, pp)
    if mode != "sample":
        raise StructureError(f"unknown col mode {mode!r}")
    if rng is None:
        raise StructureError("sampling col needs an rng")
    return col_sample(scheme, pp, rng)


def split_triple(scheme: DcrScheme, flat: str) -> CollisionTriple:
    p, a = scheme.puzz_len, scheme.ans_len
    if len(flat) != p + 2 * a:
        raise StructureError(f"triple has {len(flat)} bits, want {p + 2 * a}")
    return CollisionTriple(puzz=flat[:p], ans=flat[p:p + a],
                           ans2=flat[p + a:])


# -- the two-read oracle pipeline -------------------------------------------------

def dpp_instance(scheme: DcrScheme, pp: str) -> Circuit:
    """Two-step circuit: prepare the sampler state, collapse the puzzle
    register, then read twice (the second step is empty)."""
    amps = scheme.state(pp)
    if amps is None:
        raise StructureError(
            f"pp {pp!r} has no preparation state (junk without a state, "
            f"or {scheme.qubits} qubits past the {MAX_QUBITS}-qubit cap)")
    return Circuit(qubits=scheme.qubits, steps=(
        Step(gates=(Gate("prep", tuple(range(scheme.qubits)), matrix=amps),),
             measure=scheme.puzz_len),
        Step(gates=(), measure=0),
    ))


def triple_of_reads(scheme: DcrScheme, reads: tuple[str, ...]) -> CollisionTriple:
    p, a = scheme.puzz_len, scheme.ans_len
    v1, v2 = reads
    return CollisionTriple(puzz=v1[:p], ans=v1[p:p + a], ans2=v2[p:p + a])


def _flat_reads_to_triple(scheme: DcrScheme, flat: str) -> str:
    n = scheme.qubits
    return triple_of_reads(scheme, (flat[:n], flat[n:])).flat()


def oracle_col_law(scheme: DcrScheme, pp: str) -> FiniteDist:
    """Exact triple law produced by the oracle on the prepared circuit."""
    joint = oracle_exact(dpp_instance(scheme, pp))
    return push_forward(joint, lambda s: _flat_reads_to_triple(scheme, s))


def oracle_col_sample(scheme: DcrScheme, pp: str,
                      rng: np.random.Generator) -> CollisionTriple:
    out = oracle_sample(dpp_instance(scheme, pp), rng)
    return triple_of_reads(scheme, out.reads)


def col_oracle_gap(scheme: DcrScheme, pp: str) -> float:
    """sd between the oracle pipeline's triple law and the collision law;
    zero is the construction's defining identity."""
    return sd(oracle_col_law(scheme, pp), col_law(scheme, pp))


# -- adversaries and advantage -----------------------------------------------------

class TripleAdversary:
    """Maps pp to a guessed collision triple; law drives exact advantage."""

    def law(self, pp: str) -> FiniteDist:
        raise NotImplementedError

    def guess(self, pp: str, rng: np.random.Generator) -> CollisionTriple:
        raise NotImplementedError


class HonestColAdversary(TripleAdversary):
    def __init__(self, scheme: DcrScheme):
        self.scheme = scheme

    def law(self, pp):
        return col_law(self.scheme, pp)

    def guess(self, pp, rng):
        return col_sample(self.scheme, pp, rng)


class FixedTripleAdversary(TripleAdversary):
    def __init__(self, triple: CollisionTriple):
        self.triple = triple

    def law(self, pp):
        return FiniteDist.point(self.triple.flat())

    def guess(self, pp, rng):
        return self.triple


class OracleColAdversary(TripleAdversary):
    """Runs the prepared circuit through the oracle and reads the triple."""

    def __init__(self, scheme: DcrScheme):
        self.scheme = scheme

    def law(self, pp):
        return oracle_col_law(self.scheme, pp)

    def guess(self, pp, rng):
        return oracle_col_sample(self.scheme, pp, rng)


def dcr_advantage(scheme: DcrScheme, adversary: TripleAdversary,
                  mode: str = "exact", shots: int = 10000,
                  rng: np.random.Generator | None = None) -> float:
    """sd between {pp, Col(pp)} and {pp, A(pp)}."""
    if mode == "exact":
        total = 0.0
        for pp, w in scheme.setup_law().items():
            total += w * sd(col_law(scheme, pp), adversary.law(pp))
        return total
    if mode != "empirical":
        raise StructureError(f"unknown advantage mode {mode!r}")
    if rng is None:
        raise StructureError("empirical advantage needs an rng")
    honest, guessed = [], []
    for _ in range(shots):
        pp = scheme.sample_pp(rng)
        honest.append(pp + col_sample(scheme, pp, rng).flat())
        pp2 = scheme.sample_pp(rng)
        guessed.append(pp2 + adversary.guess(pp2, rng).flat())
    return sd(empirical(honest).to_dist(), empirical(guessed).to_dist())


# -- ready-made schemes --------------------------------------------------------------

def random_law_scheme(rng: np.random.Generator, *, pp_len: int = 1,
                      puzz_len: int = 1, ans_len: int = 2,
                      density: float = 0.75) -> DcrScheme:
    """Random dense-ish sampler laws per pp, for identity checks."""
    setup = FiniteDist.uniform(pp_len)
    width = puzz_len + ans_len
    laws = {}
    for pp in setup.support:
        keys = [format(i, f"0{width}b") for i in range(1 << width)]
        mask = rng.random(len(keys)) < density
        if not mask.any():
            mask[int(rng.integers(len(keys)))] = True
        weights = rng.random(len(keys)) * mask
        weights /= weights.sum()
        laws[pp] = FiniteDist({k: float(w) for k, w in zip(keys, weights)
                               if w > 0})
    return DcrScheme(puzz_len=puzz_len, ans_len=ans_len, setup=setup,
                     samp_laws=laws)


def random_function_table(rng: np.random.Generator, in_len: int,
                          out_len: int) -> dict[str, str]:
    return {format(i, f"0{in_len}b"): format(int(rng.integers(1 << out_len)),
                                             f"0{out_len}b")
            for i in range(1 << in_len)}


def function_scheme(table: dict[str, str], in_len: int,
                    out_len: int) -> DcrScheme:
    """Preimage sampler of a function: puzz = f(x), ans = x, x uniform.

    Its collision law pairs two independent preimages of the same image,
    which is what the two oracle reads produce on the coherent-preimage
    state.
    """
    if len(table) != 1 << in_len:
        raise StructureError(f"table must cover all {1 << in_len} inputs")
    probs = {}
    for x, y in table.items():
        if len(x) != in_len or len(y) != out_len:
            raise StructureError("table entry widths disagree with registers")
        probs[y + x] = 1.0 / (1 << in_len)
    law = FiniteDist(probs, _validate=False)
    return DcrScheme(puzz_len=out_len, ans_len=in_len,
                     setup=FiniteDist.point(""), samp_laws={"": law})


def distinct_answer_prob(scheme: DcrScheme, pp: str) -> float:
    """Pr[ans != ans'] under the collision law."""
    law = col_law(scheme, pp)
    p, a = scheme.puzz_len, scheme.ans_len
    return sum(w for flat, w in law.items()
               if flat[p:p + a] != flat[p + a:])


# -- scheme files ---------------------------------------------------------------------

def scheme_to_json(scheme: DcrScheme) -> dict:
    obj = {
        "pp_len": scheme.pp_len,
        "puzz_len": scheme.puzz_len,
        "ans_len": scheme.ans_len,
        "junk_len": scheme.junk_len,
    }
    setup = scheme.setup_law()
    if scheme.junk_len > 0:
        # junk entanglement lives in the state, so only the preparation
        # circuit is a faithful description
        if len(setup) != 1:
            raise StructureError("cannot serialize a multi-pp junked scheme")
        pp = setup.support[0]
        circuit = dpp_instance(scheme, pp)
        prep_only = Circuit(qubits=circuit.qubits,
                            steps=(Step(gates=circuit.steps[0].gates,
                                        measure=0),))
        if pp:
            obj["pp"] = pp
        obj["source"] = {"circuit": circuit_to_json(prep_only),
                         "puzz_register": scheme.puzz_len}
        return obj
    if len(setup) == 1:
        pp = setup.support[0]
        if pp:
            obj["pp"] = pp
        obj["source"] = {"law": scheme.samp_law(pp).to_json()}
    else:
        obj["setup"] = setup.to_json()
        obj["source"] = {"laws": {pp: scheme.samp_law(pp).to_json()
                                  for pp in setup.support}}
    return obj


def _law_from_json(obj) -> FiniteDist:
    try:
        return FiniteDist.from_json(obj)
    except StructureError as e:
        raise ParseError(f"bad law object: {e}") from e


def scheme_from_json(obj, *, circuit_loader=None) -> DcrScheme:
    """Parse a scheme description.

    The source is either {"law": ...} (one pp, possibly named by "pp"),
    {"laws": {pp: ...}} with a "setup" law, or {"circuit": ..., "
    puzz_register": m} where the circuit is a one-step preparation; a
    string-valued circuit is resolved through circuit_loader.
    """
    if not isinstance(obj, dict):
        raise ParseError("scheme file must hold a JSON object")
    try:
        puzz_len = int(obj["puzz_len"])
        ans_len = int(obj["ans_len"])
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"scheme needs integer puzz_len and ans_len: {e}") from e
    junk_len = int(obj.get("junk_len", 0))
    source = obj.get("source")
    if not isinstance(source, dict):
        raise ParseError("scheme needs a source object")
    if "law" in source:
        pp = obj.get("pp", "")
        if not isinstance(pp, str):
            raise ParseError("pp must be a bit string")
        setup = FiniteDist.point(pp)
        return DcrScheme(puzz_len=puzz_len, ans_len=ans_len,
                         junk_len=junk_len, setup=setup,
                         samp_laws={pp: _law_from_json(source["law"])})
    if "laws" in source:
        if "setup" not in obj:
            raise ParseError("multi-pp source needs a setup law")
        setup = _law_from_json(obj["setup"])
        laws = source["laws"]
        if not isinstance(laws, dict):
            raise ParseError("source.laws must map pp to laws")
        return DcrScheme(puzz_len=puzz_len, ans_len=ans_len,
                         junk_len=junk_len, setup=setup,
                         samp_laws={pp: _law_from_json(law)
                                    for pp, law in laws.items()})
    if "circuit" in source:
        raw = source["circuit"]
        if isinstance(raw, str):
            if circuit_loader is None:
                raise ParseError("circuit reference needs a loader")
            circuit = circuit_loader(raw)
        else:
            circuit = circuit_from_json(raw)
        if circuit.depth != 1 or circuit.steps[0].measure != 0:
            raise ParseError(
                "scheme circuit must be a single preparation step without "
                "measurement")
        reg = source.get("puzz_register")
        if reg != puzz_len:
            raise ParseError(
                f"puzz_register {reg!r} disagrees with puzz_len {puzz_len}")
        if circuit.qubits != puzz_len + ans_len + junk_len:
            raise ParseError(
                f"circuit has {circuit.qubits} qubits, registers want "
                f"{puzz_len + ans_len + junk_len}")
        amps = apply_step_unitary(initial_state(circuit.qubits),
                                  circuit.steps[0], circuit.qubits)
        pp = obj.get("pp", "")
        return DcrScheme(puzz_len=puzz_len, ans_len=ans_len,
                         junk_len=junk_len, setup=FiniteDist.point(pp),
                         states={pp: amps})
    raise ParseError("source must carry 'law', 'laws', or 'circuit'")


def load_scheme(path: str) -> DcrScheme:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"scheme file is not JSON: {e}") from e

    def loader(ref: str):
        full = os.path.join(os.path.dirname(os.path.abspath(path)), ref)
        with open(full) as cf:
            try:
                raw = json.load(cf)
            except json.JSONDecodeError as e:
                raise ParseError(f"circuit file is not JSON: {e}") from e
        return circuit_from_json(raw)

    return scheme_from_json(obj, circuit_loader=loader)


def save_scheme(scheme: DcrScheme, path: str):
    with open(path, "w") as fh:
        json.dump(scheme_to_json(scheme), fh, indent=2, sort_keys=True)
        fh.write("\n")
