"""Dense statevector simulation of stepwise-measured circuits.

A circuit on n qubits is a sequence of steps; each step applies a unitary
(given as a gate list or a dense matrix) and then measures the first
``measure`` qubits in the computational basis. Measuring any other subset is
expressed by SWAP gates inside the step's unitary. Bit order convention:
qubit 0 is the most significant bit of a basis index, so basis state i
corresponds to the string format(i, '0nb') and "the first m qubits" are the
leading m characters.

Simulation is dense only, with a hard cap of 12 qubits. Branch enumeration
(the tree of collapsing outcomes) is guarded by a product bound on the
number of measurement paths, overridable via the NCMO_MAX_BRANCHES
environment variable.
"""

from __future__ import annotations

import cmath
import math
import os
from dataclasses import dataclass

import numpy as np

from .dist import FiniteDist
from .errors import (
    ImpossibleConditionError,
    InstanceTooLargeError,
    ParseError,
    StructureError,
)

MAX_QUBITS = 12
UNITARY_TOL = 1e-7
BRANCH_PRUNE_TOL = 1e-12
READOUT_PRUNE_TOL = 1e-14
DEFAULT_BRANCH_GUARD = 1 << 16

_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
_S = np.array([[1.0, 0.0], [0.0, 1.0j]])
FIXED_1Q = {"h": _H, "x": _X, "y": _Y, "z": _Z, "s": _S}


def branch_guard() -> int:
    """Current cap on enumerated measurement paths."""
    raw = os.environ.get("NCMO_MAX_BRANCHES")
    if raw is None:
        return DEFAULT_BRANCH_GUARD
    try:
        value = int(raw)
    except ValueError as e:
        raise StructureError(f"NCMO_MAX_BRANCHES is not an integer: {raw!r}") from e
    if value < 1:
        raise StructureError(f"NCMO_MAX_BRANCHES must be positive, got {value}")
    return value


def _check_unitary(mat: np.ndarray, what: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise StructureError(f"{what} is not square: shape {mat.shape}")
    err = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
    if err > UNITARY_TOL:
        raise StructureError(f"{what} is not unitary (defect {err:.3g})")
    return mat


@dataclass(frozen=True, eq=False)
class Gate:
    """One primitive operation inside a step.

    Names: h, x, y, z, s (fixed single-qubit), cnot (control, target),
    swap, cphase (two targets plus theta), u1q (arbitrary 2x2 in ``matrix``),
    dense (full 2^n x 2^n ``matrix``), prep (amplitude vector in ``matrix``,
    valid only as the first operation applied to the all-zeros state).
    """

    name: str
    targets: tuple[int, ...] = ()
    matrix: np.ndarray | None = None
    theta: float | None = None


@dataclass(frozen=True, eq=False)
class Step:
    gates: tuple[Gate, ...]
    measure: int = 0


@dataclass(frozen=True, eq=False)
class Circuit:
    qubits: int
    steps: tuple[Step, ...]

    def __post_init__(self):
        if self.qubits < 1:
            raise StructureError("circuit needs at least one qubit")
        if self.qubits > MAX_QUBITS:
            raise InstanceTooLargeError(
                f"{self.qubits} qubits exceeds the dense-simulation cap "
                f"of {MAX_QUBITS}")
        if not self.steps:
            raise StructureError("circuit needs at least one step")
        for t, step in enumerate(self.steps, start=1):
            if not 0 <= step.measure <= self.qubits:
                raise StructureError(
                    f"step {t} measures {step.measure} of {self.qubits} qubits")
            for g in step.gates:
                self._check_gate(g, t)

    def _check_gate(self, g: Gate, t: int):
        n = self.qubits
        for q in g.targets:
            if not 0 <= q < n:
                raise StructureError(f"step {t}: target {q} out of range")
        if len(set(g.targets)) != len(g.targets):
            raise StructureError(f"step {t}: repeated target in {g.name}")
        if g.name in FIXED_1Q:
            if len(g.targets) != 1:
                raise StructureError(f"step {t}: {g.name} takes one target")
        elif g.name in ("cnot", "swap"):
            if len(g.targets) != 2:
                raise StructureError(f"step {t}: {g.name} takes two targets")
        elif g.name == "cphase":
            if len(g.targets) != 2 or g.theta is None:
                raise StructureError(
                    f"step {t}: cphase takes two targets and theta")
        elif g.name == "u1q":
            if len(g.targets) != 1 or g.matrix is None:
                raise StructureError(
                    f"step {t}: u1q takes one target and a 2x2 matrix")
            if np.asarray(g.matrix).shape != (2, 2):
                raise StructureError(f"step {t}: u1q matrix must be 2x2")
            _check_unitary(g.matrix, f"step {t} u1q matrix")
        elif g.name == "dense":
            if g.matrix is None or np.asarray(g.matrix).shape != (1 << n, 1 << n):
                raise StructureError(
                    f"step {t}: dense matrix must be {1 << n}x{1 << n}")
            _check_unitary(g.matrix, f"step {t} dense matrix")
        elif g.name == "prep":
            amps = np.asarray(g.matrix)
            if amps is None or amps.shape != (1 << n,):
                raise StructureError(
                    f"step {t}: prep vector must have length {1 << n}")
            norm = float(np.vdot(amps, amps).real)
            if abs(norm - 1.0) > UNITARY_TOL:
                raise StructureError(
                    f"step {t}: prep vector norm {norm:.9f} is not 1")
        else:
            raise StructureError(f"step {t}: unknown gate {g.name!r}")

    @property
    def depth(self) -> int:
        return len(self.steps)

    def measure_widths(self) -> tuple[int, ...]:
        return tuple(s.measure for s in self.steps)


def initial_state(qubits: int) -> np.ndarray:
    amps = np.zeros(1 << qubits, dtype=complex)
    amps[0] = 1.0
    return amps


# -- gate application ---------------------------------------------------------

def _apply_1q(amps: np.ndarray, mat: np.ndarray, q: int, n: int) -> np.ndarray:
    t = amps.reshape([2] * n)
    t = np.moveaxis(t, q, 0)
    t = (np.asarray(mat, dtype=complex) @ t.reshape(2, -1)).reshape([2] * n)
    return np.moveaxis(t, 0, q).reshape(-1)


def _apply_cnot(amps: np.ndarray, ctrl: int, tgt: int, n: int) -> np.ndarray:
    t = amps.reshape([2] * n).copy()
    sel: list = [slice(None)] * n
    sel[ctrl] = 1
    sub = t[tuple(sel)]
    axis = tgt - (1 if ctrl < tgt else 0)
    t[tuple(sel)] = np.flip(sub, axis=axis)
    return t.reshape(-1)


def _apply_swap(amps: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    t = amps.reshape([2] * n)
    return np.swapaxes(t, a, b).reshape(-1)


def _apply_cphase(amps: np.ndarray, a: int, b: int, theta: float,
                  n: int) -> np.ndarray:
    t = amps.reshape([2] * n).copy()
    sel: list = [slice(None)] * n
    sel[a] = 1
    sel[b] = 1
    t[tuple(sel)] = t[tuple(sel)] * cmath.exp(1j * theta)
    return t.reshape(-1)


def apply_gate(amps: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    if gate.name in FIXED_1Q:
        return _apply_1q(amps, FIXED_1Q[gate.name], gate.targets[0], n)
    if gate.name == "u1q":
        return _apply_1q(amps, gate.matrix, gate.targets[0], n)
    if gate.name == "cnot":
        return _apply_cnot(amps, gate.targets[0], gate.targets[1], n)
    if gate.name == "swap":
        return _apply_swap(amps, gate.targets[0], gate.targets[1], n)
    if gate.name == "cphase":
        return _apply_cphase(amps, gate.targets[0], gate.targets[1],
                             gate.theta, n)
    if gate.name == "dense":
        return np.asarray(gate.matrix, dtype=complex) @ amps
    if gate.name == "prep":
        probe = np.zeros_like(amps)
        probe[0] = 1.0
        if np.max(np.abs(amps - probe)) > 1e-9:
            raise StructureError(
                "prep gate is only defined on the all-zeros state")
        return np.asarray(gate.matrix, dtype=complex).copy()
    raise StructureError(f"unknown gate {gate.name!r}")


def apply_step_unitary(amps: np.ndarray, step: Step, n: int) -> np.ndarray:
    for g in step.gates:
        amps = apply_gate(amps, g, n)
    return amps


def step_unitary(step: Step, n: int) -> np.ndarray:
    """Dense matrix of a step's unitary; prep gates are completed via QR."""
    dim = 1 << n
    mat = np.eye(dim, dtype=complex)
    for g in step.gates:
        if g.name == "prep":
            mat = state_prep_unitary(np.asarray(g.matrix, dtype=complex)) @ mat
        else:
            cols = [apply_gate(mat[:, j].copy(), g, n) for j in range(dim)]
            mat = np.stack(cols, axis=1)
    return mat


def state_prep_unitary(amps: np.ndarray) -> np.ndarray:
    """Some unitary whose first column is the given unit vector."""
    dim = amps.shape[0]
    basis = np.eye(dim, dtype=complex)
    basis[:, 0] = amps
    q, r = np.linalg.qr(basis)
    # QR fixes column phases only up to the sign of r's diagonal.
    q = q * (r.diagonal() / np.abs(r.diagonal()))
    return q


# -- measurement and readout --------------------------------------------------

def outcome_probs(amps: np.ndarray, m: int, n: int) -> np.ndarray:
    """Born probabilities for measuring the first m qubits."""
    blocks = np.abs(amps.reshape(1 << m, -1)) ** 2
    return blocks.sum(axis=1)


def project_first(amps: np.ndarray, m: int, idx: int,
                  n: int) -> tuple[np.ndarray, float]:
    """Post-measurement state and probability for outcome index idx."""
    block = amps.reshape(1 << m, -1)
    p = float((np.abs(block[idx]) ** 2).sum())
    if p <= 0.0:
        raise ImpossibleConditionError(
            f"outcome {format(idx, f'0{m}b')} has zero probability")
    post = np.zeros_like(amps).reshape(1 << m, -1)
    post[idx] = block[idx] / math.sqrt(p)
    return post.reshape(-1), p


def measure_first(amps: np.ndarray, m: int, n: int,
                  rng: np.random.Generator) -> tuple[str, np.ndarray, float]:
    """Sample a collapsing measurement of the first m qubits."""
    if m == 0:
        return "", amps, 1.0
    probs = outcome_probs(amps, m, n)
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    idx = int(rng.choice(1 << m, p=probs))
    post, p = project_first(amps, m, idx, n)
    return format(idx, f"0{m}b"), post, p


def readout_dist(amps: np.ndarray, n: int) -> FiniteDist:
    """Full-width Born readout law of a state, tiny weights pruned."""
    probs = np.abs(amps) ** 2
    out = {format(i, f"0{n}b"): float(p)
           for i, p in enumerate(probs) if p > READOUT_PRUNE_TOL}
    return FiniteDist(out, _validate=False)


# -- branch enumeration -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BranchNode:
    """One collapsing-outcome path: tau = outcomes, with its post state."""

    outcomes: tuple[str, ...]
    prob: float
    state: np.ndarray
    readout: FiniteDist | None
    children: tuple["BranchNode", ...] = ()

    @property
    def depth(self) -> int:
        return len(self.outcomes)


@dataclass(frozen=True, eq=False)
class BranchTree:
    circuit: Circuit
    root: BranchNode

    def nodes_at(self, t: int) -> list[BranchNode]:
        level = [self.root]
        for _ in range(t):
            level = [c for node in level for c in node.children]
        return level

    def leaves(self) -> list[BranchNode]:
        return self.nodes_at(self.circuit.depth)

    def node(self, tau: tuple[str, ...]) -> BranchNode:
        cur = self.root
        for t, u in enumerate(tau, start=1):
            for child in cur.children:
                if child.outcomes[-1] == u:
                    cur = child
                    break
            else:
                raise ImpossibleConditionError(
                    f"transcript {tau} leaves the branch tree at step {t} "
                    f"(outcome {u!r})")
        return cur

    def path(self, tau: tuple[str, ...]) -> list[BranchNode]:
        """Nodes at depths 1..len(tau) along the given transcript."""
        nodes = []
        cur = self.root
        for t, u in enumerate(tau, start=1):
            for child in cur.children:
                if child.outcomes[-1] == u:
                    cur = child
                    break
            else:
                raise ImpossibleConditionError(
                    f"transcript {tau} leaves the branch tree at step {t} "
                    f"(outcome {u!r})")
            nodes.append(cur)
        return nodes


def branch_count_bound(circuit: Circuit) -> int:
    total = 1
    for s in circuit.steps:
        total *= 1 << s.measure
    return total


def enumerate_branches(circuit: Circuit,
                       max_branches: int | None = None) -> BranchTree:
    """Expand every collapsing outcome path with its post state and readout.

    Branches whose conditional probability falls below BRANCH_PRUNE_TOL are
    dropped; the surviving children of a node carry its full mass up to that
    pruning. The path-count guard fires before any state is allocated.
    """
    guard = branch_guard() if max_branches is None else max_branches
    bound = branch_count_bound(circuit)
    if bound > guard:
        raise InstanceTooLargeError(
            f"branch enumeration would visit up to {bound} paths, over the "
            f"guard of {guard} (override with NCMO_MAX_BRANCHES)")
    n = circuit.qubits

    def expand(state: np.ndarray, depth: int, prob: float,
               outcomes: tuple[str, ...]) -> tuple[BranchNode, ...]:
        if depth == circuit.depth:
            return ()
        step = circuit.steps[depth]
        evolved = apply_step_unitary(state, step, n)
        m = step.measure
        if m == 0:
            path = outcomes + ("",)
            return (BranchNode(
                outcomes=path, prob=prob, state=evolved,
                readout=readout_dist(evolved, n),
                children=expand(evolved, depth + 1, prob, path)),)
        cond = outcome_probs(evolved, m, n)
        children = []
        for idx in range(1 << m):
            if cond[idx] <= BRANCH_PRUNE_TOL:
                continue
            post, p = project_first(evolved, m, idx, n)
            path = outcomes + (format(idx, f"0{m}b"),)
            children.append(BranchNode(
                outcomes=path, prob=prob * p, state=post,
                readout=readout_dist(post, n),
                children=expand(post, depth + 1, prob * p, path)))
        return tuple(children)

    state0 = initial_state(n)
    root = BranchNode(outcomes=(), prob=1.0, state=state0, readout=None,
                      children=expand(state0, 0, 1.0, ()))
    return BranchTree(circuit=circuit, root=root)


def run_prefix(circuit: Circuit, t: int,
               rng: np.random.Generator) -> tuple[tuple[str, ...], np.ndarray]:
    """Simulate steps 1..t once, sampling each collapsing measurement."""
    if not 0 <= t <= circuit.depth:
        raise StructureError(f"prefix length {t} outside 0..{circuit.depth}")
    n = circuit.qubits
    state = initial_state(n)
    outcomes: tuple[str, ...] = ()
    for step in circuit.steps[:t]:
        state = apply_step_unitary(state, step, n)
        u, state, _ = measure_first(state, step.measure, n, rng)
        outcomes = outcomes + (u,)
    return outcomes, state


# -- random circuits ----------------------------------------------------------

def random_unitary_2x2(rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (r.diagonal() / np.abs(r.diagonal()))


def random_circuit(rng: np.random.Generator, *, max_qubits: int = 4,
                   max_steps: int = 3, max_spreaders: int = 2,
                   gates_per_step: tuple[int, int] = (1, 4)) -> Circuit:
    """Seeded random circuit for round-trip and identity checks.

    Gates that enlarge computational-basis support (h, u1q) are rationed by
    ``max_spreaders`` so exact output laws stay small; permutation and phase
    gates (x, y, z, s, cnot, swap, cphase) are unrestricted.
    """
    n = int(rng.integers(1, max_qubits + 1))
    depth = int(rng.integers(1, max_steps + 1))
    spreaders_left = max_spreaders
    steps = []
    for _ in range(depth):
        k = int(rng.integers(gates_per_step[0], gates_per_step[1] + 1))
        gates = []
        for _ in range(k):
            pool = ["x", "y", "z", "s"]
            if n >= 2:
                pool += ["cnot", "swap", "cphase"]
            if spreaders_left > 0:
                pool += ["h", "u1q"]
            name = pool[int(rng.integers(len(pool)))]
            if name in ("cnot", "swap", "cphase"):
                a, b = rng.choice(n, size=2, replace=False)
                theta = float(rng.uniform(0, 2 * math.pi)) if name == "cphase" else None
                gates.append(Gate(name, (int(a), int(b)), theta=theta))
            elif name == "u1q":
                spreaders_left -= 1
                gates.append(Gate("u1q", (int(rng.integers(n)),),
                                  matrix=random_unitary_2x2(rng)))
            else:
                if name == "h":
                    spreaders_left -= 1
                gates.append(Gate(name, (int(rng.integers(n)),)))
        m = int(rng.integers(0, n + 1))
        steps.append(Step(gates=tuple(gates), measure=m))
    return Circuit(qubits=n, steps=tuple(steps))


def bell_circuit(measure_first_step: int = 0, extra_steps: int = 1) -> Circuit:
    """H then CNOT on two qubits, measuring m qubits at step 1.

    extra_steps appends identity steps with no measurement, which is the
    shape used by the repeated-readout checks.
    """
    steps = [Step(gates=(Gate("h", (0,)), Gate("cnot", (0, 1))),
                  measure=measure_first_step)]
    for _ in range(extra_steps):
        steps.append(Step(gates=(), measure=0))
    return Circuit(qubits=2, steps=tuple(steps))


# -- JSON circuit format ------------------------------------------------------

def _complex_to_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _pair_to_complex(pair) -> complex:
    if (not isinstance(pair, (list, tuple)) or len(pair) != 2
            or not all(isinstance(x, (int, float)) for x in pair)):
        raise ParseError(f"expected an [re, im] pair, got {pair!r}")
    return complex(pair[0], pair[1])


def _matrix_to_json(mat: np.ndarray) -> list:
    arr = np.asarray(mat, dtype=complex)
    if arr.ndim == 1:
        return [_complex_to_pair(z) for z in arr]
    return [[_complex_to_pair(z) for z in row] for row in arr]


def _matrix_from_json(obj, *, vector: bool) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise ParseError("matrix field must be a non-empty array")
    if vector:
        return np.array([_pair_to_complex(p) for p in obj], dtype=complex)
    return np.array([[_pair_to_complex(p) for p in row] for row in obj],
                    dtype=complex)


def circuit_to_json(circuit: Circuit) -> dict:
    steps = []
    for s in circuit.steps:
        gates = []
        for g in s.gates:
            entry: dict = {"name": g.name, "targets": list(g.targets)}
            if g.matrix is not None:
                entry["matrix"] = _matrix_to_json(g.matrix)
            if g.theta is not None:
                entry["theta"] = g.theta
            gates.append(entry)
        steps.append({"gates": gates, "measure": s.measure})
    return {"qubits": circuit.qubits, "steps": steps}


def circuit_from_json(obj: dict) -> Circuit:
    if not isinstance(obj, dict):
        raise ParseError("circuit JSON must be an object")
    try:
        qubits = int(obj["qubits"])
        raw_steps = obj["steps"]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"circuit JSON missing/bad field: {e}") from e
    if not isinstance(raw_steps, list) or not raw_steps:
        raise ParseError("circuit JSON needs a non-empty 'steps' array")
    steps = []
    for i, rs in enumerate(raw_steps, start=1):
        if not isinstance(rs, dict):
            raise ParseError(f"step {i} is not an object")
        gates = []
        for rg in rs.get("gates", []):
            if not isinstance(rg, dict) or "name" not in rg:
                raise ParseError(f"step {i} has a gate without a name")
            name = rg["name"]
            targets = tuple(int(q) for q in rg.get("targets", []))
            matrix = None
            if "matrix" in rg:
                matrix = _matrix_from_json(rg["matrix"],
                                           vector=(name == "prep"))
            theta = float(rg["theta"]) if "theta" in rg else None
            gates.append(Gate(name=name, targets=targets, matrix=matrix,
                              theta=theta))
        try:
            measure = int(rs.get("measure", 0))
        except (TypeError, ValueError) as e:
            raise ParseError(f"step {i} has a bad 'measure' field") from e
        steps.append(Step(gates=tuple(gates), measure=measure))
    try:
        return Circuit(qubits=qubits, steps=tuple(steps))
    except StructureError as e:
        raise ParseError(f"circuit JSON rejected: {e}") from e
