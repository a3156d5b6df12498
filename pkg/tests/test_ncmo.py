import numpy as np
import pytest

from ncmlab.dist import FiniteDist, condition, empirical, product, push_forward, sd
from ncmlab.errors import (
    ImpossibleConditionError,
    InstanceTooLargeError,
    ProtocolError,
    RetryBudgetExceededError,
    StructureError,
)
from ncmlab.ncmo import (
    BaseMachine,
    FinalOutput,
    FnMachine,
    NextQuery,
    OracleOutput,
    PdqpInstanceFamily,
    decision_as_sampling,
    exact_oracle_backend_law,
    oracle_backend,
    oracle_exact,
    oracle_sample,
    oracle_sample_many,
    q1,
    q1_law,
    q2,
    q2_law,
    q_t,
    q_t_law,
    run_session,
    session_law,
)
from ncmlab.qsim import (
    Circuit,
    Gate,
    Step,
    bell_circuit,
    enumerate_branches,
    random_circuit,
)

ATOL = 1e-9


def test_bell_no_measure_two_reads():
    # Two unmeasured reads of a Bell state are independent: uniform over
    # {00,11} x {00,11}.
    law = oracle_exact(bell_circuit(measure_first_step=0, extra_steps=1))
    expect = {"0000": 0.25, "0011": 0.25, "1100": 0.25, "1111": 0.25}
    assert sd(law, FiniteDist(expect)) <= ATOL


def test_bell_collapsed_reads_are_pinned():
    # Measuring one qubit first forces both reads onto the same branch.
    law = oracle_exact(bell_circuit(measure_first_step=1, extra_steps=1))
    expect = {"0000": 0.5, "1111": 0.5}
    assert sd(law, FiniteDist(expect)) <= ATOL


def test_reads_extend_collapsing_outcomes():
    rng = np.random.default_rng(0)
    for _ in range(5):
        c = random_circuit(rng)
        for _ in range(20):
            output = oracle_sample(c, rng)
            assert len(output.reads) == c.depth
            for read in output.reads:
                assert len(read) == c.qubits


def test_conditional_independence_given_branch():
    # Given the first read (hence the branch), the second read's law is the
    # branch readout, independent of the first read's free bits.
    c = bell_circuit(measure_first_step=1, extra_steps=1)
    joint = oracle_exact(c)
    tree = enumerate_branches(c)
    for v1 in ("00", "11"):
        got = condition(joint, v1)
        node = tree.node((v1[:1], ""))
        assert sd(got, node.readout) <= ATOL


def test_oracle_exact_matches_direct_sampling():
    # Dual route: the closed-form law against per-shot direct simulation.
    rng = np.random.default_rng(123)
    c = random_circuit(rng, max_qubits=2, max_steps=2)
    law = oracle_exact(c)
    emp = empirical(
        [oracle_sample(c, rng).flat() for _ in range(20000)]).to_dist()
    assert sd(emp, law) <= 0.02


def test_oracle_sample_many_matches_exact():
    rng = np.random.default_rng(7)
    for _ in range(5):
        c = random_circuit(rng)
        law = oracle_exact(c)
        outs = oracle_sample_many(c, 20000, rng)
        emp = empirical([o.flat() for o in outs]).to_dist()
        assert sd(emp, law) <= 0.02


def test_oracle_statelessness():
    # Two separate calls with a shared generator stay independent: the
    # joint empirical law factors into the product of the marginals.
    rng = np.random.default_rng(21)
    c = bell_circuit(measure_first_step=1, extra_steps=0)
    pairs = [(oracle_sample(c, rng).flat(), oracle_sample(c, rng).flat())
             for _ in range(20000)]
    joint = empirical([a + b for a, b in pairs]).to_dist()
    left = empirical([a for a, _ in pairs]).to_dist()
    right = empirical([b for _, b in pairs]).to_dist()
    assert sd(joint, product([left, right])) <= 0.02


def test_exact_guard():
    c = Circuit(qubits=8, steps=tuple(
        Step(gates=(Gate("h", (0,)),), measure=0) for _ in range(3)))
    with pytest.raises(InstanceTooLargeError):
        oracle_exact(c)


def test_q_t_bell():
    rng = np.random.default_rng(3)
    c = bell_circuit(measure_first_step=1, extra_steps=0)
    for _ in range(20):
        tau, w = q_t(c, 1, rng)
        assert w == tau[0]  # the unmeasured qubit mirrors the measured one


def test_q_t_law_is_transcript_times_suffix():
    rng = np.random.default_rng(17)
    c = random_circuit(rng, max_qubits=3, max_steps=2)
    t = c.depth
    law = q_t_law(c, t)
    # independent route: histogram q_t samples
    emp = empirical(["".join(tau) + w for tau, w in
                     (q_t(c, t, rng) for _ in range(20000))]).to_dist()
    assert sd(emp, law) <= 0.02


def test_q1_q2_reconstruct_oracle_fiber():
    # Fix a transcript prefix tau_t. Conditioned on reads extending tau_t,
    # the oracle law factors into q2 (past suffixes) and the continuation
    # law assembled from q1 with per-branch readouts.
    c = bell_circuit(measure_first_step=1, extra_steps=1)
    tree = enumerate_branches(c)
    joint = oracle_exact(c)
    tau = ("1",)
    fiber = condition(joint, "1")  # v_1 starts with u_1 = 1
    # past part: w_1 given the branch; future part: readout of step 2
    w_law = q2_law(c, tau, tree)
    cont = q1_law(c, tau, tree)
    assert cont.prob("") == 1.0  # step 2 measures nothing
    node = tree.node(("1", ""))
    rebuilt = product([w_law, node.readout])
    assert sd(fiber, rebuilt) <= ATOL


def test_q1_exact_vs_rejection():
    rng = np.random.default_rng(11)
    c = Circuit(qubits=2, steps=(
        Step(gates=(Gate("h", (0,)), Gate("cnot", (0, 1))), measure=1),
        Step(gates=(Gate("h", (1,)),), measure=2),
    ))
    tau = ("0",)
    law = q1_law(c, tau)
    exact_draws = ["".join(q1(c, tau, rng)) for _ in range(4000)]
    reject_draws = ["".join(q1(c, tau, rng, policy="rejection"))
                    for _ in range(4000)]
    assert sd(empirical(exact_draws).to_dist(), law) <= 0.03
    assert sd(empirical(reject_draws).to_dist(), law) <= 0.03


def test_q2_exact_vs_rejection():
    rng = np.random.default_rng(13)
    # step 1 leaves qubit 1 in |+>, step 2 re-randomizes qubit 0; both
    # transcripts entries are uniform and both w readouts stay random
    c = Circuit(qubits=2, steps=(
        Step(gates=(Gate("h", (0,)), Gate("h", (1,))), measure=1),
        Step(gates=(Gate("h", (0,)),), measure=1),
    ))
    tau = ("0", "1")
    law = q2_law(c, tau)
    exact_draws = ["".join(q2(c, tau, rng)) for _ in range(4000)]
    reject_draws = ["".join(q2(c, tau, rng, policy="rejection"))
                    for _ in range(4000)]
    assert sd(empirical(exact_draws).to_dist(), law) <= 0.03
    assert sd(empirical(reject_draws).to_dist(), law) <= 0.03


def test_rejection_budget_exhausts():
    rng = np.random.default_rng(5)
    c = bell_circuit(measure_first_step=2, extra_steps=0)
    with pytest.raises(RetryBudgetExceededError):
        q1(c, ("01",), rng, policy="rejection", budget=50)


def test_impossible_transcript_exact():
    c = bell_circuit(measure_first_step=2, extra_steps=0)
    with pytest.raises(ImpossibleConditionError):
        q2_law(c, ("01",))  # Bell state never collapses to 01


def test_transcript_validation():
    c = bell_circuit(measure_first_step=1, extra_steps=0)
    with pytest.raises(StructureError):
        q2_law(c, ("11",))  # wrong width for a 1-qubit measurement
    with pytest.raises(StructureError):
        q1_law(c, ("1", "1"))  # longer than the circuit


# -- sessions -----------------------------------------------------------------

def _single_query_machine(circuit, pick):
    """Query once, output pick(reads)."""
    def step(x, eps, history):
        if not history:
            return NextQuery(circuit)
        return FinalOutput(pick(history[0]))
    return FnMachine(step, query_bound=1)


def test_run_session_and_exact_law_agree():
    rng = np.random.default_rng(19)
    c = bell_circuit(measure_first_step=1, extra_steps=0)
    machine = _single_query_machine(c, lambda o: o.reads[0])
    law = session_law(machine, "", 0.5, exact_oracle_backend_law)
    assert sd(law, FiniteDist({"00": 0.5, "11": 0.5})) <= ATOL
    draws = [run_session(machine, "", 0.5, oracle_backend, rng)
             for _ in range(4000)]
    assert sd(empirical(draws).to_dist(), law) <= 0.03


def test_two_query_adaptive_session_law():
    c1 = bell_circuit(measure_first_step=1, extra_steps=0)
    c2a = Circuit(qubits=2, steps=(Step(gates=(Gate("x", (0,)),), measure=2),))
    c2b = Circuit(qubits=2, steps=(Step(gates=(), measure=2),))

    def step(x, eps, history):
        if not history:
            return NextQuery(c1)
        if len(history) == 1:
            # adapt on the first read
            return NextQuery(c2a if history[0].reads[0][0] == "0" else c2b)
        return FinalOutput(history[1].reads[0])

    machine = FnMachine(step, query_bound=2)
    law = session_law(machine, "", 0.5, exact_oracle_backend_law)
    # branch 0 -> X|00> reads 10; branch 1 -> identity reads 00
    assert sd(law, FiniteDist({"10": 0.5, "00": 0.5})) <= ATOL


def test_query_bound_enforced():
    c = bell_circuit(measure_first_step=1, extra_steps=0)

    def step(x, eps, history):
        return NextQuery(c)  # never halts

    machine = FnMachine(step, query_bound=2)
    rng = np.random.default_rng(0)
    with pytest.raises(ProtocolError):
        run_session(machine, "", 0.5, oracle_backend, rng)
    with pytest.raises(ProtocolError):
        session_law(machine, "", 0.5, exact_oracle_backend_law)


def test_decision_as_sampling_wrap():
    c = bell_circuit(measure_first_step=1, extra_steps=0)
    decide = _single_query_machine(c, lambda o: o.reads[0][:1])
    fam = decision_as_sampling(decide, {1: FiniteDist({"0": 1.0})})
    wrapped = fam.output_law("0")
    plain = session_law(decide, "0", 0.5, exact_oracle_backend_law)
    assert sd(wrapped, plain) <= ATOL
    # a machine with a 2-bit answer is rejected at evaluation time
    wide = _single_query_machine(c, lambda o: o.reads[0])
    fam_bad = decision_as_sampling(wide)
    with pytest.raises(StructureError):
        fam_bad.output_law("0")


def test_family_reference_check():
    c = bell_circuit(measure_first_step=1, extra_steps=0)
    machine = _single_query_machine(c, lambda o: o.reads[0])
    fam = PdqpInstanceFamily(
        machine=machine,
        instance_laws={1: FiniteDist({"0": 1.0})},
        reference={"0": FiniteDist({"00": 0.5, "11": 0.5})})
    assert fam.check_reference("0", 0.25) <= ATOL
    assert fam.circuit_for("0") is c
    with pytest.raises(StructureError):
        fam.instance_law(2)
