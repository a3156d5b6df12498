"""Toy signing and commitment schemes, and the collision attacks on them.

Neither toy is secure; both are chosen so every game value is exactly
enumerable. The point is the structure: each scheme induces a collision
puzzle whose honest Col output, fed back into the scheme's own security
game, wins it with a probability computable in closed form.

The signing toy is conjugate coding through a public random table: keys
are (x, theta), the verification key is R(x || theta), and signing measures
the encoded qubits in message-chosen bases. Matching-basis positions are
deterministic, the rest are coin flips.

The commitment toy hashes (x, theta) through a public table and sends the
digest; the committed bit is the first bit of x. Opening reveals (x, theta).
Two sampler forms are derived from it: the literal one commits to a fixed
bit and attaches a fresh uniform bit to the answer, the coherent one
superposes both bit values before the digest is measured. The collision
attack succeeds only against the coherent form, and that gap is preserved
here as a documented behavior, not smoothed over.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .dist import FiniteDist, push_forward, sd
from .errors import (
    ImpossibleConditionError,
    RetryBudgetExceededError,
    StructureError,
)
from .dcrpuzz import ColSampler, DcrScheme, _group_by_puzz, col_law
from .ncmo import DEFAULT_RETRY_BUDGET

MAX_MAC_QUBITS = 6
MAX_COM_QUBITS = 4


@dataclass(frozen=True)
class GameReport:
    """Outcome of a security game, empirical and (when enumerable) exact."""

    game: str
    trials: int
    successes: int
    exact: float | None = None

    def __post_init__(self):
        if self.trials < 0 or not 0 <= self.successes <= max(self.trials, 0):
            raise StructureError("successes must lie within trials")

    @property
    def rate(self) -> float:
        if self.trials == 0:
            if self.exact is None:
                raise StructureError("empty report has no rate")
            return self.exact
        return self.successes / self.trials


def bits(k: int) -> list[str]:
    return [format(i, f"0{k}b") for i in range(1 << k)]


# -- the signing toy ------------------------------------------------------------

class ToyMac:
    """Conjugate-coding one-time signatures behind a public table.

    The table R maps the 2n-bit key (x || theta) to a 2n-bit verification
    key. The private verifier keeps R's full preimage sets: a signature on
    m is accepted when some preimage of vk matches it on every position
    where the signing basis agrees with the encoding basis. Checking
    against the whole set (rather than one recorded key) keeps acceptance a
    property of vk alone, so any answer in the honest conditional verifies.
    """

    def __init__(self, n: int, lm: int, table: dict[str, str]):
        if not 1 <= n <= MAX_MAC_QUBITS:
            raise StructureError(f"n must be 1..{MAX_MAC_QUBITS}")
        if not 1 <= lm <= n:
            raise StructureError("message length must be 1..n")
        if len(table) != 1 << (2 * n):
            raise StructureError("table must cover every (x, theta)")
        for key, vk in table.items():
            if len(key) != 2 * n or len(vk) != 2 * n:
                raise StructureError("table entries must be 2n bits wide")
        self.n = n
        self.lm = lm
        self.table = dict(table)
        self.preimages: dict[str, list[tuple[str, str]]] = {}
        for key, vk in table.items():
            self.preimages.setdefault(vk, []).append((key[:n], key[n:]))

    def gen(self, rng: np.random.Generator) -> tuple[str, tuple[str, str]]:
        """(vk, signing key); the signing key is the encoded pair."""
        x = "".join(str(b) for b in rng.integers(0, 2, self.n))
        theta = "".join(str(b) for b in rng.integers(0, 2, self.n))
        return self.table[x + theta], (x, theta)

    def vk_law(self) -> FiniteDist:
        w = 1.0 / (1 << (2 * self.n))
        probs: dict[str, float] = {}
        for vk, pre in self.preimages.items():
            probs[vk] = w * len(pre)
        return FiniteDist(probs, _validate=False)

    def sign_law(self, x: str, theta: str, m: str) -> FiniteDist:
        """Measure the first lm encoded qubits in bases chosen by m."""
        if len(m) != self.lm:
            raise StructureError(f"message must be {self.lm} bits")
        per_bit = []
        for i in range(self.lm):
            if m[i] == theta[i]:
                per_bit.append((x[i],))
            else:
                per_bit.append(("0", "1"))
        probs = {}
        for combo in itertools.product(*per_bit):
            sigma = "".join(combo)
            probs[sigma] = probs.get(sigma, 0.0) + 1.0
        total = sum(probs.values())
        return FiniteDist({k: v / total for k, v in probs.items()},
                          _validate=False)

    def sign(self, x: str, theta: str, m: str,
             rng: np.random.Generator) -> str:
        return self.sign_law(x, theta, m).sample(rng)

    def ver(self, vk: str, m: str, sigma: str) -> bool:
        if len(m) != self.lm or len(sigma) != self.lm:
            return False
        for x, theta in self.preimages.get(vk, ()):
            if all(sigma[i] == x[i]
                   for i in range(self.lm) if m[i] == theta[i]):
                return True
        return False


def toy_mac(n: int, lm: int, rng: np.random.Generator) -> ToyMac:
    from .dcrpuzz import random_function_table
    return ToyMac(n, lm, random_function_table(rng, 2 * n, 2 * n))


def mac_to_dcrpuzz(mac: ToyMac) -> DcrScheme:
    """puzz = vk, ans = message followed by its signature.

    The sampler runs key generation, draws a uniform message, and signs it.
    The table itself plays the role of public parameters, so the setup law
    is the trivial point; the scheme object carries the table.
    """
    n, lm = mac.n, mac.lm
    key_w = 1.0 / (1 << (2 * n))
    m_w = 1.0 / (1 << lm)
    probs: dict[str, float] = {}
    for key, vk in mac.table.items():
        x, theta = key[:n], key[n:]
        for m in bits(lm):
            for sigma, p in mac.sign_law(x, theta, m).items():
                flat = vk + m + sigma
                probs[flat] = probs.get(flat, 0.0) + key_w * m_w * p
    law = FiniteDist(probs, _validate=False)
    return DcrScheme(puzz_len=2 * n, ans_len=2 * lm,
                     setup=FiniteDist.point(""), samp_laws={"": law})


def mac_break_exact(mac: ToyMac, scheme: DcrScheme | None = None) -> float:
    """Exact probability that an honest collision wins the forgery game.

    The game hands over (vk, m, sigma, m', sigma') and pays out when both
    pairs verify and the messages differ. Working per verification key
    keeps the quadratic pairing implicit: with q(m) the verified mass at
    message m, the win given vk is (sum q)^2 - sum q^2.
    """
    scheme = scheme or mac_to_dcrpuzz(mac)
    groups = _group_by_puzz(scheme.samp_law(""), scheme.puzz_len)
    lm = mac.lm
    win = 0.0
    for vk, g in groups.items():
        mass = sum(g.values())
        per_m: dict[str, float] = {}
        total = 0.0
        for ans, joint in g.items():
            m, sigma = ans[:lm], ans[lm:]
            if mac.ver(vk, m, sigma):
                p = joint / mass
                per_m[m] = per_m.get(m, 0.0) + p
                total += p
        win += mass * (total ** 2 - sum(v * v for v in per_m.values()))
    return win


def mac_break_via_collision(mac: ToyMac, trials: int,
                            rng: np.random.Generator,
                            source: str = "col",
                            scheme: DcrScheme | None = None) -> GameReport:
    """Play the forgery game with collision answers.

    source 'col' draws honest collisions; 'duplicate' reuses one honest
    answer twice, which always loses on the distinctness clause.
    """
    if source not in ("col", "duplicate"):
        raise StructureError(f"unknown collision source {source!r}")
    scheme = scheme or mac_to_dcrpuzz(mac)
    sampler = ColSampler(scheme, "")
    lm = mac.lm
    successes = 0
    for _ in range(trials):
        triple = sampler.sample(rng)
        ans2 = triple.ans if source == "duplicate" else triple.ans2
        m0, s0 = triple.ans[:lm], triple.ans[lm:]
        m1, s1 = ans2[:lm], ans2[lm:]
        if (m0 != m1 and mac.ver(triple.puzz, m0, s0)
                and mac.ver(triple.puzz, m1, s1)):
            successes += 1
    exact = mac_break_exact(mac, scheme) if source == "col" else 0.0
    return GameReport(game=f"mac-forgery[{source}]", trials=trials,
                      successes=successes, exact=exact)


def algorithm_c_mac(mac: ToyMac, rng: np.random.Generator,
                    budget: int = DEFAULT_RETRY_BUDGET):
    """Reference collision sampler: rerun key generation until the same
    verification key reappears, then sign a fresh uniform message.

    Returns (vk, m, sigma, m', sigma', retries); its law is exactly the
    collision law of the derived scheme, because rerunning gen conditions
    the key pair on vk.
    """
    vk, (x, theta) = mac.gen(rng)
    m = "".join(str(b) for b in rng.integers(0, 2, mac.lm))
    sigma = mac.sign(x, theta, m, rng)
    for retries in range(budget):
        vk2, (x2, theta2) = mac.gen(rng)
        if vk2 == vk:
            m2 = "".join(str(b) for b in rng.integers(0, 2, mac.lm))
            sigma2 = mac.sign(x2, theta2, m2, rng)
            return vk, m, sigma, m2, sigma2, retries
    raise RetryBudgetExceededError(
        f"verification key never reappeared within {budget} reruns")


def algorithm_c_mac_law(mac: ToyMac) -> FiniteDist:
    """Exact law of the rejection sampler's (vk, m, sigma, m', sigma')."""
    n, lm = mac.n, mac.lm
    key_w = 1.0 / (1 << (2 * n))
    m_w = 1.0 / (1 << lm)
    probs: dict[str, float] = {}
    for key, vk in mac.table.items():
        x, theta = key[:n], key[n:]
        pre = mac.preimages[vk]
        for m in bits(lm):
            first = mac.sign_law(x, theta, m)
            for sigma, p1 in first.items():
                base = key_w * m_w * p1
                for x2, theta2 in pre:
                    for m2 in bits(lm):
                        second = mac.sign_law(x2, theta2, m2)
                        for sigma2, p2 in second.items():
                            flat = vk + m + sigma + m2 + sigma2
                            w = base * m_w * p2 / len(pre)
                            probs[flat] = probs.get(flat, 0.0) + w
    return FiniteDist(probs, _validate=False)


def naive_forge_win_exact(mac: ToyMac) -> float:
    """A classical forger: measure the signing key once in the computational
    basis and submit that readout under two fixed distinct messages."""
    n, lm = mac.n, mac.lm
    m0 = "0" * lm
    m1 = "1" + "0" * (lm - 1)
    key_w = 1.0 / (1 << (2 * n))
    win = 0.0
    for key, vk in mac.table.items():
        x, theta = key[:n], key[n:]
        free = [i for i in range(lm) if theta[i] == "1"]
        reads = itertools.product("01", repeat=len(free))
        for choice in reads:
            sigma = list(x[:lm])
            for i, b in zip(free, choice):
                sigma[i] = b
            s = "".join(sigma)
            if mac.ver(vk, m0, s) and mac.ver(vk, m1, s):
                win += key_w / (1 << len(free))
    return win


# -- the commitment toy ------------------------------------------------------------

class ToyCommitment:
    """Hash-and-reveal bit commitment through a public table.

    The sender superposes (x, theta) with the committed bit as x's first
    bit, hashes through R into a digest register, and sends the measured
    digest. Opening reveals (x, theta); the receiver recomputes the digest
    and checks the first bit of x.
    """

    def __init__(self, n: int, c: int, table: dict[str, str]):
        if not 2 <= n <= MAX_COM_QUBITS:
            raise StructureError(f"n must be 2..{MAX_COM_QUBITS}")
        if not 1 <= c < n:
            raise StructureError("compression must be 1..n-1")
        if len(table) != 1 << (2 * n):
            raise StructureError("table must cover every (x, theta)")
        for key, y in table.items():
            if len(key) != 2 * n or len(y) != n - c:
                raise StructureError("table entry widths disagree")
        self.n = n
        self.c = c
        self.table = dict(table)
        # digest -> preimages, split by the committed bit x[0] = key[0]
        self.classes: dict[str, tuple[list[str], list[str]]] = {}
        for key, y in table.items():
            pair = self.classes.setdefault(y, ([], []))
            pair[int(key[0])].append(key)

    @property
    def digest_len(self) -> int:
        return self.n - self.c

    def preimage_list(self, y: str, b: int) -> list[str]:
        if y not in self.classes:
            return []
        return self.classes[y][b]

    def s1_law(self, b: int) -> FiniteDist:
        half = 1 << (2 * self.n - 1)
        probs = {y: len(pair[b]) / half
                 for y, pair in self.classes.items() if pair[b]}
        return FiniteDist(probs, _validate=False)

    def s1(self, b: int, rng: np.random.Generator) -> tuple[str, list[str]]:
        """Commit: returns the digest and the residual preimage support."""
        y = self.s1_law(b).sample(rng)
        return y, self.preimage_list(y, b)

    def s2(self, b: int, support: list[str],
           rng: np.random.Generator) -> str:
        """Open: measure the residual state. The bit argument is carried
        for interface symmetry; the measurement cannot depend on it."""
        if not support:
            raise StructureError("empty sender state")
        return support[int(rng.integers(len(support)))]

    def r2(self, y: str, s2: str, b: int) -> bool:
        return (len(s2) == 2 * self.n and self.table.get(s2) == y
                and s2[0] == str(b))

    def hiding_sd(self) -> float:
        return sd(self.s1_law(0), self.s1_law(1))


def toy_commitment(n: int, c: int, rng: np.random.Generator) -> ToyCommitment:
    from .dcrpuzz import random_function_table
    return ToyCommitment(n, c, random_function_table(rng, 2 * n, n - c))


def balanced_table(n: int, c: int) -> dict[str, str]:
    """A deterministic table whose digest classes are parity-balanced or
    single-parity.

    Every class except two holds equally many keys from each half of the
    domain (split by the committed bit); the last two digests each hold two
    keys of a single, opposite parity. The halves are equal-sized, so
    single-parity classes can only exist in such compensating pairs. This
    is the shape under which the coherent collision attack's success rate
    collapses to the closed form (1/2) * Pr[digest has both parities].
    """
    if not 1 <= c < n:
        raise StructureError("compression must be 1..n-1")
    digests = bits(n - c)
    if len(digests) < 3:
        raise StructureError("need at least 4 digest values to pin two "
                             "single-parity classes")
    half = 1 << (2 * n - 1)
    spread = len(digests) - 2
    per = (half - 2) // spread
    if per * spread != half - 2:
        raise StructureError(
            f"half size {half} minus 2 must split evenly over {spread} "
            f"balanced classes")
    zeros = [k for k in bits(2 * n) if k[0] == "0"]
    ones = [k for k in bits(2 * n) if k[0] == "1"]
    table = {}
    table[zeros[0]] = table[zeros[1]] = digests[-2]
    table[ones[0]] = table[ones[1]] = digests[-1]
    for i, key in enumerate(zeros[2:]):
        table[key] = digests[i // per]
    for i, key in enumerate(ones[2:]):
        table[key] = digests[i // per]
    return table


def com_to_dcrpuzz(com: ToyCommitment, form: str) -> DcrScheme:
    """puzz = digest, ans = committed bit followed by the opened key.

    The coherent form superposes both bit values before the digest
    collapses, so the answer's bit is determined by the key. The literal
    form commits to 0 and pairs the opening with an independent uniform
    bit, which is the direct reading of running the sender once.
    """
    n = com.n
    qubits = com.digest_len + 1 + 2 * n
    amp = 1.0 / (1 << n)
    amps = np.zeros(1 << qubits, dtype=complex)
    if form == "coherent":
        for key, y in com.table.items():
            amps[int(y + key[0] + key, 2)] = amp
    elif form == "literal":
        for key, y in com.table.items():
            if key[0] != "0":
                continue
            for b in "01":
                amps[int(y + b + key, 2)] = amp
    else:
        raise StructureError(f"unknown sampler form {form!r}")
    return DcrScheme(puzz_len=com.digest_len, ans_len=1 + 2 * n,
                     setup=FiniteDist.point(""), states={"": amps})


def both_parity_mass(com: ToyCommitment, form: str = "coherent") -> float:
    """Probability that the sampled digest has preimages of both parities."""
    scheme_law = com_to_dcrpuzz(com, form).samp_law("")
    y_law = push_forward(scheme_law, lambda s: s[:com.digest_len])
    return sum(p for y, p in y_law.items()
               if com.preimage_list(y, 0) and com.preimage_list(y, 1))


def com_break_exact(com: ToyCommitment, scheme: DcrScheme) -> float:
    """Exact probability that an honest collision opens both ways.

    Success means the two answers carry different bits and each opening
    passes the receiver's check.
    """
    law = col_law(scheme, "")
    p, a = scheme.puzz_len, scheme.ans_len
    win = 0.0
    for flat, w in law.items():
        y = flat[:p]
        b0, s0 = flat[p], flat[p + 1:p + a]
        b1, s1 = flat[p + a], flat[p + a + 1:]
        if (b0 != b1 and com.r2(y, s0, int(b0))
                and com.r2(y, s1, int(b1))):
            win += w
    return win


def com_break_via_collision(com: ToyCommitment, trials: int,
                            rng: np.random.Generator,
                            form: str = "coherent",
                            source: str = "col",
                            scheme: DcrScheme | None = None) -> GameReport:
    if source not in ("col", "duplicate"):
        raise StructureError(f"unknown collision source {source!r}")
    scheme = scheme or com_to_dcrpuzz(com, form)
    sampler = ColSampler(scheme, "")
    p = scheme.puzz_len
    successes = 0
    for _ in range(trials):
        triple = sampler.sample(rng)
        ans2 = triple.ans if source == "duplicate" else triple.ans2
        b0, s0 = triple.ans[0], triple.ans[1:]
        b1, s1 = ans2[0], ans2[1:]
        if (b0 != b1 and com.r2(triple.puzz, s0, int(b0))
                and com.r2(triple.puzz, s1, int(b1))):
            successes += 1
    exact = com_break_exact(com, scheme) if source == "col" else 0.0
    return GameReport(game=f"commitment-binding[{form},{source}]",
                      trials=trials, successes=successes, exact=exact)


def algorithm_c_com(com: ToyCommitment, rng: np.random.Generator,
                    form: str = "literal") -> tuple[str, str, str]:
    """Reference double-opener: commit once, regenerate the sender state
    conditioned on the digest, and open once to each bit.

    The literal reading regenerates from the bit-0 commit, so its second
    opening carries a bit-0 key and the receiver rejects it. The coherent
    reading conditions the superposed sender on (digest, bit); a digest
    whose class is single-parity makes the bit-1 conditioning impossible,
    which is raised rather than retried away.
    """
    if form == "literal":
        y, support = com.s1(0, rng)
        s2 = com.s2(0, list(support), rng)
        regen = com.preimage_list(y, 0)
        s2p = com.s2(1, regen, rng)
        return y, s2, s2p
    if form != "coherent":
        raise StructureError(f"unknown sampler form {form!r}")
    scheme_law = com_to_dcrpuzz(com, "coherent").samp_law("")
    y = push_forward(scheme_law, lambda s: s[:com.digest_len]).sample(rng)
    lists = com.preimage_list(y, 0), com.preimage_list(y, 1)
    for b in (0, 1):
        if not lists[b]:
            raise ImpossibleConditionError(
                f"digest {y} has no bit-{b} preimages to regenerate from")
    return y, com.s2(0, lists[0], rng), com.s2(1, lists[1], rng)


def algorithm_c_com_success(com: ToyCommitment, form: str = "literal") -> float:
    """Exact probability that the double-opener's two openings both verify.

    Digests whose conditioning is impossible count as failures.
    """
    if form == "literal":
        y_law = com.s1_law(0)
    elif form == "coherent":
        scheme_law = com_to_dcrpuzz(com, "coherent").samp_law("")
        y_law = push_forward(scheme_law, lambda s: s[:com.digest_len])
    else:
        raise StructureError(f"unknown sampler form {form!r}")
    win = 0.0
    for y, w in y_law.items():
        src0 = com.preimage_list(y, 0)
        src1 = com.preimage_list(y, 0) if form == "literal" \
            else com.preimage_list(y, 1)
        if not src0 or not src1:
            continue
        ok0 = sum(com.r2(y, s, 0) for s in src0) / len(src0)
        ok1 = sum(com.r2(y, s, 1) for s in src1) / len(src1)
        win += w * ok0 * ok1
    return win


# -- the audit of opening success and hiding ------------------------------------------

@dataclass(frozen=True)
class AuditReport:
    """Exact per-digest opening quantities against a threshold 1 - 1/p."""

    p: float
    success0: dict
    success1: dict
    g0: frozenset
    g1: frozenset
    hiding_sd: float
    good_mass: float          # mass of G0 and G1's intersection under b=0
    bound: float              # good_mass * (1 - 1/p)^2
    both_open: float          # E_y[success0 * success1]

    @property
    def holds(self) -> bool:
        return self.both_open >= self.bound - 1e-12


def audit_quantities(y_law: FiniteDist, success0: dict, success1: dict,
                     hiding: float, p: float) -> AuditReport:
    if p < 1:
        raise StructureError("threshold parameter p must be >= 1")
    thr = 1.0 - 1.0 / p
    g0 = frozenset(y for y in y_law.support if success0.get(y, 0.0) >= thr)
    g1 = frozenset(y for y in y_law.support if success1.get(y, 0.0) >= thr)
    good = sum(y_law.prob(y) for y in g0 & g1)
    both = sum(y_law.prob(y) * success0.get(y, 0.0) * success1.get(y, 0.0)
               for y in y_law.support)
    return AuditReport(p=p, success0=dict(success0), success1=dict(success1),
                       g0=g0, g1=g1, hiding_sd=hiding, good_mass=good,
                       bound=good * thr * thr, both_open=both)


def hiding_and_correctness_audit(com: ToyCommitment, p: float) -> AuditReport:
    """Enumerate per-digest opening success for both bits and check that
    the double-opening mass clears the thresholded lower bound."""
    y_law = com.s1_law(0)
    success0, success1 = {}, {}
    for y in set(com.s1_law(0).support) | set(com.s1_law(1).support):
        for b, out in ((0, success0), (1, success1)):
            pre = com.preimage_list(y, b)
            out[y] = (sum(com.r2(y, s, b) for s in pre) / len(pre)
                      if pre else 0.0)
    return audit_quantities(y_law, success0, success1, com.hiding_sd(), p)
