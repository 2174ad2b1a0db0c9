"""Monte Carlo simulation of the check-and-abort table-generation protocols.

Protocol 2: the parties generate ``m`` one-time tables, Bob samples ``k``
labels uniformly without replacement, Alice reveals her (input, output) pair
for each sampled label, and Bob aborts when more than ``threshold`` checks
violate ``a AND b = e XOR f``.  Protocol 3 runs the same check independently
in both directions (label sets may overlap).

Each instance is simulated exactly: for a given strategy pair the joint
distribution over all per-instance classical values (hidden bits, measurement
outcomes, fabricated reports, check verdicts) is enumerated once from the
protocol's states, gates and measurement operators, and instances are then
drawn from that exact table.  This keeps millions of Monte Carlo instances
cheap without approximating any probability.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import protocol
from .numerics import xlog2
from .security import CheatParams, binary_entropy, example1_povm

__all__ = [
    "CheckConfig",
    "AliceStrategy",
    "BobStrategy",
    "CheckReport",
    "simulate_instances",
    "sample_labels",
    "run_protocol2",
    "run_protocol3",
    "detection_curve",
    "run_with_restarts",
    "suggested_check_count",
    "epsilon_estimate",
    "leak_bound",
    "EPS_C_MID",
    "EPS_C_A",
    "EPS_C_B",
]

# Estimator constant for est_epsilon = C_MID * (failures + 1) / k, with the
# order-equivalence bracket [C_A, C_B] surfaced in every report.
EPS_C_MID = 1.0
EPS_C_A = 0.5
EPS_C_B = 2.0

_CHUNK_TRIALS = 4096
_SQRT_HALF = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class CheckConfig:
    """Run geometry: tables generated, labels checked, thresholds, trials.

    Thresholds are maximum tolerated failure counts.  An integer is an
    absolute count; a float in [0, 1) is interpreted as a fraction of the
    checked labels (``floor(t * k)``).
    """

    m: int
    k_bob: int
    threshold_bob: float = 0
    k_alice: int = 0
    threshold_alice: float = 0
    trials: int = 1
    seed: int = 0
    c1: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        for name in ("k_bob", "k_alice"):
            k = getattr(self, name)
            if not (0 <= k <= self.m):
                raise ValueError(f"{name}={k} outside [0, m={self.m}]")
        for name in ("threshold_bob", "threshold_alice"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError("thresholds must be nonnegative")
            if isinstance(value, float) and not value.is_integer() and value >= 1.0:
                raise ValueError(f"fractional {name} must lie in [0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.c1 <= 0:
            raise ValueError("c1 must be positive")

    def resolved_threshold(self, side: str) -> int:
        """Absolute failure threshold for one side, resolving fractions of k."""
        value = self.threshold_bob if side == "bob" else self.threshold_alice
        k = self.k_bob if side == "bob" else self.k_alice
        if isinstance(value, float) and 0.0 < value < 1.0:
            return int(np.floor(value * k))
        return int(value)


@dataclass(frozen=True)
class AliceStrategy:
    """Sender behavior: preparation, measurement, and check-report policy.

    ``report_map`` (learn-y only) optionally replaces the default coin report
    with a deterministic map from her binary measurement outcome ``o`` to the
    reported pair ``(a, e) = report_map[o]``; used to exhaust the
    deterministic report policies in tests.
    """

    kind: str                               # honest | learn-y | param | mix
    params: CheatParams | None = None
    report_map: tuple | None = None
    mix: tuple = ()                         # ((weight, AliceStrategy), ...)

    def __post_init__(self):
        if self.kind not in ("honest", "learn-y", "param", "mix"):
            raise ValueError(f"unknown Alice strategy {self.kind!r}")
        if self.kind == "param" and self.params is None:
            raise ValueError("param strategy needs an amplitude triple")
        if self.kind == "mix":
            if not self.mix:
                raise ValueError("mix strategy needs components")
            total = sum(w for w, _ in self.mix)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"mix weights sum to {total}, expected 1")

    @classmethod
    def honest(cls) -> "AliceStrategy":
        return cls(kind="honest")

    @classmethod
    def learn_y(cls, report_map: tuple | None = None) -> "AliceStrategy":
        return cls(kind="learn-y", report_map=report_map)

    @classmethod
    def param(cls, params: CheatParams) -> "AliceStrategy":
        return cls(kind="param", params=params)

    @classmethod
    def per_instance_mix(cls, components) -> "AliceStrategy":
        return cls(kind="mix", mix=tuple((float(w), s) for w, s in components))


@dataclass(frozen=True)
class BobStrategy:
    """Receiver behavior: honest gate, input-reading basis measurement, or
    a phase error of fixed ``angle`` on the |2> component."""

    kind: str                               # honest | computational | phase-noise
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in ("honest", "computational", "phase-noise"):
            raise ValueError(f"unknown Bob strategy {self.kind!r}")
        if not np.isfinite(self.angle):
            raise ValueError("angle must be finite")

    @classmethod
    def honest(cls) -> "BobStrategy":
        return cls(kind="honest")

    @classmethod
    def computational_basis(cls) -> "BobStrategy":
        return cls(kind="computational")

    @classmethod
    def phase_noise(cls, angle: float) -> "BobStrategy":
        return cls(kind="phase-noise", angle=float(angle))


# ---------------------------------------------------------------------------
# Exact per-instance distribution
# ---------------------------------------------------------------------------

_FIELDS = ("y", "r", "a_rep", "e_rep", "bob_fail", "alice_fail",
           "x", "e", "honest_alice", "x_guess_correct")


def _alice_sources(alice: AliceStrategy):
    if alice.kind == "honest":
        return [(0.25, {"x": x, "t": t}, protocol.alice_prepare(x, t).amplitudes)
                for x in (0, 1) for t in (0, 1)]
    if alice.kind == "learn-y":
        psi = np.array([_SQRT_HALF, _SQRT_HALF, 0.0], dtype=complex)
        return [(1.0, {}, psi)]
    if alice.kind == "param":
        p = alice.params
        return [(1.0, {}, np.array([p.a, p.b, p.c], dtype=complex))]
    raise ValueError(alice.kind)


def _bob_branches(bob: BobStrategy, psi: np.ndarray):
    """(prob, info, returned_state) branches for one sent state."""
    out = []
    for y in (0, 1):
        for r in (0, 1):
            gate = protocol.bob_gate(y, r)
            if bob.kind == "honest":
                out.append((0.25, {"y": y, "r": r}, gate @ psi))
            elif bob.kind == "phase-noise":
                noise = np.diag([1.0, 1.0, np.exp(1j * bob.angle)])
                out.append((0.25, {"y": y, "r": r}, noise @ (gate @ psi)))
            else:  # computational-basis read of the incoming qutrit
                weights = np.abs(psi) ** 2
                for g in range(3):
                    if weights[g] < 1e-15:
                        continue
                    collapsed = np.zeros(3, dtype=complex)
                    collapsed[g] = 1.0
                    ret = gate @ collapsed
                    if g < 2:
                        out.append((0.25 * weights[g], {"y": y, "r": r, "xhat": g}, ret))
                    else:  # outcome |2> carries no input information: fair guess
                        for xhat in (0, 1):
                            out.append((0.125 * weights[g],
                                        {"y": y, "r": r, "xhat": xhat}, ret))
    return out


def _measure_rows(alice: AliceStrategy, info_a: dict, returned: np.ndarray):
    """(prob, report_a, report_e, x, e, honest) rows for one returned state."""
    rows = []
    if alice.kind == "honest":
        x, t = info_a["x"], info_a["t"]
        probs = np.abs(protocol.alice_basis(x) @ returned) ** 2
        for o in range(3):
            if probs[o] < 1e-15:
                continue
            if o < 2:
                e = o ^ t
                rows.append((probs[o], x, e, x, e, 1))
            else:  # impossible-under-honesty outcome: unbiased output coin
                for e in (0, 1):
                    rows.append((0.5 * probs[o], x, e, x, e, 1))
        return rows

    if alice.kind == "learn-y":
        basis = np.array([[_SQRT_HALF, _SQRT_HALF, 0.0],
                          [_SQRT_HALF, -_SQRT_HALF, 0.0],
                          [0.0, 0.0, 1.0]], dtype=complex)
        probs = np.abs(basis @ returned) ** 2
        for o in range(3):
            if probs[o] < 1e-15:
                continue
            observed = ((o,), (1.0,)) if o < 2 else ((0, 1), (0.5, 0.5))
            for obs, w in zip(*observed):
                if alice.report_map is not None:
                    a_rep, e_rep = alice.report_map[obs]
                    rows.append((probs[o] * w, a_rep, e_rep, 0, 0, 0))
                else:  # default: claim input 0, report a coin for the output
                    for e_rep in (0, 1):
                        rows.append((probs[o] * w * 0.5, 0, e_rep, 0, 0, 0))
        return rows

    if alice.kind == "param":
        p = alice.params
        alpha = float(np.arctan2(p.c, p.b))
        povm = example1_povm(alpha)
        probs = np.array([np.vdot(returned, m @ returned).real for m in povm.elements])
        probs = np.clip(probs, 0.0, None)
        for o in range(4):
            if probs[o] < 1e-15:
                continue
            if o >= 2:  # outcomes 2/3 reveal the receiver's output bit
                rows.append((probs[o], 0, o - 2, 0, 0, 0))
            else:       # outcomes 0/1 reveal y only; the output is a blind coin
                for e_rep in (0, 1):
                    rows.append((0.5 * probs[o], 0, e_rep, 0, 0, 0))
        return rows

    raise ValueError(alice.kind)


@lru_cache(maxsize=None)
def _instance_table(alice: AliceStrategy, bob: BobStrategy):
    """Exact joint distribution of all per-instance classical values."""
    probs = []
    columns = {name: [] for name in _FIELDS}
    for p_a, info_a, psi in _alice_sources(alice):
        for p_b, info_b, returned in _bob_branches(bob, psi):
            for p_m, a_rep, e_rep, x, e, honest in _measure_rows(alice, info_a, returned):
                prob = p_a * p_b * p_m
                if prob <= 0.0:
                    continue
                y, r = info_b["y"], info_b["r"]
                bob_fail = int((a_rep & y) != (e_rep ^ r))
                alice_fail = int((x & y) != (e ^ r)) if honest else 0
                xg = int(info_b.get("xhat", -1) == x) if honest else 0
                probs.append(prob)
                for name, value in zip(_FIELDS, (y, r, a_rep, e_rep, bob_fail,
                                                 alice_fail, x, e, honest, xg)):
                    columns[name].append(value)
    prob_arr = np.asarray(probs, dtype=float)
    prob_arr = prob_arr / prob_arr.sum()
    return prob_arr, {name: np.asarray(vals, dtype=np.int8)
                      for name, vals in columns.items()}


def simulate_instances(alice: AliceStrategy, bob: BobStrategy, n: int,
                       rng: np.random.Generator) -> dict:
    """Draw ``n`` protocol instances; returns per-instance value arrays."""
    if alice.kind == "mix":
        weights = np.array([w for w, _ in alice.mix])
        pick = rng.choice(len(alice.mix), size=n, p=weights / weights.sum())
        out = {name: np.zeros(n, dtype=np.int8) for name in _FIELDS}
        for idx, (_, sub) in enumerate(alice.mix):
            mask = pick == idx
            count = int(mask.sum())
            if count == 0:
                continue
            sub_fields = simulate_instances(sub, bob, count, rng)
            for name in _FIELDS:
                out[name][mask] = sub_fields[name]
        return out
    probs, columns = _instance_table(alice, bob)
    idx = rng.choice(len(probs), size=n, p=probs)
    return {name: vals[idx] for name, vals in columns.items()}


# ---------------------------------------------------------------------------
# Check protocols
# ---------------------------------------------------------------------------

def sample_labels(rng: np.random.Generator, trials: int, m: int, k: int) -> np.ndarray:
    """(trials, k) check-label sets, uniform without replacement per trial."""
    keys = rng.random((trials, m))
    return np.argsort(keys, axis=1)[:, :k]


def _entropy_vec(delta: np.ndarray) -> np.ndarray:
    return -xlog2(delta) - xlog2(1.0 - delta)


def _wilson_ci(successes: int, n: int, z: float = 1.96) -> tuple:
    if n == 0:
        return (0.0, 1.0)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * np.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True, eq=False)
class CheckReport:
    """Outcome of a Monte Carlo run of one side's checking.

    Per-trial arrays carry the failure count, abort flag, failure-rate
    estimate ``c_mid * (failures + 1) / k`` clipped to [0, 1], the leak bound
    ``h(min(c1 * eps, 1/2))`` in bits, and the number of delivered
    (unchecked, non-aborted) tables.  ``est_epsilon``/``leak_bound_bits`` are
    NaN when ``k = 0``.  The order-equivalence bracket ``[c_a, c_b]`` around
    the estimator constant is recorded rather than hidden.
    """

    protocol_id: int
    side: str
    m: int
    k: int
    threshold: int
    trials: int
    failures: np.ndarray
    aborted: np.ndarray
    est_epsilon: np.ndarray
    leak_bound_bits: np.ndarray
    tables_delivered: np.ndarray
    abort_probability: float
    abort_ci: tuple
    c_mid: float = EPS_C_MID
    c_a: float = EPS_C_A
    c_b: float = EPS_C_B
    c1: float = 1.0
    extras: dict = field(default_factory=dict)

    @property
    def mean_failures(self) -> float:
        return float(self.failures.mean())

    def to_dict(self, max_records: int | None = None) -> dict:
        count = self.trials if max_records is None else min(self.trials, max_records)

        def _num(value):
            return None if np.isnan(value) else float(value)

        records = [
            {"aborted": bool(self.aborted[i]),
             "est_epsilon": _num(self.est_epsilon[i]),
             "failures": int(self.failures[i]),
             "leak_bound_bits": _num(self.leak_bound_bits[i]),
             "tables_delivered": int(self.tables_delivered[i])}
            for i in range(count)
        ]
        return {
            "abort_ci": [float(self.abort_ci[0]), float(self.abort_ci[1])],
            "abort_probability": float(self.abort_probability),
            "constants": {"c1": self.c1, "c_a": self.c_a, "c_b": self.c_b,
                          "c_mid": self.c_mid},
            "extras": {key: float(val) for key, val in self.extras.items()},
            "k": self.k,
            "m": self.m,
            "mean_failures": self.mean_failures,
            "protocol": self.protocol_id,
            "records": records,
            "side": self.side,
            "threshold": self.threshold,
            "trials": self.trials,
        }


def _finalize_report(protocol_id, side, config, k, threshold, failures,
                     delivered, extras) -> CheckReport:
    failures = np.asarray(failures)
    aborted = failures > threshold
    if k >= 1:
        eps = np.clip(EPS_C_MID * (failures + 1.0) / k, 0.0, 1.0)
        leak = _entropy_vec(np.minimum(config.c1 * eps, 0.5))
    else:
        eps = np.full(failures.shape, np.nan)
        leak = np.full(failures.shape, np.nan)
    delivered = np.where(aborted, 0, delivered)
    return CheckReport(
        protocol_id=protocol_id, side=side, m=config.m, k=k, threshold=threshold,
        trials=config.trials, failures=failures, aborted=aborted, est_epsilon=eps,
        leak_bound_bits=leak, tables_delivered=delivered,
        abort_probability=float(aborted.mean()),
        abort_ci=_wilson_ci(int(aborted.sum()), len(aborted)),
        c1=config.c1, extras=extras)


def run_protocol2(config: CheckConfig, alice: AliceStrategy,
                  rng: np.random.Generator | None = None) -> CheckReport:
    """Bob checks Alice: generate m tables, sample k_bob labels, count failures.

    A check of label j fails when Alice's reported pair ``(a_j, e_j)``
    violates ``a_j AND b_j = e_j XOR f_j`` against Bob's true values; Bob
    aborts a trial when failures exceed his threshold.  The report carries
    the failure-rate estimate and leak bound for the delivered tables.
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    bob = BobStrategy.honest()
    m, k = config.m, config.k_bob
    failures = np.zeros(config.trials, dtype=np.int64)
    for start in range(0, config.trials, _CHUNK_TRIALS):
        count = min(_CHUNK_TRIALS, config.trials - start)
        fields = simulate_instances(alice, bob, count * m, rng)
        fail = fields["bob_fail"].reshape(count, m)
        labels = sample_labels(rng, count, m, k)
        if k > 0:
            failures[start:start + count] = np.take_along_axis(fail, labels, axis=1).sum(axis=1)
    delivered = np.full(config.trials, m - k)
    return _finalize_report(2, "bob", config, k, config.resolved_threshold("bob"),
                            failures, delivered, {})


def run_protocol3(config: CheckConfig, alice: AliceStrategy, bob: BobStrategy,
                  rng: np.random.Generator | None = None):
    """Both parties check: returns ``(bob_report, alice_report)``.

    Per trial one table batch is shared; Bob samples ``k_bob`` labels and
    checks Alice's reports, Alice independently samples ``k_alice`` labels
    (overlap allowed) and checks Bob's reported ``(b_j, f_j)``.  Each side
    aborts on its own threshold; delivered tables are those never checked,
    zero when either side aborts.  Against a cheating Alice her own check is
    vacuous (she has no honest values) and never aborts.
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    m, k_b, k_a = config.m, config.k_bob, config.k_alice
    failures_b = np.zeros(config.trials, dtype=np.int64)
    failures_a = np.zeros(config.trials, dtype=np.int64)
    unique_checked = np.zeros(config.trials, dtype=np.int64)
    guess_sum, guess_count = 0.0, 0
    for start in range(0, config.trials, _CHUNK_TRIALS):
        count = min(_CHUNK_TRIALS, config.trials - start)
        fields = simulate_instances(alice, bob, count * m, rng)
        bob_fail = fields["bob_fail"].reshape(count, m)
        alice_fail = fields["alice_fail"].reshape(count, m)
        labels_b = sample_labels(rng, count, m, k_b)
        labels_a = sample_labels(rng, count, m, k_a)
        sl = slice(start, start + count)
        if k_b > 0:
            failures_b[sl] = np.take_along_axis(bob_fail, labels_b, axis=1).sum(axis=1)
        if k_a > 0:
            failures_a[sl] = np.take_along_axis(alice_fail, labels_a, axis=1).sum(axis=1)
        checked = np.zeros((count, m), dtype=bool)
        if k_b > 0:
            np.put_along_axis(checked, labels_b, True, axis=1)
        if k_a > 0:
            np.put_along_axis(checked, labels_a, True, axis=1)
        unique_checked[sl] = checked.sum(axis=1)
        if bob.kind == "computational" and alice.kind == "honest":
            guess_sum += float(fields["x_guess_correct"].sum())
            guess_count += count * m
    extras = {}
    if guess_count:
        extras["x_guess_rate"] = guess_sum / guess_count
    delivered = config.m - unique_checked
    bob_report = _finalize_report(3, "bob", config, k_b, config.resolved_threshold("bob"),
                                  failures_b, delivered, dict(extras))
    alice_report = _finalize_report(3, "alice", config, k_a,
                                    config.resolved_threshold("alice"),
                                    failures_a, delivered, dict(extras))
    # Zero the deliveries whenever the opposite side aborted as well.
    either = bob_report.aborted | alice_report.aborted
    for report in (bob_report, alice_report):
        np.copyto(report.tables_delivered, np.where(either, 0, report.tables_delivered))
    return bob_report, alice_report


def run_with_restarts(config: CheckConfig, alice: AliceStrategy, restarts: int,
                      rng: np.random.Generator | None = None) -> dict:
    """Model a budget of protocol restarts after aborted runs.

    Restarted runs use fresh randomness and the receiver's hidden bits are
    independent across them, so a cheater cannot correlate attempts; the
    overall probability of slipping past the checks grows at most additively
    with the budget.  Runs ``restarts`` independent one-sided check protocols
    per trial and returns the measured any-attempt pass probability next to
    the additive bound ``restarts * single_run_pass``.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(config.seed) if rng is None else rng
    passed_any = np.zeros(config.trials, dtype=bool)
    single_pass_total = 0.0
    for _ in range(restarts):
        report = run_protocol2(config, alice, rng)
        passed = ~report.aborted
        single_pass_total += float(passed.mean())
        passed_any |= passed
    single = single_pass_total / restarts
    return {
        "additive_pass_bound": min(1.0, restarts * single),
        "overall_pass_probability": float(passed_any.mean()),
        "restarts": restarts,
        "single_run_pass_probability": single,
        "trials": config.trials,
    }


def detection_curve(strategy, k_values, threshold: int, trials: int,
                    rng: np.random.Generator) -> list:
    """Abort probability versus number of checks for one cheating strategy.

    For an :class:`AliceStrategy` the Bob-checks protocol is run with
    ``m = k`` (every table checked); for a :class:`BobStrategy` the Alice
    side of the two-way protocol is used.  Honest strategies give exactly 0.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100 for a meaningful curve")
    curve = []
    for k in k_values:
        k = int(k)
        if isinstance(strategy, AliceStrategy):
            config = CheckConfig(m=k, k_bob=k, threshold_bob=threshold, trials=trials)
            report = run_protocol2(config, strategy, rng)
        else:
            config = CheckConfig(m=k, k_bob=0, k_alice=k,
                                 threshold_alice=threshold, trials=trials)
            _, report = run_protocol3(config, AliceStrategy.honest(), strategy, rng)
        curve.append((k, report.abort_probability))
    return curve


def suggested_check_count(tables_needed: int) -> int:
    """Default number of checks for a target count of delivered tables.

    The per-table leak bound shrinks like h(1/k), so k must grow strictly
    faster than the table budget; k = ceil(L^1.1) keeps the expected number
    of unsafe delivered tables below one while the overhead ratio stays
    sublinear.  Callers wanting a different security level pass their own k.
    """
    if tables_needed < 1:
        raise ValueError("tables_needed must be >= 1")
    return int(np.ceil(tables_needed ** 1.1))


def epsilon_estimate(failures: int, k: int) -> float:
    """Failure-rate estimate ``(failures + 1) / k`` clipped to [0, 1]."""
    if k < 1:
        raise ValueError("estimate undefined for k < 1")
    if failures < 0:
        raise ValueError("failures must be nonnegative")
    return float(min(1.0, EPS_C_MID * (failures + 1) / k))


def leak_bound(est_epsilon: float, c1: float = 1.0) -> float:
    """Per-table information cap ``h(min(c1 * eps, 1/2))`` in bits."""
    if not (0.0 <= est_epsilon <= 1.0):
        raise ValueError(f"est_epsilon {est_epsilon} outside [0, 1]")
    if c1 <= 0:
        raise ValueError("c1 must be positive")
    return binary_entropy(min(c1 * est_epsilon, 0.5))
