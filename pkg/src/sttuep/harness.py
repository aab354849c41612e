"""Monte-Carlo experiment runner for success-probability sweeps.

Config files are flat ``key = value`` text (``#`` starts a comment)::

    n = 10
    M = 30
    w = 2
    fixed_weight = false
    epsilon = 0.2
    trials = 200
    seed = 7
    crossover = 0.05          # or: snr_db = 4.0
    copies = 6000             # N for sweeps that do not vary N
    sweep = B                 # N | B | crossover | snr_db
    sweep_values = 2048, 65536, 1048576
    max_repetition = 31       # longest repetition code budget matching may pick
    scheme.uep = stt_uep R_b=uncoded
    scheme.cc = stt_cc
    scheme.cqcr2 = cqcr b=2

Scheme parameters: ``stt_uep`` takes ``R_b`` and ``R_u`` code names, ``stt_cc``
and ``cqcr`` take ``R``; ``cqcr`` also takes ``b``; any scheme may set
``weight`` to sample observables of exactly that weight. Parameters left out
are resolved per sweep point by :func:`match_budget` when sweeping ``B``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from . import protocol
from .baselines import CqcrConfig, cqcr_transmit, stt_cc_config
from .fec import ChannelSpec, CodeSpec, code_family
from .qsim import LETTERS, PauliObservable, expectation, haar_random_state
from .shadows import acquire, basis_group_bits

SCHEME_KINDS = ("stt_uep", "stt_cc", "cqcr")
SWEEPS = ("N", "B", "crossover", "snr_db")
CSV_COLUMNS = (
    "scheme",
    "sweep_value",
    "B_actual",
    "N",
    "P_succ",
    "ci_low",
    "ci_high",
    "outage_rate",
    "trials",
    "seed",
)


class BudgetInfeasible(ValueError):
    """No admissible parameter choice fits under the target budget."""


@dataclass(frozen=True)
class SchemeSpec:
    name: str
    kind: str
    outcome_code: CodeSpec | None = None
    basis_code: CodeSpec | None = None
    b: int | None = None
    weight: int | None = None

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.kind == "stt_uep" and self.outcome_code is None:
            raise ValueError(f"scheme {self.name}: stt_uep needs R_b")
        if self.kind == "cqcr" and self.b is None:
            raise ValueError(f"scheme {self.name}: cqcr needs b")

    @classmethod
    def parse(cls, name: str, text: str) -> "SchemeSpec":
        kind, *params = text.split()
        kw = {}
        for item in params:
            key, _, value = item.partition("=")
            if key == "R_b":
                kw["outcome_code"] = CodeSpec.parse(value)
            elif key in ("R_u", "R"):
                kw["basis_code"] = CodeSpec.parse(value)
            elif key in ("b", "weight"):
                kw[key] = int(value)
            else:
                raise ValueError(f"scheme {name}: unknown parameter {key!r}")
        return cls(name, kind, **kw)

    def describe(self) -> str:
        parts = [self.kind]
        if self.outcome_code is not None:
            parts.append(f"R_b={self.outcome_code}")
        if self.basis_code is not None:
            parts.append(f"{'R_u' if self.kind == 'stt_uep' else 'R'}={self.basis_code}")
        if self.b is not None:
            parts.append(f"b={self.b}")
        if self.weight is not None:
            parts.append(f"weight={self.weight}")
        return " ".join(parts)

    @property
    def code(self) -> CodeSpec | None:
        """Single code of ``stt_cc`` / ``cqcr`` (stored in ``basis_code``)."""
        return self.basis_code


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 10
    M: int = 30
    w: int = 2
    fixed_weight: bool = False
    epsilon: float = 0.2
    trials: int = 200
    seed: int = 0
    crossover: float = 0.05
    snr_db: float | None = None
    copies: int = 2000
    sweep: str = "N"
    sweep_values: tuple = ()
    max_repetition: int = 31
    schemes: tuple[SchemeSpec, ...] = ()

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not 1 <= self.w <= self.n:
            raise ValueError(f"max weight must lie in [1, n], got {self.w}")
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {SWEEPS}")
        if not self.schemes:
            raise ValueError("no schemes configured")
        for s in self.schemes:
            if s.weight is not None and not 1 <= s.weight <= self.n:
                raise ValueError(f"scheme {s.name}: weight out of range")
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        self.channel()

    def channel(self, value=None) -> ChannelSpec:
        if self.sweep == "crossover" and value is not None:
            return ChannelSpec(float(value))
        if self.sweep == "snr_db" and value is not None:
            return ChannelSpec.from_snr_db(float(value))
        if self.snr_db is not None:
            return ChannelSpec.from_snr_db(self.snr_db)
        return ChannelSpec(self.crossover)


_SCALARS = {f.name: f.type for f in fields(ExperimentConfig) if f.name not in ("schemes", "sweep_values")}


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low not in ("1", "0", "true", "false", "yes", "no"):
        raise ValueError(f"not a boolean: {text!r}")
    return low in ("1", "true", "yes")


def parse_config(text: str, **overrides) -> ExperimentConfig:
    values: dict = {}
    schemes = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        if key.startswith("scheme."):
            schemes.append(SchemeSpec.parse(key[len("scheme.") :], value))
        elif key == "sweep_values":
            values[key] = tuple(float(v) for v in value.replace(",", " ").split())
        elif key in _SCALARS:
            kind = _SCALARS[key]
            if "bool" in kind:
                values[key] = _parse_bool(value)
            elif "float" in kind:
                values[key] = None if value.lower() == "none" else float(value)
            elif "int" in kind:
                values[key] = int(value)
            else:
                values[key] = value
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    values.update(overrides)
    return ExperimentConfig(schemes=tuple(schemes), **values)


def load_config(path, **overrides) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), **overrides)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for name in _SCALARS:
        value = getattr(cfg, name)
        lines.append(f"{name} = {str(value).lower() if isinstance(value, bool) else value}")
    lines.append("sweep_values = " + ", ".join(repr(v) for v in cfg.sweep_values))
    lines.extend(f"scheme.{s.name} = {s.describe()}" for s in cfg.schemes)
    return "\n".join(lines) + "\n"


# -- observables -------------------------------------------------------------


def sample_observables(
    n: int, M: int, w: int, rng: np.random.Generator, fixed_weight: bool = False
) -> list[PauliObservable]:
    """Random Pauli strings: weight uniform on 1..w (or exactly w), uniform support and letters."""
    if M < 1 or not 1 <= w <= n:
        raise ValueError(f"need M >= 1 and 1 <= w <= n, got M={M}, w={w}, n={n}")
    out = []
    for _ in range(M):
        weight = w if fixed_weight else int(rng.integers(1, w + 1))
        support = rng.choice(n, size=weight, replace=False)
        letters = rng.integers(0, 3, size=weight)
        out.append(PauliObservable(n, {int(q): LETTERS[c] for q, c in zip(support, letters)}))
    return out


# -- budget matching ---------------------------------------------------------


def stt_budget(n: int, N: int, outcome_code: CodeSpec, basis_code: CodeSpec) -> int:
    """Encoded bits of both shadow streams (padding included, CRC excluded)."""
    return outcome_code.encoded_length(n * N) + basis_code.encoded_length(basis_group_bits(n) * N)


def _max_copies(target: int, n: int, outcome_code: CodeSpec, basis_code: CodeSpec) -> int:
    lo, hi = 0, 1
    while stt_budget(n, hi, outcome_code, basis_code) <= target:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if stt_budget(n, mid, outcome_code, basis_code) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def match_budget(
    target: float, scheme: SchemeSpec, n: int, N: int | None = None, max_repetition: int = 31
) -> tuple[SchemeSpec, int, int]:
    """Resolve the free parameter of ``scheme`` so its budget is the largest one <= ``target``.

    A missing code is chosen from :func:`fec.code_family` with ``N`` held
    fixed; when all codes of a shadow scheme are given, ``N`` is maximized
    instead. A fully specified CQCR scheme is only checked against the target.
    Returns the resolved scheme, ``N`` (0 for CQCR) and the budget.
    """
    target = int(math.floor(target))
    family = code_family(max_repetition)
    best = None

    def consider(budget, key, resolved, copies):
        nonlocal best
        if budget <= target and (best is None or (budget, key) > best[:2]):
            best = (budget, key, resolved, copies)

    if scheme.kind == "cqcr":
        for code in [scheme.code] if scheme.code is not None else family:
            consider(code.encoded_length(2**n * scheme.b), -code.rate, replace(scheme, basis_code=code), 0)
    else:
        outcome_fixed = scheme.outcome_code if scheme.kind == "stt_uep" else None
        if scheme.basis_code is not None:
            outcome = outcome_fixed or scheme.basis_code
            copies = _max_copies(target, n, outcome, scheme.basis_code)
            if copies >= 1:
                consider(stt_budget(n, copies, outcome, scheme.basis_code), 0, scheme, copies)
        else:
            if N is None:
                raise ValueError("N must be fixed when resolving a code rate")
            for code in family:
                if outcome_fixed is not None and not code.rate < outcome_fixed.rate:
                    continue
                outcome = outcome_fixed or code
                consider(stt_budget(n, N, outcome, code), -code.rate, replace(scheme, basis_code=code), N)
    if best is None:
        raise BudgetInfeasible(f"scheme {scheme.name}: no admissible parameters within B <= {target}")
    return best[2], best[3], best[0]


# -- experiment --------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    scheme_index: int
    point_index: int
    sweep_value: float
    scheme: SchemeSpec | None
    N: int
    chan: ChannelSpec | None
    infeasible: str | None = None


@dataclass(frozen=True)
class TrialResult:
    scheme: str
    point_index: int
    B_actual: int
    N: int
    errors: np.ndarray = field(repr=False)
    outage: bool
    success: bool


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    sweep_value: float
    B_actual: int
    N: int
    P_succ: float
    ci_low: float
    ci_high: float
    outage_rate: float
    trials: int
    seed: int


def _point_for(cfg: ExperimentConfig, si: int, pi: int, value: float) -> SweepPoint:
    scheme = cfg.schemes[si]
    chan = cfg.channel(value)
    if cfg.sweep == "B":
        try:
            resolved, N, _ = match_budget(value, scheme, cfg.n, cfg.copies, cfg.max_repetition)
        except BudgetInfeasible as exc:
            return SweepPoint(si, pi, value, None, 0, None, str(exc))
        return SweepPoint(si, pi, value, resolved, N, chan)
    if scheme.basis_code is None:
        raise ValueError(f"scheme {scheme.name}: code rate must be given unless sweeping B")
    N = int(value) if cfg.sweep == "N" else cfg.copies
    return SweepPoint(si, pi, value, scheme, 0 if scheme.kind == "cqcr" else N, chan)


def sweep_points(cfg: ExperimentConfig) -> list[SweepPoint]:
    return [
        _point_for(cfg, si, pi, value)
        for si in range(len(cfg.schemes))
        for pi, value in enumerate(cfg.sweep_values)
    ]


def _trial_rng(cfg: ExperimentConfig, trial: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, trial, *stream])


def _uep_config(point: SweepPoint) -> protocol.UepConfig:
    s = point.scheme
    if s.kind == "stt_cc":
        return stt_cc_config(s.code, point.chan)
    return protocol.UepConfig(s.outcome_code, s.basis_code, point.chan)


def run_trial(cfg: ExperimentConfig, trial: int, points: list[SweepPoint]) -> list[TrialResult]:
    """One Monte-Carlo trial: fresh state and observables, every scheme at every point.

    All schemes of a trial see the same state; shadow schemes share one
    measured batch (smaller ``N`` use a prefix of it), so comparisons between
    curves use common random numbers.
    """
    state = haar_random_state(cfg.n, _trial_rng(cfg, trial, 0))
    obs_cache: dict = {}

    def observables_for(scheme: SchemeSpec):
        key = scheme.weight
        if key not in obs_cache:
            w = scheme.weight or cfg.w
            fixed = scheme.weight is not None or cfg.fixed_weight
            obs = sample_observables(cfg.n, cfg.M, w, _trial_rng(cfg, trial, 1, key or 0), fixed)
            obs_cache[key] = (obs, np.array([expectation(state, o) for o in obs]))
        return obs_cache[key]

    n_max = max((p.N for p in points if p.scheme is not None), default=0)
    batch = acquire(state, n_max, _trial_rng(cfg, trial, 2)) if n_max else None

    results = []
    for p in points:
        if p.scheme is None:
            continue
        scheme = p.scheme
        obs, truth = observables_for(scheme)
        rng = _trial_rng(cfg, trial, 3, p.scheme_index, p.point_index)
        if scheme.kind == "cqcr":
            state_hat, sent = cqcr_transmit(state, CqcrConfig(scheme.b, scheme.code, p.chan), rng)
            errors = np.abs(np.array([expectation(state_hat, o) for o in obs]) - truth)
            outage = False
        else:
            outcome, report = protocol.run(batch[: p.N], obs, _uep_config(p), rng)
            sent = outcome.B
            outage = not outcome.ok
            errors = np.full(len(obs), np.nan) if outage else np.abs(report.estimates - truth)
        success = (not outage) and bool(np.all(errors <= cfg.epsilon))
        results.append(TrialResult(scheme.name, p.point_index, sent, p.N, errors, outage, success))
    return results


def _trial_job(args):
    cfg, trial, points = args
    return run_trial(cfg, trial, points)


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def run_experiment(cfg: ExperimentConfig, workers: int = 1, progress=None) -> list[ResultRow]:
    """Run all trials and reduce to one row per (scheme, sweep value).

    Sweep points whose budget cannot be met are emitted with ``trials = 0``
    and NaN statistics.
    """
    points = sweep_points(cfg)
    jobs = ((cfg, t, points) for t in range(cfg.trials))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            per_trial = list(pool.map(_trial_job, jobs, chunksize=max(1, cfg.trials // (4 * workers))))
    else:
        per_trial = []
        for job in jobs:
            per_trial.append(_trial_job(job))
            if progress is not None:
                progress(len(per_trial), cfg.trials)

    rows = []
    for p in points:
        name = cfg.schemes[p.scheme_index].name
        if p.scheme is None:
            nan = float("nan")
            rows.append(ResultRow(name, p.sweep_value, 0, 0, nan, nan, nan, nan, 0, cfg.seed))
            continue
        trial_results = [r for res in per_trial for r in res if r.scheme == name and r.point_index == p.point_index]
        wins = sum(r.success for r in trial_results)
        outages = sum(r.outage for r in trial_results)
        budgets = {r.B_actual for r in trial_results}
        if len(budgets) != 1:
            raise RuntimeError(f"scheme {name}: budget varied across trials: {sorted(budgets)}")
        low, high = wilson_interval(wins, len(trial_results))
        rows.append(
            ResultRow(
                name,
                p.sweep_value,
                budgets.pop(),
                p.N,
                wins / len(trial_results),
                low,
                high,
                outages / len(trial_results),
                len(trial_results),
                cfg.seed,
            )
        )
    return rows


# -- output ------------------------------------------------------------------


def _cell(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_cell(getattr(row, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def parse_csv(text: str) -> list[ResultRow]:
    types = {f.name: f.type for f in fields(ResultRow)}
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for rec in reader:
        kw = {}
        for key, value in rec.items():
            kind = types[key]
            kw[key] = value if kind == "str" else (int(value) if kind == "int" else float(value))
        out.append(ResultRow(**kw))
    return out


def plot_rows(rows: list[ResultRow], path, sweep: str = "B") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in dict.fromkeys(r.scheme for r in rows):
        pts = [r for r in rows if r.scheme == name and r.trials > 0]
        if not pts:
            continue
        x = [r.B_actual if sweep == "B" else r.sweep_value for r in pts]
        order = np.argsort(x)
        x = np.asarray(x, dtype=float)[order]
        y = np.array([r.P_succ for r in pts])[order]
        lo = np.array([r.ci_low for r in pts])[order]
        hi = np.array([r.ci_high for r in pts])[order]
        (line,) = ax.plot(x, y, marker="o", label=name)
        ax.fill_between(x, lo, hi, color=line.get_color(), alpha=0.2)
    ax.set_xlabel({"B": "transmitted bits B", "N": "copies N"}.get(sweep, sweep))
    ax.set_ylabel("P_succ")
    if sweep in ("B", "N"):
        ax.set_xscale("log")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit(rows: list[ResultRow], path, fmt: str = "csv", sweep: str = "B") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path.write_text(rows_to_csv(rows))
    elif fmt == "svg_plot":
        plot_rows(rows, path, sweep)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    return path


def smallest_budget_reaching(rows: list[ResultRow], scheme: str, level: float) -> float:
    """Smallest actual B at which ``scheme`` reaches ``P_succ >= level`` (inf if never)."""
    hits = [r.B_actual for r in rows if r.scheme == scheme and r.trials > 0 and r.P_succ >= level]
    return float(min(hits)) if hits else math.inf
