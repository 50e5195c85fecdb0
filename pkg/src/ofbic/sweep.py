"""Grid sweeps that turn the closed-form claims into machine checks.

Each check evaluates one claim at every applicable grid point and collects
counterexamples instead of aborting; a failed tuple is rendered with a CLI
command that reproduces it.  The default grid is small enough for a
sub-minute full formula sweep; simulation checks run on a seeded subsample.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .allocation import (
    SCHEME_FBXW,
    SCHEME_NOFB_MID,
    SCHEME_RSS,
    SCHEME_RSW,
    allocate_fbxw,
    allocate_rss,
    allocate_rsw,
)
from .channel import ChannelDomainError, ChannelParams
from .pipeline import DEFAULT_SEED, run_scheme, verify_trace
from .rates import (
    Regime,
    capacity_mbar0,
    dfb_reference,
    inner_bound,
    nofb_reference,
    outer_bound,
    r_fbxw,
    r_nom,
    r_rss,
    r_rsw,
    rate_bundle,
    regime_of,
)
from .rates import _inner_piece, _outer_piece

ALL_CHECKS = (
    "INNER_LE_OUTER",
    "COROLLARY1",
    "THEOREM3",
    "BOUNDARY_CONTINUITY",
    "APPENDIX_IDENTITIES",
    "OFB_EQ_DFB_WEAK",
    "SCHEME_VS_FORMULA",
)
FORMULA_CHECKS = ALL_CHECKS[:-1]

DEFAULT_RANGES = {"m": (0, 8), "n": (0, 8), "mbar": (0, 4), "nbar": (0, 4), "f": (0, 8)}


@dataclass(frozen=True)
class SweepSpec:
    ranges: dict = field(default_factory=lambda: dict(DEFAULT_RANGES))
    checks: tuple = ALL_CHECKS
    scheme_packets: int = 8
    sample: int = 200
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        for key, (lo, hi) in self.ranges.items():
            if key not in DEFAULT_RANGES or lo > hi or lo < 0:
                raise ChannelDomainError(f"bad sweep range {key}={lo}..{hi}")
        unknown = set(self.checks) - set(ALL_CHECKS)
        if unknown:
            raise ChannelDomainError(f"unknown checks {sorted(unknown)}")
        if "SCHEME_VS_FORMULA" in self.checks and self.scheme_packets < 8:
            raise ChannelDomainError("simulation checks need scheme_packets >= 8")

    def points(self):
        rng = {k: range(lo, hi + 1) for k, (lo, hi) in self.ranges.items()}
        for m in rng["m"]:
            for n in rng["n"]:
                for mbar in rng["mbar"]:
                    for nbar in rng["nbar"]:
                        for f in rng["f"]:
                            yield ChannelParams(m, n, mbar, nbar, f)


@dataclass(frozen=True)
class Counterexample:
    check: str
    p: ChannelParams
    detail: str

    def replay(self) -> str:
        base = (f"--m {self.p.m} --n {self.p.n} --mbar {self.p.mbar} "
                f"--nbar {self.p.nbar} --f {self.p.f}")
        if self.check == "SCHEME_VS_FORMULA":
            scheme = self.detail.split()[0]
            return f"ofbic simulate --scheme {scheme} {base}"
        return f"ofbic rates {base}"


@dataclass
class SweepReport:
    spec: SweepSpec
    evaluated: dict            # check -> points evaluated
    counterexamples: list      # Counterexample, sorted
    gap_histogram: dict        # open-regime outer-inner gap -> count

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def render(self) -> str:
        grid = " ".join(f"{k} {lo}..{hi}" for k, (lo, hi) in self.spec.ranges.items())
        lines = ["sweep results", f"  grid: {grid}"]
        for check in self.spec.checks:
            n_fail = sum(1 for c in self.counterexamples if c.check == check)
            n_eval = self.evaluated.get(check, 0)
            status = "pass" if n_fail == 0 else "FAIL"
            lines.append(f"  {check:<20} {n_eval:>7} points  "
                         f"{n_fail} counterexamples  {status}")
        if self.gap_histogram:
            hist = " ".join(f"{g}:{c}" for g, c in sorted(self.gap_histogram.items()))
            lines.append(f"  open-regime gap histogram (gap:count): {hist}")
        lines.append(f"  total counterexamples: {len(self.counterexamples)}")
        for ce in self.counterexamples[:50]:
            lines.append(f"  [{ce.check}] {ce.p.short()}: {ce.detail}")
            lines.append(f"      replay: {ce.replay()}")
        return "\n".join(lines)


def _in_regime_schemes(p: ChannelParams):
    tags = regime_of(p)
    jobs = []
    if Regime.WEAK in tags:
        jobs.append((SCHEME_FBXW, r_fbxw(p)))
        if p.mbar == 0:
            jobs.append((SCHEME_RSW, r_rsw(p)))
    if Regime.STRONG in tags:
        jobs.append((SCHEME_RSS, r_rss(p)))
    if Regime.MID in tags or Regime.DEGENERATE in tags:
        jobs.append((SCHEME_NOFB_MID, r_nom(p)))
    return jobs


def _check_point(check: str, p: ChannelParams):
    """Evaluate one formula check; returns (applicable, failure detail)."""
    tags = regime_of(p)
    if check == "INNER_LE_OUTER":
        inner, outer = inner_bound(p), outer_bound(p)
        return True, None if inner <= outer else f"inner {inner} > outer {outer}"
    if check == "COROLLARY1":
        if 3 * p.m < 2 * p.n and p.mbar < p.nbar:
            return False, None
        inner, outer = inner_bound(p), outer_bound(p)
        return True, None if inner == outer else f"inner {inner} != outer {outer}"
    if check == "THEOREM3":
        if p.mbar != 0:
            return False, None
        cap, outer = capacity_mbar0(p), outer_bound(p)
        return True, None if cap == outer else f"capacity {cap} != outer {outer}"
    if check == "BOUNDARY_CONTINUITY":
        if len(tags) < 2:
            return False, None
        outs = {t: _outer_piece(p, t) for t in tags}
        ins = {t: _inner_piece(p, t) for t in tags}
        if len(set(outs.values())) > 1 or len(set(ins.values())) > 1:
            return True, f"pieces disagree: outer {outs} inner {ins}"
        return True, None
    if check == "APPENDIX_IDENTITIES":
        if Regime.WEAK not in tags and Regime.STRONG not in tags:
            return False, None
        problems = []
        if Regime.WEAK in tags:
            alloc = allocate_fbxw(p)
            if alloc.bits_per_packet != r_fbxw(p):
                problems.append(f"fbxw {alloc.bits_per_packet} != {r_fbxw(p)}")
            if p.mbar == 0:
                alloc = allocate_rsw(p)
                if alloc.bits_per_packet != r_rsw(p):
                    problems.append(f"rsw {alloc.bits_per_packet} != {r_rsw(p)}")
        if Regime.STRONG in tags:
            alloc = allocate_rss(p)
            if alloc.bits_per_packet != r_rss(p):
                problems.append(f"rss {alloc.bits_per_packet} != {r_rss(p)}")
        return True, "; ".join(problems) or None
    if check == "OFB_EQ_DFB_WEAK":
        dfb = dfb_reference(p)
        inner = inner_bound(p)
        if dfb < inner:
            return True, f"dfb {dfb} < inner {inner}"
        if Regime.WEAK in tags and p.mbar >= p.nbar and inner != dfb:
            return True, f"inner {inner} != dfb {dfb} in weak mbar>=nbar"
        return True, None
    raise ChannelDomainError(f"unknown check {check!r}")


def sweep(spec: SweepSpec) -> SweepReport:
    evaluated = {check: 0 for check in spec.checks}
    counterexamples = []
    gap_histogram = {}
    points = list(spec.points())

    for p in points:
        for check in spec.checks:
            if check == "SCHEME_VS_FORMULA":
                continue
            applicable, detail = _check_point(check, p)
            if applicable:
                evaluated[check] += 1
                if detail:
                    counterexamples.append(Counterexample(check, p, detail))
        bundle = rate_bundle(p)
        if bundle.open_regime:
            gap_histogram[bundle.gap] = gap_histogram.get(bundle.gap, 0) + 1

    if "SCHEME_VS_FORMULA" in spec.checks:
        rng = random.Random(spec.seed)
        by_scheme = {s: [] for s in (SCHEME_FBXW, SCHEME_RSW, SCHEME_RSS,
                                     SCHEME_NOFB_MID)}
        for p in points:
            for scheme, want in _in_regime_schemes(p):
                by_scheme[scheme].append((p, want))
        for scheme, pool in by_scheme.items():
            if not pool:
                continue
            chosen = pool if len(pool) <= spec.sample else rng.sample(pool, spec.sample)
            for p, want in chosen:
                evaluated["SCHEME_VS_FORMULA"] += 1
                trace = run_scheme(scheme, p, spec.scheme_packets, seed=spec.seed)
                report = verify_trace(trace)
                rate = trace.steady_state_rate
                if rate != want or not report.ok:
                    counterexamples.append(Counterexample(
                        "SCHEME_VS_FORMULA", p,
                        f"{scheme} steady {rate} vs formula {want}; "
                        f"{report.summary()}",
                    ))

    counterexamples.sort(key=lambda c: (c.check, c.p.m, c.p.n, c.p.mbar,
                                        c.p.nbar, c.p.f))
    return SweepReport(spec, evaluated, counterexamples, gap_histogram)


# ---------------------------------------------------------------------------
# Comparison curves (overheard vs dedicated vs no feedback).

def _round_half_up(x: Fraction) -> int:
    return int(x + Fraction(1, 2)) if x >= 0 else -int(-x + Fraction(1, 2))


COMPARE_COLUMNS = (
    "alpha", "m", "n", "mbar", "nbar", "f",
    "ofb_inner", "ofb_outer", "dfb", "nofb", "ofb_eq_dfb", "all_equal_2f",
)


def compare_curves(n: int, mbar: int, nbar: int, f: int, alpha_grid):
    """Rows of (alpha, rates, flags) with m = alpha*n rounded to the grid."""
    if n <= 0:
        raise ChannelDomainError("compare_curves needs n > 0")
    rows = []
    for alpha in alpha_grid:
        alpha = Fraction(alpha)
        if alpha < 0:
            raise ChannelDomainError("alpha must be non-negative")
        m = _round_half_up(alpha * n)
        p = ChannelParams(m, n, mbar, nbar, f)
        inner, outer = inner_bound(p), outer_bound(p)
        dfb, nofb = dfb_reference(p), nofb_reference(p)
        rows.append({
            "alpha": alpha,
            "m": m, "n": n, "mbar": mbar, "nbar": nbar, "f": f,
            "ofb_inner": inner,
            "ofb_outer": outer,
            "dfb": dfb,
            "nofb": nofb,
            "ofb_eq_dfb": int(inner == dfb),
            "all_equal_2f": int(inner == dfb == nofb == 2 * f),
        })
    return rows


def default_alpha_grid(step_denominator: int = 8, top: int = 3):
    return [Fraction(k, step_denominator) for k in range(top * step_denominator + 1)]


def _cell(column, value) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        if value.denominator == 2 and column != "alpha":
            return f"{value.numerator // 2}.5"
        return f"{value.numerator}/{value.denominator}"
    return str(value)


def compare_csv(rows) -> str:
    lines = [",".join(COMPARE_COLUMNS)]
    for row in rows:
        lines.append(",".join(_cell(col, row[col]) for col in COMPARE_COLUMNS))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Which relay transmission is worth overhearing.

@dataclass(frozen=True)
class FrequencyChoice:
    theta: int
    cross: object              # RateBundle with (mbar=theta, nbar=0)
    direct: object             # RateBundle with (mbar=0, nbar=theta)
    verdict: str


def frequency_choice_report(theta: int, m: int, n: int, f: int) -> FrequencyChoice:
    """Compare listening to the cross relay against the own relay."""
    if theta < 0:
        raise ChannelDomainError("theta must be non-negative")
    cross = rate_bundle(ChannelParams(m, n, theta, 0, f))
    direct = rate_bundle(ChannelParams(m, n, 0, theta, f))
    if cross.inner > direct.inner:
        verdict = "cross"
    elif direct.inner > cross.inner:
        verdict = "direct"
    else:
        verdict = "tie"
    return FrequencyChoice(theta, cross, direct, verdict)
