"""Preset worked examples and their expected envelope structure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potentials import parse_potential
from .series import Envelope, candidates, envelope, validate_envelope
from .solver import DEFAULT_GRID, solve_subaction
from .symbolic import SymbolSeq


@dataclass(frozen=True)
class Scenario:
    name: str
    potential: str
    lam: float = 0.51
    d: int = 2
    period_max: int = 3
    preperiod_max: int = 2
    # expected structure; None means "export only"
    sequences: tuple[str, ...] | None = None
    switches: tuple[float, ...] | None = None
    switch_tol: float = 1e-6
    note: str = ""


SCENARIOS = {
    "quad_sym": Scenario("quad_sym", "quad_sym", sequences=("|10", "|01"), switches=(0.5,),
                         note="twist, maximizing measure on {1/3, 2/3}"),
    "quad_eps": Scenario("quad_eps", "quad_eps:0.05,0.2", sequences=("1|10", "|10", "|01"), switches=(0.21, 0.60),
                         switch_tol=0.01, note="three pieces, u = 0.21..., v = 0.60..."),
    "tent": Scenario("tent", "tent", sequences=("|10", "|01"), switches=(0.5,), note="not twist, two pieces"),
    "cosine": Scenario("cosine", "cosine", sequences=("|10", "|01"), switches=(0.5,), note="two pieces"),
    # the third piece is 0 followed by (01)^inf, i.e. 001010...
    "quad_drift": Scenario("quad_drift", "quad_drift", period_max=2, preperiod_max=1,
                           sequences=("|10", "|01", "0|01"), note="-(1.010 x - 0.455)^2, three pieces"),
    "sine": Scenario("sine", "sine", period_max=4, preperiod_max=3, note="export only; piecewise smooth boundary"),
}
ALIASES = {"ddd": "quad_sym", "aaa": "quad_eps", "bbb": "tent", "ccc": "cosine", "drift": "quad_drift"}


def get_scenario(name: str) -> Scenario:
    key = ALIASES.get(name, name)
    if key not in SCENARIOS:
        choices = ", ".join(sorted(set(SCENARIOS) | set(ALIASES)))
        raise KeyError(f"unknown scenario {name!r}; choose from {choices}")
    return SCENARIOS[key]


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    scenario: Scenario
    lam: float
    env: Envelope
    residual: float
    grid_distance: float
    mismatches: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.name,
            "potential": self.scenario.potential,
            "lambda": self.lam,
            "pieces": self.env.to_dicts(),
            "switch_points": self.env.switch_points,
            "calibration_residual": self.residual,
            "grid_distance": self.grid_distance,
            "expected": {"sequences": self.scenario.sequences, "switches": self.scenario.switches},
            "mismatches": list(self.mismatches),
            "ok": self.ok,
        }


def diff_structure(sc: Scenario, env: Envelope) -> list[str]:
    out = []
    if sc.sequences is not None:
        want = [SymbolSeq.parse(s, sc.d) for s in sc.sequences]
        got = env.sequences
        if got != want:
            out.append(f"sequences {[str(s) for s in got]} != expected {[str(s) for s in want]}")
    if sc.switches is not None:
        got = env.switch_points
        if len(got) != len(sc.switches):
            out.append(f"{len(got)} switch points, expected {len(sc.switches)}")
        else:
            for g, w in zip(got, sc.switches):
                if abs(g - w) > sc.switch_tol:
                    out.append(f"switch {g:.9f} not within {sc.switch_tol:g} of {w}")
    return out


def run_scenario(
    sc: Scenario,
    lam: float | None = None,
    n: int = DEFAULT_GRID,
    depth: int | None = None,
    period_max: int | None = None,
    preperiod_max: int | None = None,
    residual_tol: float = 1e-8,
    grid_tol: float = 2e-3,
) -> ScenarioResult:
    """Envelope, its calibration residual, the grid solution, and a diff against the expected structure."""
    lam = sc.lam if lam is None else lam
    A = parse_potential(sc.potential)
    cands = candidates(sc.d, period_max or sc.period_max, preperiod_max or sc.preperiod_max)
    env = envelope(A, lam, cands, depth=depth)
    residual = validate_envelope(env).residual
    b = solve_subaction(A, lam, sc.d, n).b
    dist = float(np.max(np.abs(env(b.nodes) - b.values)))
    mism = diff_structure(sc, env)
    if depth is None and residual > residual_tol:
        mism.append(f"calibration residual {residual:.3e} > {residual_tol:g}")
    if dist > grid_tol:
        mism.append(f"envelope differs from the grid solution by {dist:.3e}")
    return ScenarioResult(sc, lam, env, residual, dist, tuple(mism))
