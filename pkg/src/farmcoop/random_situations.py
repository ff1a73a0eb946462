"""Seeded random model instances for property testing.

Instances use linear decreasing curves with flat tails, the same shape
family as the bundled datasets.  Slopes are drawn so that the model's
curve conditions hold by construction:

* a linear decreasing curve ``a - s*q`` has ``(a - s*q) * q`` non-
  decreasing on ``[0, X]`` whenever ``s <= a / (2*X)``, so slopes are drawn
  below that limit;
* ``p_i(0) > t_i(0) + b(0)`` is enforced by giving every price curve a
  positive head margin over ``t_i(0) + b(0)``.

The compensation rate is drawn inside the sustainable range (a fraction of
the SC bound, which only depends on the farmer-less optima), after which
the instance is accepted only if the cooperative optima leave harvest
unsold (NDH).  Violating draws are rejected and redrawn, so every yielded
instance satisfies both standing assumptions.
"""

from __future__ import annotations

import numpy as np

from .game import CoalitionGame, build_game
from .optimize import HarvestDepletedError
from .situation import Situation, situation_from_dict

__all__ = ["random_game", "random_games", "random_situation", "random_situations"]


def _linear_with_tail(a: float, slope: float, sat: float):
    """Segments for a curve that falls linearly to a flat tail at ``sat``."""
    tail = a - slope * sat
    return [
        {"lo": 0.0, "hi": sat, "expr": f"{a!r} - {slope!r}*q"},
        {"lo": sat, "hi": None, "expr": f"{tail!r}"},
    ]


def _draw(rng: np.random.Generator) -> Situation:
    n = int(rng.integers(1, 5))
    Q = float(rng.uniform(1000.0, 5000.0))

    b0 = float(rng.uniform(2.0, 6.0))
    b_slope = float(rng.uniform(0.2, 0.8)) * b0 / (2.0 * Q)
    b_end = b0 - b_slope * Q                      # > 0 by construction
    C = float(rng.uniform(0.2, 0.9)) * Q * b_end  # keeps b(Q) > C/Q

    distributors = []
    for _ in range(n):
        t0 = float(rng.uniform(0.5, 2.0))
        t_sat = float(rng.uniform(0.5, 2.0)) * Q
        t_slope = float(rng.uniform(0.2, 0.8)) * t0 / (2.0 * t_sat)

        p0 = t0 + b0 + float(rng.uniform(1.0, 6.0))
        p_sat = float(rng.uniform(0.2, 1.2)) * Q / n
        p_slope = float(rng.uniform(0.3, 1.0)) * p0 / (2.0 * p_sat)

        distributors.append({
            "t": _linear_with_tail(t0, t_slope, t_sat),
            "p": _linear_with_tail(p0, p_slope, p_sat),
        })

    doc = {
        "name": "random",
        "Q": Q,
        "C": C,
        "bbar": 1.0,  # placeholder; replaced once the SC bound is known
        "b": [{"lo": 0.0, "hi": Q, "expr": f"{b0!r} - {b_slope!r}*q"}],
        "distributors": distributors,
    }
    return situation_from_dict(doc)


def random_game(rng, max_attempts: int = 200) -> CoalitionGame:
    """Draw a situation satisfying SC and NDH and return its built game.

    Rejection sampling: the SC bound is read off a probe solve at a tiny
    compensation rate (farmer-less optima do not depend on the rate and are
    reused), then bbar is drawn as a uniform fraction of the bound and the
    instance is kept if the cooperative optima respect NDH.
    """
    rng = np.random.default_rng(rng)
    for _ in range(max_attempts):
        try:
            sit = _draw(rng)
        except ValueError:
            continue
        market_cache: dict = {}
        try:
            probe = build_game(sit.replace_bbar(1e-12 * sit.cost_rate),
                               market_results=market_cache)
        except (HarvestDepletedError, ValueError):
            continue
        bound = probe.assumptions.sc_bound
        if not bound > 0.0:
            continue
        bbar = float(rng.uniform(0.05, 1.0)) * bound
        if bbar <= 0.0:
            continue
        try:
            game = build_game(sit.replace_bbar(bbar),
                              market_results=market_cache)
        except HarvestDepletedError:
            continue
        if game.assumptions.ok:
            return game
    raise RuntimeError(f"no valid instance found in {max_attempts} draws")


def random_games(seed: int, count: int):
    """Yield ``count`` seeded valid games (deterministic per seed)."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield random_game(rng)


def random_situation(rng, max_attempts: int = 200) -> Situation:
    """Draw one situation satisfying SC and NDH."""
    return random_game(rng, max_attempts=max_attempts).situation


def random_situations(seed: int, count: int):
    """Yield ``count`` seeded valid situations (deterministic per seed)."""
    for game in random_games(seed, count):
        yield game.situation
