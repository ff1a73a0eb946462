"""The single-period farmer/distributor supply-chain data model.

A :class:`Situation` bundles the harvest size ``Q`` (kg), the harvest cost
``C``, the per-kg purchasing-cost curve ``b`` quoted to outside buyers, each
distributor's transport-cost curve ``t_i`` and market price curve ``p_i``,
and the per-kg compensation rate ``bbar`` a cooperating distributor group
pays the farmer for unsold harvest.

Situations load from a small JSON document (see docs/situation-format.md)::

    {
      "name": "...",                      # optional
      "Q": 3000, "C": 3000, "bbar": 0.2,
      "b": [{"lo": 0, "hi": 3000, "expr": "5 - q/2000"}],
      "distributors": [
        {"t": [...segments...], "p": [...segments...]},
        ...
      ]
    }

Static validation enforces the model's standing inequalities that do not
require optimization: Q > 0, C > 0, bbar > 0, b(Q) > C/Q, and
p_i(0) > t_i(0) + b(0) for every distributor (an infinite p_i(0), e.g. from
a 1/sqrt(q) term, satisfies the inequality trivially; b(0) itself must be
finite so the check is decidable).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .piecewise import PiecewiseFunction

__all__ = [
    "Situation",
    "SituationError",
    "Coalition",
    "load_situation",
    "situation_from_dict",
    "enumerate_coalitions",
    "builtin_situation",
    "BUILTIN_SITUATIONS",
    "MAX_DISTRIBUTORS",
]

# Core membership checks cost Theta(2^n); the model's regime is small n.
MAX_DISTRIBUTORS = 16


class SituationError(ValueError):
    """Invalid situation document; message names each failed condition."""


@dataclass(frozen=True)
class Coalition:
    """A set of distributors (bitmask, bit i-1 = distributor i) plus a flag
    for whether the farmer (player 0) is in the coalition."""

    mask: int
    with_farmer: bool = False

    @staticmethod
    def of(members, with_farmer: bool = False) -> "Coalition":
        mask = 0
        for i in members:
            if i == 0:
                with_farmer = True
                continue
            if i < 1:
                raise ValueError(f"distributor ids are 1-based, got {i}")
            mask |= 1 << (i - 1)
        return Coalition(mask, with_farmer)

    @property
    def members(self) -> tuple:
        """Distributor ids, ascending (farmer not included)."""
        out, mask, i = [], self.mask, 1
        while mask:
            if mask & 1:
                out.append(i)
            mask >>= 1
            i += 1
        return tuple(out)

    @property
    def size(self) -> int:
        """Number of distributors in the coalition."""
        return self.mask.bit_count()

    @property
    def players(self) -> tuple:
        return ((0,) if self.with_farmer else ()) + self.members

    def contains(self, i: int) -> bool:
        if i == 0:
            return self.with_farmer
        return bool(self.mask >> (i - 1) & 1)

    def without_farmer(self) -> "Coalition":
        return Coalition(self.mask, False)

    def with_farmer_added(self) -> "Coalition":
        return Coalition(self.mask, True)

    def issubset(self, other: "Coalition") -> bool:
        if self.with_farmer and not other.with_farmer:
            return False
        return self.mask & other.mask == self.mask

    def isdisjoint(self, other: "Coalition") -> bool:
        if self.with_farmer and other.with_farmer:
            return False
        return self.mask & other.mask == 0

    def label(self) -> str:
        return "{" + ",".join(str(i) for i in self.players) + "}"

    def sort_key(self):
        return (self.size, self.with_farmer, self.mask)

    def __str__(self) -> str:
        return self.label()


def enumerate_coalitions(n: int) -> list[Coalition]:
    """All 2*(2^n - 1) coalitions with at least one distributor, in table
    order: by distributor count, farmer-less before farmer-inclusive, then
    by bitmask.  The farmer-alone coalition is omitted (its value is 0 by
    definition and needs no optimization)."""
    if not 1 <= n <= MAX_DISTRIBUTORS:
        raise SituationError(
            f"distributor count {n} outside supported range 1..{MAX_DISTRIBUTORS}"
        )
    out = [
        Coalition(mask, wf)
        for mask in range(1, 1 << n)
        for wf in (False, True)
    ]
    out.sort(key=Coalition.sort_key)
    return out


@dataclass(frozen=True)
class Situation:
    """Immutable model instance; see the module docstring for semantics."""

    Q: float
    C: float
    bbar: float
    purchase_cost: PiecewiseFunction            # b
    transport: tuple                            # t_i, one per distributor
    price: tuple                                # p_i, one per distributor
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.transport)

    @property
    def cost_rate(self) -> float:
        """Per-kg cost price C/Q offered under a farmer cooperation deal."""
        return self.C / self.Q

    def order_cap(self, i: int) -> float:
        """Upper bound for distributor i's order: the harvest Q, tightened
        to the start of the price curve's flat tail.  Beyond that point the
        price curve no longer reflects market absorption, so larger orders
        are outside the model's intended range."""
        return min(self.Q, self.price[i - 1].saturation_start())

    def validate(self):
        problems = []
        if not self.Q > 0:
            problems.append(f"Q > 0 violated (Q={self.Q})")
        if not self.C > 0:
            problems.append(f"C > 0 violated (C={self.C})")
        if not self.bbar > 0:
            problems.append(f"bbar > 0 violated (bbar={self.bbar})")
        if self.n < 1:
            problems.append("at least one distributor required")
        if self.n > MAX_DISTRIBUTORS:
            problems.append(
                f"n <= {MAX_DISTRIBUTORS} violated (n={self.n})"
            )
        if problems:
            raise SituationError("; ".join(problems))

        if self.purchase_cost.domain_end < self.Q:
            problems.append(
                f"b: domain must cover [0, Q]; ends at {self.purchase_cost.domain_end}"
            )
        for which, fns in (("t", self.transport), ("p", self.price)):
            for i, fn in enumerate(fns, start=1):
                if fn.domain_end < self.Q:
                    problems.append(
                        f"{which}{i}: domain must cover [0, Q]; ends at {fn.domain_end}"
                    )
        if problems:
            raise SituationError("; ".join(problems))

        b0 = self.purchase_cost(0.0)
        if not math.isfinite(b0):
            problems.append(f"b(0) must be finite (got {b0})")
        bQ = self.purchase_cost(self.Q)
        if not bQ > self.C / self.Q:
            problems.append(
                f"b(Q) > C/Q violated (b(Q)={bQ}, C/Q={self.C / self.Q})"
            )
        if math.isfinite(b0):
            for i in range(1, self.n + 1):
                p0 = self.price[i - 1](0.0)
                t0 = self.transport[i - 1](0.0)
                # +inf price at 0 (e.g. 1/sqrt terms) trivially satisfies this
                if not math.isfinite(t0):
                    problems.append(f"t{i}(0) must be finite (got {t0})")
                elif not p0 > t0 + b0:
                    problems.append(
                        f"p{i}(0) > t{i}(0) + b(0) violated "
                        f"({p0} <= {t0} + {b0})"
                    )
        if problems:
            raise SituationError("; ".join(problems))
        return self

    def coalitions(self) -> list[Coalition]:
        return enumerate_coalitions(self.n)

    def replace_bbar(self, bbar: float) -> "Situation":
        return Situation(
            Q=self.Q,
            C=self.C,
            bbar=float(bbar),
            purchase_cost=self.purchase_cost,
            transport=self.transport,
            price=self.price,
            name=self.name,
        ).validate()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "Q": self.Q,
            "C": self.C,
            "bbar": self.bbar,
            "b": self.purchase_cost.to_dicts(),
            "distributors": [
                {"t": t.to_dicts(), "p": p.to_dicts()}
                for t, p in zip(self.transport, self.price)
            ],
        }


def _segments(raw, field: str) -> PiecewiseFunction:
    if not isinstance(raw, list) or not raw:
        raise SituationError(f"{field}: expected a non-empty segment array")
    segs = []
    for k, seg in enumerate(raw):
        if not isinstance(seg, dict) or not {"lo", "hi", "expr"} <= seg.keys():
            raise SituationError(
                f"{field}[{k}]: segment needs keys lo, hi, expr"
            )
        segs.append((seg["lo"], seg["hi"], seg["expr"]))
    try:
        return PiecewiseFunction(segs)
    except ValueError as exc:
        raise SituationError(f"{field}: {exc}") from exc


def situation_from_dict(doc: dict) -> Situation:
    if not isinstance(doc, dict):
        raise SituationError("document must be a JSON object")
    missing = {"Q", "C", "bbar", "b", "distributors"} - doc.keys()
    if missing:
        raise SituationError(f"missing keys: {', '.join(sorted(missing))}")
    for key in ("Q", "C", "bbar"):
        if not isinstance(doc[key], (int, float)) or isinstance(doc[key], bool):
            raise SituationError(f"{key} must be a number")
    dists = doc["distributors"]
    if not isinstance(dists, list) or not dists:
        raise SituationError("distributors must be a non-empty array")

    b = _segments(doc["b"], "b")
    transport, price = [], []
    for k, d in enumerate(dists, start=1):
        if not isinstance(d, dict) or not {"t", "p"} <= d.keys():
            raise SituationError(f"distributors[{k - 1}]: needs keys t and p")
        transport.append(_segments(d["t"], f"t{k}"))
        price.append(_segments(d["p"], f"p{k}"))

    sit = Situation(
        Q=float(doc["Q"]),
        C=float(doc["C"]),
        bbar=float(doc["bbar"]),
        purchase_cost=b,
        transport=tuple(transport),
        price=tuple(price),
        name=str(doc.get("name", "")),
    )
    return sit.validate()


def load_situation(path) -> Situation:
    """Load and validate a situation JSON file."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SituationError(f"invalid JSON: {exc}") from exc
    return situation_from_dict(doc)


# Bundled reference datasets (see README for their provenance as worked
# examples of the model in increasing order of complexity).
BUILTIN_SITUATIONS = (
    "two_distributors",
    "three_distributors",
    "two_distributors_low_comp",
)


def builtin_situation(name: str) -> Situation:
    if name not in BUILTIN_SITUATIONS:
        raise SituationError(
            f"unknown builtin {name!r}; have {', '.join(BUILTIN_SITUATIONS)}"
        )
    ref = resources.files("farmcoop.data").joinpath(f"{name}.json")
    return situation_from_dict(json.loads(ref.read_text()))
