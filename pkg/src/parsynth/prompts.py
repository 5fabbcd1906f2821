"""Seeded wildcard prompt compilation.

A prompt template is a positive body with ``__name__`` slots plus a negative
body.  Compiling a prompt for one (target attribute, seed) pair draws each
slot's phrase by weighted choice from the wildcard table, in the order slots
appear in the body, using the package PRNG so the result is reproducible
from the seed alone.  The ``attributes`` slot is special: it is not drawn
but resolved to the phrase registered for the target, and the template is
arranged so that clause lands in the final sentence.

Per-target overrides can append text to the negative prompt and swap the
``styles`` slot to an alternate phrase list (used for skirt targets, whose
default styles would mention pants).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .rng import SplitMix64

_SLOT = re.compile(r"__([A-Za-z0-9_]+)__")
_ATTRIBUTE_SLOT = "attributes"

DEFAULT_POSITIVE_BODY = (
    "A highly detailed, ultra high definition image of a single pedestrian "
    "__poses__ on __backgrounds__, with the pedestrian fully visible and "
    "centered in the frame. The pedestrian is visible from head to toe and "
    "is the primary focus, and the scene features realistic, natural "
    "colors. We have __views__. The subject is wearing a __styles__. "
    "__colors__. It can also be seen how the pedestrian __attributes__."
)

DEFAULT_NEGATIVE_BODY = (
    "bad quality, poor quality, Partial figures, cropped bodies, cut-off "
    "limbs, headless or footless pedestrians, close-up shots, extreme zoom, "
    "obscured views, hidden or partially visible subjects, cropped at the "
    "knees or waist, off-frame figures, incomplete visibility, overly "
    "zoomed-in perspectives"
)

SHORT_SKIRT_NEGATIVE_SUFFIX = ", no pants, no long skirts, no oversized clothing."


class PromptError(ValueError):
    pass


@dataclass(frozen=True)
class WildcardEntry:
    phrase: str
    weight: float
    implied: frozenset[str] = frozenset()


@dataclass(frozen=True)
class WildcardTable:
    """Named phrase lists; ``attributes`` maps targets to their clauses."""

    lists: dict[str, tuple[WildcardEntry, ...]]

    def __post_init__(self):
        for name, entries in self.lists.items():
            if not entries:
                raise PromptError(f"wildcard list {name!r} is empty")
            for e in entries:
                if e.weight <= 0:
                    raise PromptError(
                        f"wildcard list {name!r}: non-positive weight for "
                        f"{e.phrase!r}")

    def entries(self, name: str) -> tuple[WildcardEntry, ...]:
        try:
            return self.lists[name]
        except KeyError:
            raise PromptError(f"no wildcard list named {name!r}") from None

    def attribute_entry(self, target: str) -> tuple[int, WildcardEntry]:
        for i, e in enumerate(self.entries(_ATTRIBUTE_SLOT)):
            if target in e.implied:
                return i, e
        raise PromptError(f"no attribute phrase registered for {target!r}")

    def validate_schema(self, attribute_names) -> None:
        """Check every implied attribute resolves in the given schema.

        The ``attributes`` list is exempt: its implied column carries the
        target keys, which are only looked up for the target actually
        being generated."""
        known = set(attribute_names)
        for name, entries in self.lists.items():
            if name == _ATTRIBUTE_SLOT:
                continue
            for e in entries:
                unknown = e.implied - known
                if unknown:
                    raise PromptError(
                        f"list {name!r}, phrase {e.phrase!r}: implied "
                        f"attributes not in schema: {sorted(unknown)}")


@dataclass(frozen=True)
class AttributeOverride:
    negative_suffix: str = ""
    styles_list: str | None = None


@dataclass(frozen=True)
class PromptTemplate:
    positive_body: str = DEFAULT_POSITIVE_BODY
    negative_body: str = DEFAULT_NEGATIVE_BODY
    overrides: dict[str, AttributeOverride] = field(default_factory=dict)

    def slots(self) -> tuple[str, ...]:
        return tuple(m.group(1) for m in _SLOT.finditer(self.positive_body))

    def validate_table(self, table: WildcardTable) -> None:
        for slot in self.slots():
            table.entries(slot)
        for target, ov in self.overrides.items():
            if ov.styles_list is not None:
                table.entries(ov.styles_list)


DEFAULT_OVERRIDES = {
    "lb-ShortSkirt": AttributeOverride(
        negative_suffix=SHORT_SKIRT_NEGATIVE_SUFFIX,
        styles_list="styles_skirt",
    ),
}


def default_template() -> PromptTemplate:
    return PromptTemplate(overrides=dict(DEFAULT_OVERRIDES))


@dataclass(frozen=True)
class PromptSpec:
    positive: str
    negative: str
    seed: int
    choices: dict[str, int]
    target_attribute: str
    implied: frozenset[str]

    def to_json(self) -> str:
        return json.dumps({
            "positive": self.positive,
            "negative": self.negative,
            "seed": self.seed,
            "choices": self.choices,
            "target_attribute": self.target_attribute,
            "implied": sorted(self.implied),
        }, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> PromptSpec:
        d = json.loads(line)
        return cls(
            positive=d["positive"],
            negative=d["negative"],
            seed=d["seed"],
            choices={k: int(v) for k, v in d["choices"].items()},
            target_attribute=d["target_attribute"],
            implied=frozenset(d["implied"]),
        )


@dataclass(frozen=True)
class SeedPlan:
    initial_seed: int = 123456789
    batch_size: int = 1
    batch_number: int = 1

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.batch_number < 1:
            raise ValueError("batch_number must be >= 1")


def seed_for(plan: SeedPlan, index_in_batch: int) -> int:
    """Seed of image ``index_in_batch`` (0-based) within the plan's batch:
    initial + batch_size * (batch_number - 1) + index."""
    if not 0 <= index_in_batch < plan.batch_size:
        raise ValueError(
            f"index {index_in_batch} outside batch of size {plan.batch_size}")
    return (plan.initial_seed
            + plan.batch_size * (plan.batch_number - 1)
            + index_in_batch)


def _slot_list_name(slot: str, target: str, template: PromptTemplate) -> str:
    ov = template.overrides.get(target)
    if slot == "styles" and ov is not None and ov.styles_list is not None:
        return ov.styles_list
    return slot


def compile_prompt(template: PromptTemplate, table: WildcardTable,
                   target: str, seed: int) -> PromptSpec:
    template.validate_table(table)
    attr_idx, attr_entry = table.attribute_entry(target)
    rng = SplitMix64(seed)
    choices: dict[str, int] = {}
    implied: set[str] = set()

    def substitute(m: re.Match) -> str:
        slot = m.group(1)
        if slot == _ATTRIBUTE_SLOT:
            choices[slot] = attr_idx
            implied.update(attr_entry.implied)
            return attr_entry.phrase
        entries = table.entries(_slot_list_name(slot, target, template))
        idx = rng.weighted_index([e.weight for e in entries])
        choices[slot] = idx
        implied.update(entries[idx].implied)
        return entries[idx].phrase

    positive = _SLOT.sub(substitute, template.positive_body)
    if "__" in positive:
        raise PromptError(f"unfilled slot remains in prompt: {positive!r}")
    ov = template.overrides.get(target)
    negative = template.negative_body + (ov.negative_suffix if ov else "")
    return PromptSpec(
        positive=positive,
        negative=negative,
        seed=seed,
        choices=choices,
        target_attribute=target,
        implied=frozenset(implied) - {target},
    )


def reconstruct_positive(template: PromptTemplate, table: WildcardTable,
                         spec: PromptSpec) -> str:
    """Re-substitute recorded choices; must equal ``spec.positive``."""
    def substitute(m: re.Match) -> str:
        slot = m.group(1)
        entries = table.entries(
            _slot_list_name(slot, spec.target_attribute, template))
        return entries[spec.choices[slot]].phrase

    return _SLOT.sub(substitute, template.positive_body)


def implied_attributes(spec: PromptSpec) -> frozenset[str]:
    return spec.implied


def batch_prompts(template: PromptTemplate, table: WildcardTable,
                  target: str, plan: SeedPlan) -> list[PromptSpec]:
    return [compile_prompt(template, table, target, seed_for(plan, i))
            for i in range(plan.batch_size)]


# --- wildcard table file format -----------------------------------------
#
# Plain text, one [section] per wildcard list; entry lines are
# "phrase | weight | implied1,implied2"; blank lines and #-comments ignored.

def parse_wildcard_table(text: str) -> WildcardTable:
    lists: dict[str, list[WildcardEntry]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise PromptError(f"line {lineno}: empty section name")
            lists.setdefault(current, [])
            continue
        if current is None:
            raise PromptError(f"line {lineno}: entry before any [section]")
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 3:
            raise PromptError(
                f"line {lineno}: expected 'phrase | weight | implied'")
        phrase, weight_s, implied_s = parts
        try:
            weight = float(weight_s)
        except ValueError:
            raise PromptError(f"line {lineno}: bad weight {weight_s!r}") from None
        implied = frozenset(
            s.strip() for s in implied_s.split(",") if s.strip())
        lists[current].append(WildcardEntry(phrase, weight, implied))
    return WildcardTable({k: tuple(v) for k, v in lists.items()})


def load_wildcard_table(path: str | Path) -> WildcardTable:
    return parse_wildcard_table(Path(path).read_text(encoding="utf-8"))


def default_wildcard_table() -> WildcardTable:
    text = (resources.files("parsynth") / "data" / "wildcards.txt").read_text(
        encoding="utf-8")
    return parse_wildcard_table(text)
