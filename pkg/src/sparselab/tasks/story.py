"""Synthetic trading narratives with world-state gold answers.

Each chapter follows a fixed scene order: arrival at a location, purpose,
an event, meeting a character, discussion, an acquisition (or an explicit
no-purchase beat), an optional relinquishment of a previously held item,
farewell, departure, and an atmospheric closer. Sentence wording is drawn
from paraphrase pools whose anchor phrases are stable, so an independent
scanner can recover every fact from the rendered text alone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .base import GenerationError, TaskSample
from .prompt import render_prompt
from .tokenization import ApproxTokenizer, count_tokens

__all__ = [
    "Chapter",
    "StoryWorld",
    "gen_story",
    "render_world",
    "scan_world",
]

PROTAGONISTS = ("Arion", "Lysias", "Kallias", "Neritos", "Phaidon", "Melanthe")

LOCATIONS = (
    "Athens", "Hippo Regius", "Emerita Augusta", "Berenice", "Syracuse",
    "Babylon", "Delphi", "Pergamon", "Berenice Troglodytica", "Carthage",
    "Alexandria", "Corinth", "Ephesus", "Thebes", "Rhodes", "Knossos",
    "Sparta", "Miletus", "Byzantium", "Tyre", "Sidon", "Memphis", "Petra",
    "Palmyra", "Antioch", "Cyrene", "Leptis Magna", "Tingis", "Gades",
    "Massalia", "Tarentum", "Paestum",
)

CHARACTERS = (
    "Cleo", "Thanos", "Niko", "Roxana", "Phaedra", "Xanthe", "Vitalis",
    "Damon", "Marcus", "Lysandra", "Philon", "Kassandra", "Demetrios",
    "Selene", "Hektor", "Melite", "Orestes", "Thais", "Leonidas", "Zenobia",
    "Alkaios", "Myrrine", "Patrokles", "Eirene", "Sostratos", "Galla",
    "Timon", "Chloe",
)

ITEM_ADJECTIVES = (
    "lavish", "ceremonial", "delicate", "mystic", "engraved", "pristine",
    "timeworn", "gilded", "ancient", "ornate", "polished", "rustic",
    "elegant", "weathered", "luminous", "austere", "carved", "burnished",
    "painted", "jeweled", "antique", "splendid", "humble", "radiant",
)
ITEM_MATERIALS = (
    "crystal", "gold", "porcelain", "bronze", "emerald", "silver", "amber",
    "ivory", "obsidian", "jade", "copper", "marble",
)
ITEM_OBJECTS = (
    "lamp", "seal", "sword", "goblet", "vase", "amulet", "mirror", "chalice",
    "figurine", "dagger", "flute", "casket", "diadem", "scepter", "tablet",
    "ring",
)

EVENTS = (
    "a tense negotiation", "a violent storm", "an opulent banquet",
    "a sudden market crash", "a solemn festival", "a heated auction",
    "an unexpected eclipse", "a lavish procession",
)

_ARRIVAL = (
    "Beneath gentle breezes, {p} ventured into {loc}, curious about its secrets.",
    "At dawn, {p} reached the gates of {loc}, where merchants and travelers converged.",
    "After a long road, {p} arrived in {loc} with hopeful expectations.",
    "By midday, {p} entered {loc}, drawn by tales of its markets.",
    "Under a fading sky, {p} came to {loc}, eager for new prospects.",
)
_PURPOSE = (
    "Long journeys had led {p} to this place, a step closer to understanding.",
    "Every road, {p} believed, carried its own quiet promise.",
    "Trade had always pulled {p} onward, and this stop was no exception.",
    "Rumors of rare goods had guided the steps of {p} for many days.",
)
_EVENT = (
    "Soon enough, {event} seized everyone's attention.",
    "Before long, {event} unsettled the whole quarter.",
    "That day, {event} became the talk of the town.",
    "Whispers spread quickly when {event} disrupted the usual rhythm.",
)
_MEETING = (
    "{c} appeared as if expecting {p}, engaging them without delay.",
    "It was {c} who approached {p} first, offering a courteous greeting.",
    "Among the stalls, {c} recognized {p} and struck up a conversation.",
    "Without ceremony, {c} drew {p} aside for a quiet word.",
)
_DISCUSSION = (
    "Carefully, they navigated the topic of old feuds and new alliances.",
    "Their talk drifted from distant ports to the price of passage.",
    "Neither hurried; the conversation wound through trivial and weighty matters alike.",
    "They spoke at length of caravans, storms, and the habits of buyers.",
    "A shared respect surfaced as each weighed the other's words.",
)
_ACQUISITION = (
    "Following subtle bargaining with {c}, {p} claimed ownership of {item}.",
    "After reaching terms with {c}, {p} took possession of {item}.",
    "The transaction concluded with {p} acquiring {item} from {c}.",
    "{item} changed hands as {p} completed the purchase from {c}.",
    "With measured consideration, {p} purchased {item} from {c}, examining it closely.",
)
_NO_PURCHASE = (
    "Though several wares tempted {p}, no bargain was struck before departure.",
    "{p} inspected many goods but left every offer on the table.",
    "This visit yielded conversation alone; {p} bought nothing at all.",
    "Despite lengthy haggling, {p} walked away without buying anything.",
)
_RELINQUISH = ("{p} handed over {item} to {c} as the deal closed.",)
_FAREWELL = (
    "With a light gesture, {p} acknowledged {c} once more before departing.",
    "Parting words were brief, as both had distant obligations.",
    "{p} wished {c} fortune in the seasons ahead.",
)
_DEPARTURE = (
    "Nothing would be the same as {p} left {loc}, thoughts turning inward.",
    "The road called again, and {p} slipped out of {loc} by the old causeway.",
    "{p} departed {loc} at dusk, the day's dealings settled.",
)
_CLOSER = (
    "In quiet corners, ambitions simmered, waiting for a spark.",
    "Somewhere behind the walls, new schemes were already taking shape.",
    "The evening settled softly, indifferent to commerce and its games.",
    "Lanterns flickered on, and the town resumed its usual murmur.",
)

# Anchors for the independent scanner. Kept in lockstep with the pools above.
_LOC_PATTERNS = (
    r"ventured into ([A-Z][\w ]+?),",
    r"reached the gates of ([A-Z][\w ]+?),",
    r"arrived in ([A-Z][\w ]+?) with hopeful",
    r"entered ([A-Z][\w ]+?),",
    r"came to ([A-Z][\w ]+?),",
)
_CHAR_PATTERNS = (
    r"(?:^|\. )([A-Z][a-z]+) appeared as if expecting",
    r"It was ([A-Z][a-z]+) who approached",
    r"Among the stalls, ([A-Z][a-z]+) recognized",
    r"Without ceremony, ([A-Z][a-z]+) drew",
)
_ITEM_PATTERNS = (
    r"claimed ownership of ([a-z][a-z ]+?)\.",
    r"took possession of ([a-z][a-z ]+?)\.",
    r"acquiring ([a-z][a-z ]+?) from",
    r"(?:^|\. )([a-z][a-z ]+?) changed hands",
    r"purchased ([a-z][a-z ]+?) from",
)
_RELINQUISH_PATTERN = r"handed over ([a-z][a-z ]+?) to [A-Z]"


@dataclass(frozen=True)
class Chapter:
    index: int
    location: str
    character: str
    event: str
    acquired_item: str | None
    relinquished_item: str | None


@dataclass(frozen=True)
class StoryWorld:
    protagonist: str
    chapters: tuple[Chapter, ...]

    def __post_init__(self) -> None:
        items = [c.acquired_item for c in self.chapters if c.acquired_item]
        if len(items) != len(set(items)):
            raise ValueError("acquired items must be globally unique")


def _item_stream(rng: np.random.Generator):
    total = len(ITEM_ADJECTIVES) * len(ITEM_MATERIALS) * len(ITEM_OBJECTS)
    for flat in rng.permutation(total):
        flat = int(flat)
        a, rest = divmod(flat, len(ITEM_MATERIALS) * len(ITEM_OBJECTS))
        m, o = divmod(rest, len(ITEM_OBJECTS))
        yield f"{ITEM_ADJECTIVES[a]} {ITEM_MATERIALS[m]} {ITEM_OBJECTS[o]}"


def _pick(rng: np.random.Generator, pool, avoid=None):
    while True:
        choice = pool[int(rng.integers(0, len(pool)))]
        if choice != avoid:
            return choice


def build_world(
    rng: np.random.Generator,
    num_chapters: int,
    no_purchase: frozenset[int] = frozenset(),
    relinquish_rate: float = 0.25,
) -> StoryWorld:
    protagonist = _pick(rng, PROTAGONISTS)
    items = _item_stream(rng)
    chapters: list[Chapter] = []
    owned: list[str] = []
    prev_loc = prev_char = None
    for index in range(1, num_chapters + 1):
        location = _pick(rng, LOCATIONS, avoid=prev_loc)
        character = _pick(rng, CHARACTERS, avoid=prev_char)
        event = _pick(rng, EVENTS)
        acquired = None if index in no_purchase else next(items)
        relinquished = None
        if owned and rng.random() < relinquish_rate:
            relinquished = owned.pop(int(rng.integers(0, len(owned))))
        if acquired is not None:
            owned.append(acquired)
        chapters.append(
            Chapter(index, location, character, event, acquired, relinquished)
        )
        prev_loc, prev_char = location, character
    return StoryWorld(protagonist, tuple(chapters))


def _render_chapter(rng: np.random.Generator, world: StoryWorld, ch: Chapter) -> str:
    p = world.protagonist
    parts = [
        _pick(rng, _ARRIVAL).format(p=p, loc=ch.location),
        _pick(rng, _PURPOSE).format(p=p),
        _pick(rng, _EVENT).format(event=ch.event),
        _pick(rng, _MEETING).format(c=ch.character, p=p),
    ]
    for _ in range(2 + int(rng.integers(0, 2))):
        parts.append(_pick(rng, _DISCUSSION))
    if ch.acquired_item is not None:
        parts.append(
            _pick(rng, _ACQUISITION).format(c=ch.character, p=p, item=ch.acquired_item)
        )
    else:
        parts.append(_pick(rng, _NO_PURCHASE).format(p=p))
    if ch.relinquished_item is not None:
        parts.append(
            _RELINQUISH[0].format(p=p, item=ch.relinquished_item, c=ch.character)
        )
    parts.append(_pick(rng, _FAREWELL).format(p=p, c=ch.character))
    parts.append(_pick(rng, _DEPARTURE).format(p=p, loc=ch.location))
    parts.append(_pick(rng, _CLOSER))
    return f"Chapter {ch.index}:\n" + " ".join(parts)


def render_world(rng: np.random.Generator, world: StoryWorld) -> str:
    return "\n\n".join(_render_chapter(rng, world, ch) for ch in world.chapters)


def scan_world(context: str) -> list[dict]:
    """Recover per-chapter facts from rendered text without the world object."""
    facts = []
    blocks = re.split(r"^Chapter (\d+):$", context, flags=re.MULTILINE)
    for header, body in zip(blocks[1::2], blocks[2::2]):
        fact = {
            "index": int(header),
            "location": _first_match(_LOC_PATTERNS, body),
            "character": _first_match(_CHAR_PATTERNS, body),
            "acquired_item": _first_match(_ITEM_PATTERNS, body),
            "relinquished_item": _first_match((_RELINQUISH_PATTERN,), body),
        }
        facts.append(fact)
    return facts


def _first_match(patterns, text: str) -> str | None:
    for pattern in patterns:
        match = re.search(pattern, text)
        if match:
            return match.group(1)
    return None


_STORY_KINDS = ("story_retrieval", "story_filtering", "story_multihop")


def gen_story(
    seed: int,
    kind: str = "story_retrieval",
    num_chapters: int | None = None,
    target_tokens: int = 16384,
    num_questions: int = 16,
    num_no_purchase: int = 3,
    tokenizer: ApproxTokenizer | None = None,
) -> TaskSample:
    """When ``num_chapters`` is None the chapter count is chosen to land the
    rendered prompt inside the token target."""
    if kind not in _STORY_KINDS:
        raise ValueError(f"unknown story kind {kind!r}")
    if kind != "story_filtering":
        num_no_purchase = 0
    minimum = {
        "story_retrieval": num_questions,
        "story_filtering": num_no_purchase + 1,
        "story_multihop": 2,
    }[kind]

    def build(count: int) -> TaskSample:
        return _build_sample(
            seed, kind, count, target_tokens, num_questions, num_no_purchase
        )

    if num_chapters is None:
        num_chapters = _fit_chapter_count(build, minimum, target_tokens, tokenizer)
    if num_chapters < minimum:
        raise GenerationError(
            f"{kind} needs at least {minimum} chapters, got {num_chapters}"
        )
    return build(num_chapters)


def _build_sample(
    seed, kind, num_chapters, target_tokens, num_questions, num_no_purchase
) -> TaskSample:
    rng = np.random.default_rng([seed, 1])
    if num_no_purchase:
        skip = frozenset(
            int(i) + 1
            for i in rng.choice(num_chapters, size=num_no_purchase, replace=False)
        )
    else:
        skip = frozenset()
    world = build_world(rng, num_chapters, no_purchase=skip)
    context = render_world(rng, world)
    questions, gold, extras = _pose_questions(rng, world, kind, num_questions)
    return TaskSample(
        id=f"{kind}-s{seed}-t{target_tokens}",
        kind=kind,
        context=context,
        questions=questions,
        gold=gold,
        metric="exact_match" if kind != "story_filtering" else "iou",
        target_tokens=target_tokens,
        seed=seed,
        extras={"num_chapters": num_chapters, **extras},
    )


def _pose_questions(rng, world: StoryWorld, kind: str, num_questions: int):
    chapters = world.chapters
    if kind == "story_retrieval":
        picked = sorted(
            int(i) for i in rng.choice(len(chapters), size=num_questions, replace=False)
        )
        questions, gold = [], []
        for slot, idx in enumerate(picked):
            ch = chapters[idx]
            variant = slot % 3
            if variant == 0:
                questions.append(
                    f"In Chapter {ch.index}, which character did the "
                    "protagonist interact with?"
                )
                gold.append(ch.character)
            elif variant == 1:
                questions.append(
                    f"In Chapter {ch.index}, which specific item was acquired "
                    "by the protagonist?"
                )
                gold.append(ch.acquired_item)
            else:
                questions.append(
                    f"In Chapter {ch.index}, which specific location did the "
                    "protagonist visit?"
                )
                gold.append(ch.location)
        return tuple(questions), tuple(gold), {"queried_chapters": picked}
    if kind == "story_filtering":
        skipped = sorted(ch.index for ch in chapters if ch.acquired_item is None)
        question = (
            "Identify all chapters where the protagonist did not buy any item.\n"
            f"Note: There are exactly {len(skipped)} chapters without any purchases."
        )
        return (question,), tuple(str(i) for i in skipped), {}
    target = chapters[1 + int(rng.integers(0, len(chapters) - 1))]
    previous = chapters[target.index - 2]
    question = (
        "What was the last item that the protagonist acquired before "
        f"acquiring {target.acquired_item}?"
    )
    return (
        (question,),
        (previous.acquired_item,),
        {"target_chapter": target.index},
    )


def _fit_chapter_count(build, minimum: int, target_tokens: int, tokenizer) -> int:
    """Largest chapter count whose rendered prompt fits the token target.

    Builds are deterministic in the count, and total length is monotone in
    it (each chapter adds far more than question wording can vary), so a
    bisection over full builds measures exactly what will be emitted.
    """

    def total(count: int) -> int:
        return count_tokens(render_prompt(build(count)), tokenizer)

    if total(minimum) > target_tokens:
        raise GenerationError(
            f"target_tokens={target_tokens} cannot hold {minimum} chapters"
        )
    lo = minimum
    hi = max(minimum + 1, target_tokens // 120)
    while total(hi) <= target_tokens:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if total(mid) <= target_tokens:
            lo = mid
        else:
            hi = mid
    return lo
