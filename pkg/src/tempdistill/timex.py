"""Rule-based time-expression recognition and normalized-time comparison.

A deterministic subset of TIMEX3: explicit (partial) dates, weekday and
day-offset words resolved against the document creation time, reference
words like "recently"/"now", and simple duration phrases. Recognition
patterns ship as a data file (``data/timex_rules.txt``) so the rule table
stays auditable.
"""
from __future__ import annotations

import calendar
import datetime
import re
from dataclasses import dataclass
from importlib import resources

from .corpus import VERB_TAGS, Document, Sentence

DATE, TIME, DURATION, SET = "DATE", "TIME", "DURATION", "SET"
TTYPES = (DATE, TIME, DURATION, SET)

CALENDAR = "CALENDAR"
PAST_REF = "PAST_REF"
PRESENT_REF = "PRESENT_REF"
FUTURE_REF = "FUTURE_REF"
UNRESOLVED = "UNRESOLVED"
REF_KINDS = (PAST_REF, PRESENT_REF, FUTURE_REF)

BEFORE, AFTER, EQUAL, INCOMPARABLE = "BEFORE", "AFTER", "EQUAL", "INCOMPARABLE"

_MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6,
    "july": 7, "august": 8, "september": 9, "october": 10, "november": 11,
    "december": 12,
    "jan.": 1, "feb.": 2, "mar.": 3, "apr.": 4, "jun.": 6, "jul.": 7,
    "aug.": 8, "sep.": 9, "sept.": 9, "oct.": 10, "nov.": 11, "dec.": 12,
}
_WEEKDAYS = {
    "monday": 0, "tuesday": 1, "wednesday": 2, "thursday": 3, "friday": 4,
    "saturday": 5, "sunday": 6,
}
_NUMBER_WORDS = {
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
    "ten", "eleven", "twelve", "few", "several", "couple",
}
_UNITS = {
    "second", "seconds", "minute", "minutes", "hour", "hours", "day", "days",
    "week", "weeks", "month", "months", "year", "years", "decade", "decades",
    "century", "centuries",
}
_ISO_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")
_SLASH_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$")


@dataclass(frozen=True)
class NormalizedTime:
    """A comparable time value: a partial calendar date or a reference kind."""

    kind: str
    year: int | None = None
    month: int | None = None
    day: int | None = None

    def __post_init__(self):
        if self.kind == CALENDAR:
            if self.year is None:
                raise ValueError("CALENDAR value requires a year")
            if self.month is not None and not 1 <= self.month <= 12:
                raise ValueError(f"month {self.month} out of range")
            if self.day is not None:
                if self.month is None:
                    raise ValueError("day without month")
                last = calendar.monthrange(self.year, self.month)[1]
                if not 1 <= self.day <= last:
                    raise ValueError(f"day {self.day} invalid for month")
        elif self.year is not None or self.month is not None or self.day is not None:
            raise ValueError(f"{self.kind} value carries calendar fields")

    @property
    def day_granular(self) -> bool:
        """True when the value pins a single day (or the shared "now")."""
        return (self.kind == CALENDAR and self.day is not None) or self.kind == PRESENT_REF


@dataclass(frozen=True)
class TimexSpan:
    tid: str
    sent: int
    start: int
    end: int  # exclusive
    ttype: str
    value: NormalizedTime

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("empty timex span")


def interval_of(t: NormalizedTime, dct: datetime.date | None):
    """Day-number interval covered by a value, or None when unresolvable.

    Calendar values span their partial date; reference kinds resolve
    against the document creation time to a degenerate or half-open
    interval. Endpoints are proleptic-Gregorian ordinals, with +/-inf for
    open ends.
    """
    if t.kind == CALENDAR:
        if t.month is None:
            first = datetime.date(t.year, 1, 1)
            last = datetime.date(t.year, 12, 31)
        elif t.day is None:
            first = datetime.date(t.year, t.month, 1)
            last = datetime.date(t.year, t.month, calendar.monthrange(t.year, t.month)[1])
        else:
            first = last = datetime.date(t.year, t.month, t.day)
        return (first.toordinal(), last.toordinal())
    if t.kind in REF_KINDS and dct is not None:
        d = dct.toordinal()
        if t.kind == PAST_REF:
            return (float("-inf"), d - 1)
        if t.kind == PRESENT_REF:
            return (d, d)
        return (d + 1, float("inf"))
    return None


def _interval_relation(a, b) -> str:
    (a0, a1), (b0, b1) = a, b
    if a1 < b0:
        return BEFORE
    if b1 < a0:
        return AFTER
    if a0 == b0 and a1 == b1 and a0 != float("-inf") and a1 != float("inf"):
        return EQUAL
    return INCOMPARABLE


def compare_times(a: NormalizedTime, b: NormalizedTime,
                  dct: datetime.date | None = None) -> str:
    """Order two normalized values: BEFORE/AFTER/EQUAL/INCOMPARABLE.

    Calendar values compare as day intervals (a year never equals a day it
    contains). Reference kinds order past < present < future even without
    a creation date; against calendar values they resolve only when the
    creation date is known. Unbounded intervals never count as EQUAL.
    """
    if a.kind == UNRESOLVED or b.kind == UNRESOLVED:
        return INCOMPARABLE
    if a.kind in REF_KINDS and b.kind in REF_KINDS:
        order = {PAST_REF: 0, PRESENT_REF: 1, FUTURE_REF: 2}
        if order[a.kind] < order[b.kind]:
            return BEFORE
        if order[a.kind] > order[b.kind]:
            return AFTER
        return EQUAL if a.kind == PRESENT_REF else INCOMPARABLE
    ia, ib = interval_of(a, dct), interval_of(b, dct)
    if ia is None or ib is None:
        return INCOMPARABLE
    return _interval_relation(ia, ib)


# --- recognition -----------------------------------------------------------


class RuleError(ValueError):
    """Raised for an unparseable pattern file."""


@dataclass(frozen=True)
class _Atom:
    kind: str  # literal | alt | class
    payload: tuple
    optional: bool = False


@dataclass(frozen=True)
class _Rule:
    atoms: tuple[_Atom, ...]
    ttype: str
    action: tuple[tuple[str, str], ...]
    line: int


_CLASSES = ("year4", "isodate", "slashdate", "month", "weekday", "daynum", "num", "unit")


def _parse_atom(text: str) -> _Atom:
    optional = text.endswith("?") and len(text) > 1
    if optional:
        text = text[:-1]
    if text.startswith("<") and text.endswith(">"):
        name = text[1:-1]
        if name not in _CLASSES:
            raise RuleError(f"unknown token class <{name}>")
        return _Atom("class", (name,), optional)
    if "|" in text:
        return _Atom("alt", tuple(text.lower().split("|")), optional)
    return _Atom("literal", (text.lower(),), optional)


def parse_rules(lines) -> list[_Rule]:
    rules = []
    version_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("version:"):
            version_seen = True
            continue
        if "->" not in line:
            raise RuleError(f"line {lineno}: missing '->'")
        lhs, rhs = (part.strip() for part in line.split("->", 1))
        atoms = tuple(_parse_atom(a) for a in lhs.split())
        parts = rhs.split()
        if not parts or parts[0] not in TTYPES:
            raise RuleError(f"line {lineno}: bad ttype in {rhs!r}")
        action = []
        for item in parts[1:]:
            if item == "unresolved":
                action.append(("unresolved", ""))
            elif "=" in item:
                action.append(tuple(item.split("=", 1)))
            else:
                raise RuleError(f"line {lineno}: bad action item {item!r}")
        rules.append(_Rule(atoms, parts[0], tuple(action), lineno))
    if not version_seen:
        raise RuleError("pattern file missing 'version:' header")
    return rules


def load_default_rules() -> list[_Rule]:
    text = resources.files("tempdistill.data").joinpath("timex_rules.txt").read_text("utf-8")
    return parse_rules(text.splitlines())


_DEFAULT_RULES: list[_Rule] | None = None


def _default_rules() -> list[_Rule]:
    global _DEFAULT_RULES
    if _DEFAULT_RULES is None:
        _DEFAULT_RULES = load_default_rules()
    return _DEFAULT_RULES


def _match_class(name: str, token) -> bool:
    text = token.text
    low = text.lower()
    if name == "year4":
        return token.pos == "CD" and bool(re.fullmatch(r"[12]\d{3}", text))
    if name == "isodate":
        m = _ISO_RE.match(text)
        if not m:
            return False
        try:
            datetime.date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
        except ValueError:
            return False
        return True
    if name == "slashdate":
        m = _SLASH_RE.match(text)
        if not m:
            return False
        try:
            datetime.date(int(m.group(3)), int(m.group(1)), int(m.group(2)))
        except ValueError:
            return False
        return True
    if name == "month":
        return low in _MONTHS and token.pos != "MD"
    if name == "weekday":
        return low in _WEEKDAYS
    if name == "daynum":
        return token.pos == "CD" and text.isdigit() and 1 <= int(text) <= 31
    if name == "num":
        return (text.isdigit() and "," not in text) or low in _NUMBER_WORDS
    if name == "unit":
        return low in _UNITS
    raise RuleError(f"unknown class {name}")


def _try_rule(rule: _Rule, tokens, start: int):
    """Match a rule at a position; returns (end, captures) or None."""
    captures: list[str | None] = []
    pos = start
    for atom in rule.atoms:
        matched = False
        if pos < len(tokens):
            tok = tokens[pos]
            if atom.kind == "literal":
                matched = tok.text.lower() == atom.payload[0]
            elif atom.kind == "alt":
                matched = tok.text.lower() in atom.payload
            else:
                matched = _match_class(atom.payload[0], tok)
        if matched:
            captures.append(tokens[pos].text)
            pos += 1
        elif atom.optional:
            captures.append(None)
        else:
            return None
    return pos, captures


def _tense_direction(sent: Sentence, index: int) -> str | None:
    """past/future by the tense of the verb governing a token, else None."""
    seen = set()
    current = index
    for _ in range(4):
        tok = sent.tokens[current]
        if tok.dep_head is None or tok.dep_head in seen:
            return None
        seen.add(current)
        current = tok.dep_head
        head = sent.tokens[current]
        if head.pos in ("VBD", "VBN"):
            return "past"
        if head.pos in VERB_TAGS or head.pos == "MD":
            for t in sent.tokens:
                if t.dep_head == current and (t.pos == "MD" or t.lemma in ("will", "shall")):
                    return "future"
            if head.pos == "MD":
                return "future"
            return None
    return None


def _resolve(rule: _Rule, captures, sent: Sentence, start: int,
             dct: datetime.date | None) -> NormalizedTime:
    action = dict(rule.action)
    if "unresolved" in action:
        return NormalizedTime(UNRESOLVED)

    def cap(ref: str) -> str | None:
        return captures[int(ref[1:]) - 1] if ref.startswith("$") else ref

    if "iso" in action:
        y, m, d = (int(g) for g in _ISO_RE.match(cap(action["iso"])).groups())
        return NormalizedTime(CALENDAR, year=y, month=m, day=d)
    if "slash" in action:
        m, d, y = (int(g) for g in _SLASH_RE.match(cap(action["slash"])).groups())
        return NormalizedTime(CALENDAR, year=y, month=m, day=d)
    if "offset" in action:
        off = int(action["offset"])
        if dct is not None:
            resolved = dct + datetime.timedelta(days=off)
            return NormalizedTime(CALENDAR, resolved.year, resolved.month, resolved.day)
        if off < 0:
            return NormalizedTime(PAST_REF)
        if off > 0:
            return NormalizedTime(FUTURE_REF)
        return NormalizedTime(PRESENT_REF)
    if "ref" in action:
        return NormalizedTime(
            {"past": PAST_REF, "present": PRESENT_REF, "future": FUTURE_REF}[action["ref"]]
        )
    if "weekday" in action:
        target = _WEEKDAYS[cap(action["weekday"]).lower()]
        if dct is None:
            return NormalizedTime(UNRESOLVED)
        direction = _tense_direction(sent, start)
        if direction is None:
            return NormalizedTime(UNRESOLVED)
        delta = (dct.weekday() - target) % 7 if direction == "past" else (target - dct.weekday()) % 7
        resolved = dct - datetime.timedelta(days=delta) if direction == "past" \
            else dct + datetime.timedelta(days=delta)
        return NormalizedTime(CALENDAR, resolved.year, resolved.month, resolved.day)
    year = cap(action["year"]) if "year" in action else None
    month = cap(action["month"]) if "month" in action else None
    day = cap(action["day"]) if "day" in action else None
    if year is None:
        return NormalizedTime(UNRESOLVED)  # month/day without a year
    try:
        return NormalizedTime(
            CALENDAR,
            year=int(year),
            month=_MONTHS[month.lower()] if month else None,
            day=int(day) if day else None,
        )
    except ValueError:
        return NormalizedTime(UNRESOLVED)


def detect_timexes(doc: Document, rules: list[_Rule] | None = None) -> list[TimexSpan]:
    """Non-overlapping time-expression spans in document order."""
    if rules is None:
        rules = _default_rules()
    dct = doc.dct_date()
    spans = []
    counter = 1
    for si, sent in enumerate(doc.sentences):
        pos = 0
        n = len(sent.tokens)
        while pos < n:
            best = None
            for rule in rules:
                hit = _try_rule(rule, sent.tokens, pos)
                if hit is not None and (best is None or hit[0] > best[0][0]):
                    best = (hit, rule)
            if best is None:
                pos += 1
                continue
            (end, captures), rule = best
            value = _resolve(rule, captures, sent, pos, dct)
            spans.append(TimexSpan(f"t{counter}", si, pos, end, rule.ttype, value))
            counter += 1
            pos = end
    return spans
