"""Translation-rule engine.

Parses the two XML documents that drive the proxy (the transformation
catalog and the per-user profiles), matches response media types against
a profile's rules, and plans acyclic transformation chains by re-matching
each step's output type until no rule applies.

All values are immutable after construction; a loaded catalog or profile
set can be shared freely across request-handler threads and is replaced
wholesale on reload.
"""

from __future__ import annotations

import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace

from .errors import (
    AmbiguousProfileError,
    CycleError,
    DepthExceededError,
    DuplicateIdError,
    ParseError,
    SchemaError,
    SelfLoopError,
    UnknownRuleError,
)
from .mediatype import is_valid_media_type, normalize_media_type

DEFAULT_MAX_DEPTH = 8


@dataclass(frozen=True)
class TransformDef:
    """One catalog entry: convert source_mime to target_mime using the
    named translator."""

    id: str
    description: str
    source_mime: str
    target_mime: str
    translator: str

    def __post_init__(self):
        if not self.id:
            raise SchemaError("transform id must be nonempty")
        for mime in (self.source_mime, self.target_mime):
            if not is_valid_media_type(mime):
                raise SchemaError(f"invalid media type {mime!r} in transform {self.id!r}")
        if self.source_mime == self.target_mime:
            raise SelfLoopError(
                f"transform {self.id!r} maps {self.source_mime!r} to itself"
            )
        if not self.translator:
            raise SchemaError(f"transform {self.id!r} has an empty library element")


@dataclass(frozen=True)
class TransformCatalog:
    """Ordered collection of TransformDef, keyed by id."""

    defs: tuple[TransformDef, ...]

    def __post_init__(self):
        seen = set()
        for d in self.defs:
            if d.id in seen:
                raise DuplicateIdError(f"duplicate transform id {d.id!r}")
            seen.add(d.id)

    def __iter__(self):
        return iter(self.defs)

    def __len__(self):
        return len(self.defs)

    def get(self, def_id: str) -> TransformDef | None:
        for d in self.defs:
            if d.id == def_id:
                return d
        return None

    def require(self, def_id: str) -> TransformDef:
        d = self.get(def_id)
        if d is None:
            raise UnknownRuleError(f"unknown transformation id {def_id!r}")
        return d


@dataclass(frozen=True)
class ProfileRule:
    """A profile's reference to one catalog entry. id is the per-profile
    ordinal ("001", "002", ...) as it appears in the document."""

    id: str
    rule: str


@dataclass(frozen=True)
class Profile:
    id: str
    rules: tuple[ProfileRule, ...] = ()

    def rule_ids(self) -> list[str]:
        return [r.rule for r in self.rules]


EMPTY_PROFILE = Profile(id="", rules=())


@dataclass(frozen=True)
class ProfileSet:
    profiles: tuple[Profile, ...]
    default_profile_id: str | None = None

    def __post_init__(self):
        seen = set()
        for p in self.profiles:
            if p.id in seen:
                raise DuplicateIdError(f"duplicate profile id {p.id!r}")
            seen.add(p.id)
        if self.default_profile_id is not None and self.default_profile_id not in seen:
            raise SchemaError(
                f"default profile {self.default_profile_id!r} does not exist"
            )

    def __iter__(self):
        return iter(self.profiles)

    def get(self, profile_id: str) -> Profile | None:
        for p in self.profiles:
            if p.id == profile_id:
                return p
        return None

    def with_default(self, default_profile_id: str | None) -> "ProfileSet":
        return replace(self, default_profile_id=default_profile_id)


@dataclass(frozen=True)
class TransformChain:
    """A planned, acyclic sequence of catalog entries ending at a media
    type on which the planning profile has no rule."""

    steps: tuple[TransformDef, ...]
    initial_mime: str
    final_mime: str

    def step_ids(self) -> list[str]:
        return [s.id for s in self.steps]

    def __bool__(self):
        return bool(self.steps)


# --- XML parsing ----------------------------------------------------------

def _fromstring(xml: str) -> ET.Element:
    try:
        return ET.fromstring(xml)
    except ET.ParseError as exc:
        line, col = exc.position if exc.position else (None, None)
        raise ParseError(str(exc.msg if hasattr(exc, "msg") else exc), line, col) from exc


def _text_child(elem: ET.Element, tag: str, context: str) -> str:
    child = elem.find(tag)
    if child is None or child.text is None or not child.text.strip():
        raise SchemaError(f"{context}: missing <{tag}> element")
    return child.text.strip()


def parse_transformations(xml: str) -> TransformCatalog:
    """Parse a transformation-catalog document.

    The document root is <transformations>; each <transform> child carries
    id and description attributes plus <mimetypesource>, <mimetypetarget>
    and <library> elements. Media types are stored normalized.
    """
    root = _fromstring(xml)
    if root.tag != "transformations":
        raise SchemaError(f"expected <transformations> root, got <{root.tag}>")
    defs = []
    for elem in root.findall("transform"):
        def_id = elem.get("id", "").strip()
        if not def_id:
            raise SchemaError("transform element without an id attribute")
        context = f"transform {def_id!r}"
        source = normalize_media_type(_text_child(elem, "mimetypesource", context))
        target = normalize_media_type(_text_child(elem, "mimetypetarget", context))
        for mime in (source, target):
            if not is_valid_media_type(mime):
                raise SchemaError(f"{context}: invalid media type {mime!r}")
        defs.append(
            TransformDef(
                id=def_id,
                description=elem.get("description", ""),
                source_mime=source,
                target_mime=target,
                translator=_text_child(elem, "library", context),
            )
        )
    return TransformCatalog(defs=tuple(defs))


def _parse_profile_elem(elem: ET.Element, catalog: TransformCatalog) -> Profile:
    profile_id = elem.get("id", "").strip()
    if not profile_id:
        raise SchemaError("profile element without an id attribute")
    rules = []
    sources: dict[str, str] = {}
    for t in elem.findall("transform"):
        rule_id = t.get("rule", "").strip()
        if not rule_id:
            raise SchemaError(f"profile {profile_id!r}: transform without a rule attribute")
        d = catalog.get(rule_id)
        if d is None:
            raise UnknownRuleError(
                f"profile {profile_id!r} references unknown rule {rule_id!r}"
            )
        if d.source_mime in sources:
            raise AmbiguousProfileError(
                f"profile {profile_id!r}: rules {sources[d.source_mime]!r} and "
                f"{rule_id!r} both match source {d.source_mime!r}"
            )
        sources[d.source_mime] = rule_id
        rules.append(ProfileRule(id=t.get("id", "").strip(), rule=rule_id))
    return Profile(id=profile_id, rules=tuple(rules))


def parse_profiles(xml: str, catalog: TransformCatalog) -> ProfileSet:
    """Parse a profiles document against a loaded catalog.

    Accepts either an explicit <profiles> root, a single <profile> root,
    or a bare sequence of sibling <profile> elements (which is not
    well-formed XML on its own and gets wrapped in a synthetic root).
    """
    try:
        root = _fromstring(xml)
    except ParseError:
        # A sequence of sibling <profile> elements has "junk after document
        # element"; retry once with a synthetic wrapper before giving up.
        root = _fromstring(f"<profiles>{xml}</profiles>")
    if root.tag == "profile":
        elems = [root]
    elif root.tag == "profiles":
        elems = root.findall("profile")
    else:
        raise SchemaError(f"expected <profiles> or <profile> root, got <{root.tag}>")
    return ProfileSet(profiles=tuple(_parse_profile_elem(e, catalog) for e in elems))


# --- XML serialization ------------------------------------------------------

def _indented(elem: ET.Element) -> str:
    ET.indent(elem, space="  ")
    buf = io.StringIO()
    ET.ElementTree(elem).write(buf, encoding="unicode", xml_declaration=False)
    return buf.getvalue() + "\n"


def serialize_transformations(catalog: TransformCatalog) -> str:
    root = ET.Element("transformations")
    for d in catalog:
        t = ET.SubElement(root, "transform", {"id": d.id, "description": d.description})
        ET.SubElement(t, "mimetypesource").text = d.source_mime
        ET.SubElement(t, "mimetypetarget").text = d.target_mime
        ET.SubElement(t, "library").text = d.translator
    return _indented(root)


def serialize_profiles(profiles: ProfileSet) -> str:
    root = ET.Element("profiles")
    for p in profiles:
        pe = ET.SubElement(root, "profile", {"id": p.id})
        for r in p.rules:
            ET.SubElement(pe, "transform", {"id": r.id, "rule": r.rule})
    return _indented(root)


def build_profile(
    profile_id: str, rule_ids: list[str], catalog: TransformCatalog
) -> Profile:
    """Build a profile from an ordered list of catalog ids, assigning the
    three-digit ordinals the document format uses. Raises UnknownRuleError
    for ids missing from the catalog and AmbiguousProfileError when two
    rules share a source media type."""
    if not profile_id or not profile_id.strip():
        raise SchemaError("profile id must be nonempty")
    sources: dict[str, str] = {}
    rules = []
    for i, rule_id in enumerate(rule_ids, start=1):
        d = catalog.get(rule_id)
        if d is None:
            raise UnknownRuleError(f"unknown transformation id {rule_id!r}")
        if d.source_mime in sources:
            raise AmbiguousProfileError(
                f"rules {sources[d.source_mime]!r} and {rule_id!r} both match "
                f"source {d.source_mime!r}"
            )
        sources[d.source_mime] = rule_id
        rules.append(ProfileRule(id=f"{i:03d}", rule=rule_id))
    return Profile(id=profile_id.strip(), rules=tuple(rules))


# --- matching and planning ---------------------------------------------------

def match_rule(
    profile: Profile, mime: str, catalog: TransformCatalog
) -> TransformDef | None:
    """Return the profile's unique rule whose source media type equals
    mime, or None. mime must already be normalized."""
    for r in profile.rules:
        d = catalog.get(r.rule)
        if d is not None and d.source_mime == mime:
            return d
    return None


def plan_chain(
    profile: Profile,
    initial_mime: str,
    catalog: TransformCatalog,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> TransformChain:
    """Repeatedly match the profile's rules starting from initial_mime,
    following each matched rule's target, until no rule matches.

    Raises CycleError when a step would revisit any media type already
    produced (including the initial one) and DepthExceededError when the
    chain grows past max_depth steps. Both carry the step ids matched so
    far so callers can log what was attempted.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    steps: list[TransformDef] = []
    seen = {initial_mime}
    current = initial_mime
    while True:
        d = match_rule(profile, current, catalog)
        if d is None:
            break
        if d.target_mime in seen:
            raise CycleError(d.target_mime, [s.id for s in steps] + [d.id])
        steps.append(d)
        if len(steps) > max_depth:
            raise DepthExceededError(max_depth, [s.id for s in steps])
        seen.add(d.target_mime)
        current = d.target_mime
    return TransformChain(
        steps=tuple(steps),
        initial_mime=initial_mime,
        final_mime=current,
    )
