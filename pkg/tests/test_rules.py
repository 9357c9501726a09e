"""Rule-document parsing, matching, and chain planning."""

from __future__ import annotations

import pytest

from grace.errors import (
    AmbiguousProfileError,
    CycleError,
    DepthExceededError,
    DuplicateIdError,
    ParseError,
    SchemaError,
    SelfLoopError,
    UnknownRuleError,
)
from grace.rules import (
    build_profile,
    match_rule,
    parse_profiles,
    parse_transformations,
    plan_chain,
    serialize_profiles,
    serialize_transformations,
)

from support import (
    CATALOG_XML,
    PROFILES_XML,
    REFERENCE_CATALOG_XML,
    REFERENCE_PROFILES_XML,
)


@pytest.fixture
def catalog():
    return parse_transformations(CATALOG_XML)


class TestParseTransformations:
    def test_reference_catalog_parses_to_three_defs(self):
        catalog = parse_transformations(REFERENCE_CATALOG_XML)
        assert [d.id for d in catalog] == ["JPG->GIF", "XBM->PNG", "JP2->JPG"]
        xbm = catalog.get("XBM->PNG")
        assert xbm.source_mime == "image/x-xbitmap"
        assert xbm.target_mime == "image/png"
        assert xbm.translator == "TRImageMagick"
        assert xbm.description == "Transform XBM->PNG"
        jp2 = catalog.get("JP2->JPG")
        assert jp2.description == "Trans JPEG-2000->JPG"
        assert jp2.source_mime == "image/jp2"
        assert jp2.target_mime == "image/jpeg"

    def test_empty_document_yields_empty_catalog(self):
        assert len(parse_transformations("<transformations/>")) == 0

    def test_duplicate_id_rejected(self):
        dup = REFERENCE_CATALOG_XML.replace(
            "</transformations>",
            """<transform id="JPG->GIF" description="again">
                 <mimetypesource>image/tiff</mimetypesource>
                 <mimetypetarget>image/gif</mimetypetarget>
                 <library>TRImageMagick</library>
               </transform></transformations>""",
        )
        with pytest.raises(DuplicateIdError):
            parse_transformations(dup)

    def test_malformed_xml_raises_parse_error_with_position(self):
        with pytest.raises(ParseError) as exc:
            parse_transformations("<transformations><transform></transformations>")
        assert exc.value.line is not None

    def test_missing_child_element_rejected(self):
        xml = """<transformations>
          <transform id="A" description="">
            <mimetypesource>image/gif</mimetypesource>
            <library>TRImageMagick</library>
          </transform>
        </transformations>"""
        with pytest.raises(SchemaError):
            parse_transformations(xml)

    def test_self_loop_rejected(self):
        xml = """<transformations>
          <transform id="A" description="">
            <mimetypesource>image/gif</mimetypesource>
            <mimetypetarget>image/gif</mimetypetarget>
            <library>TRImageMagick</library>
          </transform>
        </transformations>"""
        with pytest.raises(SelfLoopError):
            parse_transformations(xml)

    def test_wrong_root_rejected(self):
        with pytest.raises(SchemaError):
            parse_transformations("<catalog/>")

    def test_media_types_normalized_to_lowercase(self):
        xml = """<transformations>
          <transform id="A" description="">
            <mimetypesource>IMAGE/JPEG</mimetypesource>
            <mimetypetarget>Image/Gif</mimetypetarget>
            <library>TRImageMagick</library>
          </transform>
        </transformations>"""
        d = parse_transformations(xml).get("A")
        assert d.source_mime == "image/jpeg"
        assert d.target_mime == "image/gif"


class TestParseProfiles:
    def test_reference_profiles_parse_against_extended_catalog(self, catalog):
        profiles = parse_profiles(REFERENCE_PROFILES_XML, catalog)
        dswaney = profiles.get("dswaney")
        assert dswaney.rule_ids() == ["JPG->GIF", "XBM->PNG", "GIF->BMP"]
        assert [r.id for r in dswaney.rules] == ["001", "002", "003"]
        mln = profiles.get("mln")
        assert mln.rule_ids() == ["JP2->JPG", "GIF->PNG"]
        assert [r.id for r in mln.rules] == ["001", "002"]

    def test_explicit_wrapper_root_accepted(self, catalog):
        profiles = parse_profiles(PROFILES_XML, catalog)
        assert profiles.get("dswaney") is not None
        assert profiles.get("empty").rules == ()

    def test_single_profile_root_accepted(self, catalog):
        xml = '<profile id="solo"><transform id="001" rule="XBM->PNG" /></profile>'
        profiles = parse_profiles(xml, catalog)
        assert profiles.get("solo").rule_ids() == ["XBM->PNG"]

    def test_zero_rule_profile_is_valid(self, catalog):
        profiles = parse_profiles('<profile id="bare" />', catalog)
        assert profiles.get("bare").rules == ()

    def test_unknown_rule_rejected(self, catalog):
        xml = '<profile id="p"><transform id="001" rule="NOPE" /></profile>'
        with pytest.raises(UnknownRuleError):
            parse_profiles(xml, catalog)

    def test_two_rules_sharing_source_mime_rejected(self, catalog):
        # JPG->GIF and a second rule from image/jpeg: matching would be
        # ambiguous, so loading must fail rather than pick a winner.
        xml = """<profile id="p">
          <transform id="001" rule="JPG->GIF" />
          <transform id="002" rule="JPG->GIF" />
        </profile>"""
        with pytest.raises(AmbiguousProfileError):
            parse_profiles(xml, catalog)

    def test_duplicate_profile_id_rejected(self, catalog):
        xml = '<profiles><profile id="p" /><profile id="p" /></profiles>'
        with pytest.raises(DuplicateIdError):
            parse_profiles(xml, catalog)


class TestSerialization:
    def test_profiles_round_trip_field_equal(self, catalog):
        first = parse_profiles(REFERENCE_PROFILES_XML, catalog)
        again = parse_profiles(serialize_profiles(first), catalog)
        assert again == first

    def test_catalog_round_trip_field_equal(self):
        first = parse_transformations(CATALOG_XML)
        again = parse_transformations(serialize_transformations(first))
        assert again == first


class TestMatchRule:
    def test_dswaney_matches_jpeg(self, catalog):
        profiles = parse_profiles(PROFILES_XML, catalog)
        d = match_rule(profiles.get("dswaney"), "image/jpeg", catalog)
        assert d.id == "JPG->GIF"

    def test_mln_has_no_xbm_rule(self, catalog):
        profiles = parse_profiles(PROFILES_XML, catalog)
        assert match_rule(profiles.get("mln"), "image/x-xbitmap", catalog) is None

    def test_html_matches_nothing(self, catalog):
        profiles = parse_profiles(PROFILES_XML, catalog)
        assert match_rule(profiles.get("dswaney"), "text/html", catalog) is None


class TestPlanChain:
    def test_dswaney_jpeg_chains_to_bmp(self, catalog):
        profiles = parse_profiles(PROFILES_XML, catalog)
        chain = plan_chain(profiles.get("dswaney"), "image/jpeg", catalog)
        assert chain.step_ids() == ["JPG->GIF", "GIF->BMP"]
        assert chain.final_mime == "image/bmp"
        assert chain.initial_mime == "image/jpeg"

    def test_unmatched_type_plans_empty_chain(self, catalog):
        profiles = parse_profiles(PROFILES_XML, catalog)
        chain = plan_chain(profiles.get("mln"), "text/html", catalog)
        assert not chain
        assert chain.final_mime == "text/html"

    def test_mutually_inverse_rules_raise_cycle_error(self, catalog):
        profiles = parse_profiles(PROFILES_XML, catalog)
        with pytest.raises(CycleError) as exc:
            plan_chain(profiles.get("looper"), "image/gif", catalog)
        assert exc.value.mime == "image/gif"
        assert exc.value.partial_step_ids  # the attempted steps are reported

    def test_chain_invariants_hold(self, catalog):
        profiles = parse_profiles(PROFILES_XML, catalog)
        chain = plan_chain(profiles.get("dswaney"), "image/jpeg", catalog)
        for a, b in zip(chain.steps, chain.steps[1:]):
            assert a.target_mime == b.source_mime
        assert chain.steps[0].source_mime == chain.initial_mime
        assert chain.steps[-1].target_mime == chain.final_mime
        assert match_rule(profiles.get("dswaney"), chain.final_mime, catalog) is None

    def test_max_depth_enforced(self):
        # a 3-step ladder with max_depth 2 must stop with an error
        defs = []
        mimes = ["image/aaa", "image/bbb", "image/ccc", "image/ddd"]
        for i, (src, dst) in enumerate(zip(mimes, mimes[1:])):
            defs.append(
                f'<transform id="s{i}" description="">'
                f"<mimetypesource>{src}</mimetypesource>"
                f"<mimetypetarget>{dst}</mimetypetarget>"
                f"<library>TRImageMagick</library></transform>"
            )
        catalog = parse_transformations(
            "<transformations>" + "".join(defs) + "</transformations>"
        )
        rules = "".join(
            f'<transform id="{i:03d}" rule="s{i}" />' for i in range(len(defs))
        )
        profiles = parse_profiles(f'<profile id="p">{rules}</profile>', catalog)
        with pytest.raises(DepthExceededError):
            plan_chain(profiles.get("p"), "image/aaa", catalog, max_depth=2)
        chain = plan_chain(profiles.get("p"), "image/aaa", catalog, max_depth=8)
        assert chain.final_mime == "image/ddd"

    def test_max_depth_below_one_rejected(self, catalog):
        profiles = parse_profiles(PROFILES_XML, catalog)
        with pytest.raises(ValueError):
            plan_chain(profiles.get("dswaney"), "image/jpeg", catalog, max_depth=0)


class TestBuildProfile:
    def test_assigns_sequential_ordinals(self, catalog):
        p = build_profile("u", ["JP2->JPG", "GIF->PNG"], catalog)
        assert [r.id for r in p.rules] == ["001", "002"]
        assert p.rule_ids() == ["JP2->JPG", "GIF->PNG"]

    def test_unknown_rule_rejected(self, catalog):
        with pytest.raises(UnknownRuleError):
            build_profile("u", ["NOPE"], catalog)

    def test_ambiguous_source_rejected(self, catalog):
        with pytest.raises(AmbiguousProfileError):
            build_profile("u", ["GIF->PNG", "GIF->BMP"], catalog)

    def test_blank_id_rejected(self, catalog):
        with pytest.raises(SchemaError):
            build_profile("  ", [], catalog)
