"""Shared fixtures: live proxy/admin/origin stacks per test, plus the
acceptance-criteria summary printed at the end of a run."""

from __future__ import annotations

import re
from dataclasses import dataclass

import pytest

from grace.admin import AdminServer
from grace.app import GraceApp
from grace.config import ProxyConfig
from grace.proxy import ProxyServer

from support import CATALOG_XML, PROFILES_XML, StubOrigin


@dataclass
class Stack:
    app: GraceApp
    proxy: ProxyServer
    admin: AdminServer
    origin: StubOrigin

    @property
    def proxies(self) -> dict:
        """requests-style proxy mapping routing http through the stack."""
        return {"http": self.proxy.url}


@pytest.fixture
def make_stack(tmp_path):
    """Factory for a full running stack (origin + proxy + admin) backed by
    temp rule documents. Keyword overrides feed ProxyConfig directly."""
    created: list[Stack] = []

    def factory(
        catalog_xml: str = CATALOG_XML,
        profiles_xml: str = PROFILES_XML,
        **cfg_overrides,
    ) -> Stack:
        base = tmp_path / f"stack{len(created)}"
        base.mkdir()
        profiles = base / "profiles.xml"
        transformations = base / "transformations.xml"
        profiles.write_text(profiles_xml, encoding="utf-8")
        transformations.write_text(catalog_xml, encoding="utf-8")
        cfg_overrides.setdefault("cache_dir", base / "cache")
        config = ProxyConfig(
            profiles_path=profiles,
            transformations_path=transformations,
            listen_host="127.0.0.1",
            listen_port=0,
            admin_host="127.0.0.1",
            admin_port=0,
            **cfg_overrides,
        )
        app = GraceApp(config)
        proxy = ProxyServer(app).start()
        admin = AdminServer(app).start()
        stack = Stack(app=app, proxy=proxy, admin=admin, origin=StubOrigin())
        created.append(stack)
        return stack

    yield factory
    for s in created:
        s.proxy.stop()
        s.admin.stop()
        s.origin.close()


@pytest.fixture
def stack(make_stack) -> Stack:
    return make_stack()


# --- acceptance criteria report ------------------------------------------------

CRITERIA = {
    1: "rule documents parse to the published examples and survive serialize/reparse",
    2: "XBM responses convert end-to-end to pixel-exact PNG",
    3: "translucent PNG flattens onto a white matte as BMP within one count per channel",
    4: "image/jpeg chains to image/bmp with both steps advertised in order",
    5: "mutually inverse rules pass through with an error marker and service continues",
    6: "identical requests reuse the cached transformation byte-for-byte",
    7: "the empty profile relays every content type byte-identically",
    8: "JPEG 2000 converts via the external service and its downtime degrades to passthrough",
    9: "codec, cache, and planner invariants hold under randomized inputs",
}

_results: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    bucket = _results.setdefault(n, [])
    if report.when == "call":
        bucket.append(report.outcome)
    elif report.outcome in ("failed", "skipped"):
        bucket.append(report.outcome)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        outcomes = _results.get(n, [])
        if not outcomes:
            status = "NOT RUN"
        elif any(o == "failed" for o in outcomes):
            status = "FAIL"
        elif all(o == "passed" for o in outcomes):
            status = "PASS"
        else:
            status = "SKIP"
        terminalreporter.write_line(f"[{status}] criterion {n}: {CRITERIA[n]}")
