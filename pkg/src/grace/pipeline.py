"""Chain execution: dispatching each planned step to a registered
translator and producing the final body plus its audit event.

Translators come in two kinds. Internal ones run the native codecs in
process; external ones call a remote conversion service. The registry is
immutable once the proxy is serving, apart from whole-catalog reloads.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

from . import codecs
from .errors import (
    DuplicateTranslatorError,
    ExternalServiceError,
    GraceError,
    StepError,
    UnknownTranslatorError,
)
from .events import (
    NO_RULE,
    OUTCOME_PASSTHROUGH,
    OUTCOME_SUCCESS,
    TransformEvent,
)
from .mediatype import normalize_media_type
from .raster import ConvertOptions
from .rules import TransformCatalog, TransformChain

INTERNAL = "internal"
EXTERNAL = "external"

INTERNAL_TRANSLATOR_NAME = "TRImageMagick"
EXTERNAL_TRANSLATOR_NAME = "TRExternal"


class Translator:
    """Base translator: a named converter advertising the (source, target)
    media-type pairs it accepts."""

    name: str
    kind: str

    def __init__(self, name: str, kind: str, capabilities):
        self.name = name
        self.kind = kind
        self.capabilities = frozenset(capabilities)
        for src, dst in self.capabilities:
            if src == dst:
                raise ValueError(f"translator {name!r} advertises a self-loop {src!r}")

    def accepts(self, src: str, dst: str) -> bool:
        return (src, dst) in self.capabilities

    def convert(self, body: bytes, src: str, dst: str, opts: ConvertOptions) -> bytes:
        raise NotImplementedError


class InternalCodecTranslator(Translator):
    """Runs the in-process codecs; accepts every decodable-to-encodable
    pair."""

    def __init__(self, name: str = INTERNAL_TRANSLATOR_NAME):
        pairs = {
            (src, dst)
            for src in codecs.DECODABLE
            for dst in codecs.ENCODABLE
            if src != dst
        }
        super().__init__(name, INTERNAL, pairs)

    def convert(self, body: bytes, src: str, dst: str, opts: ConvertOptions) -> bytes:
        return codecs.convert(body, src, dst, opts)


class ExternalServiceTranslator(Translator):
    """Delegates to a remote conversion service. Registered even when no
    service is configured so catalogs naming it still load; execution then
    fails into pass-through."""

    DEFAULT_PAIRS = (("image/jp2", "image/jpeg"),)

    def __init__(self, config=None, name: str = EXTERNAL_TRANSLATOR_NAME, pairs=None):
        super().__init__(name, EXTERNAL, pairs if pairs is not None else self.DEFAULT_PAIRS)
        self.config = config

    def convert(self, body: bytes, src: str, dst: str, opts: ConvertOptions) -> bytes:
        from .external import remote_convert

        if self.config is None:
            raise ExternalServiceError(
                f"translator {self.name!r} has no conversion service configured"
            )
        return remote_convert(self.config, body, src, dst)


class TranslatorRegistry:
    """Name-to-translator map with per-translator invocation counters."""

    def __init__(self):
        self._translators: dict[str, Translator] = {}
        self._lock = threading.Lock()
        self._calls: dict[str, int] = {}

    def register(self, translator: Translator) -> "TranslatorRegistry":
        with self._lock:
            if translator.name in self._translators:
                raise DuplicateTranslatorError(
                    f"translator {translator.name!r} already registered"
                )
            self._translators[translator.name] = translator
            self._calls[translator.name] = 0
        return self

    def get(self, name: str) -> Translator | None:
        return self._translators.get(name)

    def names(self) -> list[str]:
        return sorted(self._translators)

    def validate_catalog(self, catalog: TransformCatalog):
        """Every library name referenced by the catalog must resolve, or
        the catalog must not be put into service."""
        for d in catalog:
            if d.translator not in self._translators:
                raise UnknownTranslatorError(
                    f"transform {d.id!r} references unregistered translator "
                    f"{d.translator!r}"
                )

    def _count_call(self, name: str):
        with self._lock:
            self._calls[name] = self._calls.get(name, 0) + 1

    def stats(self) -> dict[str, int]:
        with self._lock:
            return dict(self._calls)

    def total_invocations(self) -> int:
        return sum(self.stats().values())


def default_registry(external_config=None) -> TranslatorRegistry:
    reg = TranslatorRegistry()
    reg.register(InternalCodecTranslator())
    reg.register(ExternalServiceTranslator(config=external_config))
    return reg


@dataclass(frozen=True)
class ChainResult:
    body: bytes
    mime: str
    event: TransformEvent


def execute_chain(
    body: bytes,
    chain: TransformChain,
    opts: ConvertOptions,
    registry: TranslatorRegistry,
    url: str = "",
    profile_id: str = "",
) -> ChainResult:
    """Pipe body through every chain step in order.

    The watermark is stamped at most once, by the first internal step;
    external services own their pixels and later internal steps must not
    stamp again. Any failure raises StepError and the caller serves the
    original body untouched.
    """
    start = time.monotonic()
    started_at = time.time()
    if not chain.steps:
        return ChainResult(
            body=body,
            mime=chain.initial_mime,
            event=TransformEvent(
                timestamp=started_at,
                request_url=url,
                profile_id=profile_id,
                chain_ids=(),
                initial_mime=chain.initial_mime,
                final_mime=chain.initial_mime,
                input_bytes=len(body),
                output_bytes=len(body),
                duration_ms=0,
                cache_hit=False,
                outcome=OUTCOME_PASSTHROUGH,
                reason=NO_RULE,
            ),
        )

    current = body
    watermark_pending = opts.watermark
    for step in chain.steps:
        translator = registry.get(step.translator)
        if translator is None:
            raise StepError(step.id, UnknownTranslatorError(step.translator))
        if not translator.accepts(step.source_mime, step.target_mime):
            raise StepError(
                step.id,
                GraceError(
                    f"translator {translator.name!r} does not accept "
                    f"{step.source_mime} -> {step.target_mime}"
                ),
            )
        stamp = watermark_pending and translator.kind == INTERNAL
        step_opts = ConvertOptions(
            matte_color=opts.matte_color,
            watermark=stamp,
            watermark_text=opts.watermark_text,
        )
        try:
            current = translator.convert(
                current, step.source_mime, step.target_mime, step_opts
            )
        except GraceError as exc:
            raise StepError(step.id, exc) from exc
        registry._count_call(translator.name)
        if stamp:
            watermark_pending = False

    duration_ms = int((time.monotonic() - start) * 1000)
    return ChainResult(
        body=current,
        mime=chain.final_mime,
        event=TransformEvent(
            timestamp=started_at,
            request_url=url,
            profile_id=profile_id,
            chain_ids=tuple(chain.step_ids()),
            initial_mime=chain.initial_mime,
            final_mime=chain.final_mime,
            input_bytes=len(body),
            output_bytes=len(current),
            duration_ms=duration_ms,
            cache_hit=False,
            outcome=OUTCOME_SUCCESS,
        ),
    )


# --- magic-byte sniffing ------------------------------------------------------

_PNG_SIG = b"\x89PNG\r\n\x1a\n"
_JP2_SIG = b"\x00\x00\x00\x0cjP  \r\n\x87\n"


def sniff_format(data: bytes, declared: str) -> str:
    """Return the media type detected from leading magic bytes, falling
    back to the declared type when nothing is recognizable."""
    if data.startswith(_PNG_SIG):
        return "image/png"
    if data.startswith(b"GIF87a") or data.startswith(b"GIF89a"):
        return "image/gif"
    if data.startswith(b"\xff\xd8"):
        return "image/jpeg"
    if data.startswith(b"BM"):
        return "image/bmp"
    if data.startswith(_JP2_SIG):
        return "image/jp2"
    if data.lstrip(b" \t\r\n\x0c").startswith(b"#define"):
        return "image/x-xbitmap"
    return declared
