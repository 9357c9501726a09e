"""Application core shared by the proxy and admin servers.

GraceApp owns the loaded rule documents, the translator registry, the
transform cache, and the event log. Rule state lives in an immutable
Snapshot that is swapped wholesale under a write lock, so request
threads always see a consistent catalog/profile pair without locking on
the read path.
"""

from __future__ import annotations

import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass

from .cache import CacheEntry, DiskLRUCache, make_key
from .config import ProxyConfig
from .errors import (
    CycleError,
    DepthExceededError,
    GraceError,
    InvalidPatchError,
    NotFoundError,
    RuleError,
    StepError,
    VersionConflictError,
)
from .events import (
    CONTENT_ENCODING,
    CYCLE,
    DEPTH_EXCEEDED,
    NO_RULE,
    OUTCOME_PASSTHROUGH,
    OUTCOME_SUCCESS,
    OVERSIZE,
    STEP_ERROR,
    EventLog,
    TransformEvent,
)
from .mediatype import normalize_media_type
from .pipeline import default_registry, execute_chain, sniff_format
from .proxy import decompress_body
from .rules import (
    EMPTY_PROFILE,
    Profile,
    ProfileSet,
    TransformCatalog,
    TransformChain,
    build_profile,
    parse_profiles,
    parse_transformations,
    plan_chain,
    serialize_profiles,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Snapshot:
    catalog: TransformCatalog
    profiles: ProfileSet


@dataclass(frozen=True)
class TransformOutcome:
    """What the proxy should relay for one GET response."""

    body: bytes
    content_type: str
    transformed: bool
    chain_ids: tuple[str, ...] = ()
    initial_mime: str = ""
    error_header: str = ""


class GraceApp:
    def __init__(self, config: ProxyConfig):
        self.config = config
        self.registry = default_registry(config.external)
        self._snapshot = self._load_snapshot()
        self._write_lock = threading.RLock()
        self._versions: dict[str, int] = {p.id: 1 for p in self._snapshot.profiles}
        self.events = EventLog(path=config.events_path)
        if config.no_cache:
            self.cache = None
        else:
            cache_dir = config.cache_dir
            if cache_dir is None:
                cache_dir = tempfile.mkdtemp(prefix="grace-cache-")
            self.cache = DiskLRUCache(cache_dir, capacity=config.cache_capacity)

    # --- rule state -----------------------------------------------------

    def _load_snapshot(self) -> Snapshot:
        catalog = parse_transformations(
            self.config.transformations_path.read_text(encoding="utf-8")
        )
        self.registry.validate_catalog(catalog)
        profiles = parse_profiles(
            self.config.profiles_path.read_text(encoding="utf-8"), catalog
        )
        if self.config.default_profile and profiles.get(self.config.default_profile) is None:
            logger.warning(
                "default profile %r not present in profile document",
                self.config.default_profile,
            )
        return Snapshot(catalog=catalog, profiles=profiles)

    @property
    def snapshot(self) -> Snapshot:
        return self._snapshot

    @property
    def catalog(self) -> TransformCatalog:
        return self._snapshot.catalog

    @property
    def profiles(self) -> ProfileSet:
        return self._snapshot.profiles

    def reload(self):
        """Re-read both rule documents from disk and swap them in. On any
        loading error the previous snapshot stays active."""
        with self._write_lock:
            snapshot = self._load_snapshot()
            self._snapshot = snapshot
            for p in snapshot.profiles:
                self._versions.setdefault(p.id, 1)

    # --- transformation of proxied responses ------------------------------

    def transform_response(self, ctx, upstream) -> TransformOutcome:
        """Decide what body to relay for a 2xx GET response and record one
        audit event. Never raises: every failure downgrades to serving the
        original bytes untouched."""
        snapshot = self._snapshot
        profile = snapshot.profiles.get(ctx.profile_id) or EMPTY_PROFILE
        declared = normalize_media_type(upstream.header("Content-Type") or "")
        original = upstream.body
        passthrough = TransformOutcome(
            body=original, content_type=declared, transformed=False
        )

        if not profile.rules:
            self._emit_passthrough(ctx, declared, len(original), NO_RULE, ())
            return passthrough

        encoding = (upstream.header("Content-Encoding") or "").strip().lower()
        try:
            decoded = decompress_body(original, encoding)
        except ValueError:
            # Cannot look inside the body. Plan on the declared type only,
            # to report whether a transformation was skipped because of it.
            chain_ids = self._plan_ids_or_none(profile, declared, snapshot.catalog)
            if chain_ids:
                self._emit_passthrough(
                    ctx, declared, len(original), CONTENT_ENCODING, chain_ids
                )
            else:
                self._emit_passthrough(ctx, declared, len(original), NO_RULE, ())
            return passthrough

        mime = sniff_format(decoded, declared) if self.config.sniff else declared

        try:
            chain = plan_chain(
                profile, mime, snapshot.catalog, max_depth=self.config.max_depth
            )
        except CycleError as exc:
            self._emit_passthrough(
                ctx, mime, len(original), CYCLE, tuple(exc.partial_step_ids)
            )
            return TransformOutcome(
                body=original, content_type=declared, transformed=False,
                error_header="cycle",
            )
        except DepthExceededError as exc:
            self._emit_passthrough(
                ctx, mime, len(original), DEPTH_EXCEEDED, tuple(exc.partial_step_ids)
            )
            return TransformOutcome(
                body=original, content_type=declared, transformed=False,
                error_header="depth-exceeded",
            )

        if not chain:
            self._emit_passthrough(ctx, mime, len(original), NO_RULE, ())
            return passthrough

        if len(decoded) > self.config.max_transform_bytes:
            self._emit_passthrough(
                ctx, mime, len(original), OVERSIZE, tuple(chain.step_ids())
            )
            return passthrough

        key = make_key(
            ctx.absolute_url, decoded, chain.step_ids(), self.config.options.fingerprint()
        )
        if self.cache is not None:
            entry = self.cache.get(key)
            if entry is not None:
                self.events.append(
                    TransformEvent(
                        timestamp=time.time(),
                        request_url=ctx.absolute_url,
                        profile_id=ctx.profile_id,
                        chain_ids=tuple(chain.step_ids()),
                        initial_mime=chain.initial_mime,
                        final_mime=entry.final_mime,
                        input_bytes=len(decoded),
                        output_bytes=len(entry.body),
                        duration_ms=0,
                        cache_hit=True,
                        outcome=OUTCOME_SUCCESS,
                    )
                )
                return TransformOutcome(
                    body=entry.body,
                    content_type=entry.final_mime,
                    transformed=True,
                    chain_ids=tuple(chain.step_ids()),
                    initial_mime=chain.initial_mime,
                )

        try:
            result = execute_chain(
                decoded,
                chain,
                self.config.options,
                self.registry,
                url=ctx.absolute_url,
                profile_id=ctx.profile_id,
            )
        except StepError as exc:
            logger.warning("chain failed for %s: %s", ctx.absolute_url, exc)
            self._emit_passthrough(
                ctx, mime, len(original), STEP_ERROR, tuple(chain.step_ids())
            )
            return TransformOutcome(
                body=original, content_type=declared, transformed=False,
                error_header="step-error",
            )

        self.events.append(result.event)
        if self.cache is not None and not self._origin_forbids_store(upstream):
            self.cache.put(
                CacheEntry(
                    key=key,
                    body=result.body,
                    final_mime=result.mime,
                    stored_at=time.time(),
                )
            )
        return TransformOutcome(
            body=result.body,
            content_type=result.mime,
            transformed=True,
            chain_ids=tuple(chain.step_ids()),
            initial_mime=chain.initial_mime,
        )

    @staticmethod
    def _origin_forbids_store(upstream) -> bool:
        cc = (upstream.header("Cache-Control") or "").lower()
        return "no-store" in cc

    @staticmethod
    def _plan_ids_or_none(profile: Profile, mime: str, catalog) -> tuple[str, ...]:
        try:
            chain = plan_chain(profile, mime, catalog)
        except RuleError:
            return ()
        return tuple(chain.step_ids())

    def _emit_passthrough(self, ctx, mime, size, reason, chain_ids):
        self.events.append(
            TransformEvent(
                timestamp=time.time(),
                request_url=ctx.absolute_url,
                profile_id=ctx.profile_id,
                chain_ids=tuple(chain_ids),
                initial_mime=mime,
                final_mime=mime,
                input_bytes=size,
                output_bytes=size,
                duration_ms=0,
                cache_hit=False,
                outcome=OUTCOME_PASSTHROUGH,
                reason=reason,
            )
        )

    # --- admin operations --------------------------------------------------

    def list_transformations(self) -> list[dict]:
        return [
            {
                "id": d.id,
                "description": d.description,
                "source": d.source_mime,
                "target": d.target_mime,
                "translator": d.translator,
            }
            for d in self.catalog
        ]

    def _profile_doc(self, profile: Profile) -> dict:
        return {
            "id": profile.id,
            "version": self._versions.get(profile.id, 1),
            "rules": profile.rule_ids(),
        }

    def list_profiles(self) -> list[dict]:
        return [self._profile_doc(p) for p in self.profiles]

    def get_profile_doc(self, profile_id: str) -> dict:
        profile = self.profiles.get(profile_id)
        if profile is None:
            raise NotFoundError(f"no profile {profile_id!r}")
        return self._profile_doc(profile)

    def put_profile(
        self, profile_id: str, rule_ids: list[str], version: int | None = None
    ) -> dict:
        """Create or replace a profile. Replacing an existing profile
        requires the version token from the last get; creation ignores it."""
        with self._write_lock:
            existing = self.profiles.get(profile_id)
            if existing is not None:
                current = self._versions.get(profile_id, 1)
                if version != current:
                    raise VersionConflictError(profile_id, current)
            new = build_profile(profile_id, rule_ids, self.catalog)
            profiles = [p for p in self.profiles if p.id != new.id] + [new]
            self._commit_profiles(profiles)
            if existing is not None:
                self._versions[new.id] = self._versions.get(new.id, 1) + 1
            else:
                self._versions[new.id] = 1
            return self._profile_doc(new)

    def patch_profile(
        self,
        profile_id: str,
        add: list[str] | None = None,
        remove: list[str] | None = None,
        version: int | None = None,
    ) -> dict:
        """Append and/or remove rules on an existing profile. remove names
        rules the profile must currently hold; add appends in order."""
        add = add or []
        remove = remove or []
        if set(add) & set(remove):
            raise InvalidPatchError("add and remove lists must be disjoint")
        with self._write_lock:
            existing = self.profiles.get(profile_id)
            if existing is None:
                raise NotFoundError(f"no profile {profile_id!r}")
            current = self._versions.get(profile_id, 1)
            if version != current:
                raise VersionConflictError(profile_id, current)
            rule_ids = existing.rule_ids()
            for rid in remove:
                if rid not in rule_ids:
                    raise InvalidPatchError(
                        f"profile {profile_id!r} has no rule {rid!r} to remove"
                    )
                rule_ids.remove(rid)
            # duplicate adds collide on source media type inside build_profile
            rule_ids.extend(add)
            new = build_profile(profile_id, rule_ids, self.catalog)
            profiles = [p if p.id != profile_id else new for p in self.profiles]
            self._commit_profiles(profiles)
            self._versions[profile_id] = current + 1
            return self._profile_doc(new)

    def delete_profile(self, profile_id: str, version: int | None = None):
        with self._write_lock:
            existing = self.profiles.get(profile_id)
            if existing is None:
                raise NotFoundError(f"no profile {profile_id!r}")
            current = self._versions.get(profile_id, 1)
            if version is not None and version != current:
                raise VersionConflictError(profile_id, current)
            profiles = [p for p in self.profiles if p.id != profile_id]
            self._commit_profiles(profiles)
            self._versions.pop(profile_id, None)

    def _commit_profiles(self, profiles: list[Profile]):
        """Swap in a new profile set and persist it. Must hold _write_lock."""
        new_set = ProfileSet(
            profiles=tuple(profiles),
            default_profile_id=None,
        )
        text = serialize_profiles(new_set)
        path = self.config.profiles_path
        fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=".profiles-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except OSError:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
        self._snapshot = Snapshot(catalog=self.catalog, profiles=new_set)
