"""Fail-closed privacy gate for column access.

Feature extraction and training may only touch columns that passed
``check_columns``.  A request containing any sensitive column is denied
as a whole (never silently trimmed, which would change model semantics
invisibly), and every check is appended to an audit log.

The default sensitive set covers GDPR special-category attributes; the
registry's own schema contains none of them, so standard extraction is
always permitted.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataValidationError, PrivacyDeniedError

DEFAULT_SENSITIVE_COLUMNS = frozenset({
    "ethnicity",
    "health",
    "religion",
    "political_opinion",
})

DEFAULT_PURPOSES = frozenset({
    "feature_extraction",
    "training",
    "scoring",
    "aggregation",
    "evaluation",
})


@dataclass(frozen=True)
class PrivacyPolicy:
    sensitive_columns: frozenset[str]
    allowed_purposes: frozenset[str]
    policy_version: int = 1


def default_policy() -> PrivacyPolicy:
    return PrivacyPolicy(
        sensitive_columns=DEFAULT_SENSITIVE_COLUMNS,
        allowed_purposes=DEFAULT_PURPOSES,
        policy_version=1,
    )


def load_policy(path: str | Path) -> PrivacyPolicy:
    """Read a policy JSON file: {policy_version, sensitive_columns, allowed_purposes}."""
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataValidationError(f"cannot read policy {path}: {exc}") from exc
    try:
        return PrivacyPolicy(
            sensitive_columns=frozenset(raw["sensitive_columns"]),
            allowed_purposes=frozenset(raw["allowed_purposes"]),
            policy_version=int(raw["policy_version"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataValidationError(f"malformed policy file {path}: {exc}") from exc


def save_policy(policy: PrivacyPolicy, path: str | Path) -> None:
    document = {
        "policy_version": policy.policy_version,
        "sensitive_columns": sorted(policy.sensitive_columns),
        "allowed_purposes": sorted(policy.allowed_purposes),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=2)
        handle.write("\n")


@dataclass(frozen=True)
class ColumnManifest:
    """Approval token produced by ``check_columns``.

    FeatureTable construction requires one, which is what structurally
    guarantees no extraction path bypasses the gate.
    """

    columns: tuple[str, ...]
    purpose: str
    policy_version: int


@dataclass(frozen=True)
class AuditEntry:
    timestamp: dt.datetime
    operation: str
    requested_columns: tuple[str, ...]
    decision: str  # "allowed" | "denied"
    denied_columns: tuple[str, ...] = field(default=())

    def to_json(self) -> str:
        return json.dumps({
            "timestamp": self.timestamp.isoformat(),
            "operation": self.operation,
            "requested_columns": list(self.requested_columns),
            "decision": self.decision,
            "denied_columns": list(self.denied_columns),
        }, sort_keys=True)


class AuditLog:
    """Append-only newline-delimited JSON audit trail."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, entry: AuditEntry) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as handle:
            handle.write(entry.to_json() + "\n")

    def __len__(self) -> int:
        if not self.path.exists():
            return 0
        with open(self.path, encoding="utf-8") as handle:
            return sum(1 for line in handle if line.strip())

    def entries(self) -> Iterator[AuditEntry]:
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                raw = json.loads(line)
                yield AuditEntry(
                    timestamp=dt.datetime.fromisoformat(raw["timestamp"]),
                    operation=raw["operation"],
                    requested_columns=tuple(raw["requested_columns"]),
                    decision=raw["decision"],
                    denied_columns=tuple(raw["denied_columns"]),
                )


def check_columns(requested: Iterable[str], policy: PrivacyPolicy, purpose: str,
                  audit_log: AuditLog | None = None) -> ColumnManifest:
    """Gate a column request against the policy.

    Returns an approval manifest when no requested column is sensitive
    and the purpose is allowed.  Otherwise denies the whole request with
    PrivacyDeniedError; the denial (like every check) is appended to the
    audit log when one is given.
    """
    columns = tuple(requested)
    if purpose not in policy.allowed_purposes:
        entry = AuditEntry(
            timestamp=dt.datetime.now(dt.timezone.utc),
            operation=purpose,
            requested_columns=columns,
            decision="denied",
            denied_columns=tuple(sorted(columns)),
        )
        if audit_log is not None:
            audit_log.append(entry)
        raise PrivacyDeniedError(
            tuple(sorted(columns)),
            f"purpose {purpose!r} is not allowed by policy "
            f"version {policy.policy_version} (fail-closed)",
        )

    denied = tuple(sorted(set(columns) & policy.sensitive_columns))
    entry = AuditEntry(
        timestamp=dt.datetime.now(dt.timezone.utc),
        operation=purpose,
        requested_columns=columns,
        decision="denied" if denied else "allowed",
        denied_columns=denied,
    )
    if audit_log is not None:
        audit_log.append(entry)
    if denied:
        raise PrivacyDeniedError(
            denied,
            "request denied: sensitive column(s) "
            + ", ".join(denied)
            + f" under policy version {policy.policy_version}",
        )
    return ColumnManifest(columns=columns, purpose=purpose,
                          policy_version=policy.policy_version)
