"""Emit SQL views that embed model coefficients as calculated columns.

The emitted text is plain ANSI SQL -- arithmetic, EXP(), and CASE WHEN
only -- so the views can be created in any warehouse and consumed by BI
tools without a model runtime.  Output is deterministic: terms appear in
artifact order and coefficients are printed as shortest round-trip
decimals, so the same inputs always emit byte-identical SQL and the
parsed coefficients equal the in-process ones bit for bit.

Dialect-specific syntax is deliberately out of scope; wrap or post-process
the emitted text if a warehouse needs its own quoting or DDL framing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DataValidationError
from .glm import CONSTANT_TERM
from .pipeline import FOUR_YEARS_OR_MORE_PHRASE, ModelArtifact, PredictionCategory

_IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _check_identifier(kind: str, name: str) -> str:
    if not _IDENTIFIER.match(name):
        raise DataValidationError(f"invalid SQL identifier for {kind}: {name!r}")
    return name


@dataclass(frozen=True)
class SqlViewSpec:
    view_name: str
    source_table: str
    key_column: str
    #: term name -> source column; None means identity mapping.
    column_mapping: dict[str, str] | None = None
    threshold: float = 0.5
    #: calculated column name; defaults by family (probability/prediction).
    output_column: str | None = None

    def __post_init__(self):
        _check_identifier("view_name", self.view_name)
        _check_identifier("source_table", self.source_table)
        _check_identifier("key_column", self.key_column)
        if self.column_mapping is not None:
            for term, column in self.column_mapping.items():
                _check_identifier(f"column for term {term!r}", column)
        if not 0.0 <= self.threshold <= 1.0:
            raise DataValidationError(f"threshold {self.threshold} outside [0, 1]")
        if self.output_column is not None:
            _check_identifier("output_column", self.output_column)

    def column_for(self, term: str) -> str:
        if self.column_mapping is None:
            return _check_identifier(f"term {term!r}", term)
        try:
            return self.column_mapping[term]
        except KeyError:
            raise DataValidationError(
                f"no source column mapped for model term {term!r}"
            ) from None


def _decimal(value: float) -> str:
    """Shortest decimal that round-trips to the exact same float."""
    return repr(float(value))


def _linear_expression(artifact: ModelArtifact, spec: SqlViewSpec) -> str:
    parts = [_decimal(artifact.coefficients[CONSTANT_TERM])]
    for term, coefficient in artifact.coefficients.items():
        if term == CONSTANT_TERM:
            continue
        parts.append(f"{_decimal(coefficient)}*{spec.column_for(term)}")
    return " + ".join(parts)


def _score_expression(artifact: ModelArtifact, spec: SqlViewSpec) -> str:
    z = _linear_expression(artifact, spec)
    if artifact.family == "logistic":
        return f"EXP({z}) / (1 + EXP({z}))"
    return z


def emit_sql_view(artifact: ModelArtifact, spec: SqlViewSpec) -> str:
    """CREATE VIEW with the key column plus one calculated score column."""
    output = spec.output_column
    if output is None:
        output = "probability" if artifact.family == "logistic" else "prediction"
    expression = _score_expression(artifact, spec)
    return (
        f"CREATE VIEW {spec.view_name} AS\n"
        f"SELECT\n"
        f"    {spec.key_column},\n"
        f"    {expression} AS {output}\n"
        f"FROM {spec.source_table};\n"
    )


def emit_two_stage_sql(pm2_artifact: ModelArtifact, pm3_artifact: ModelArtifact,
                       spec: SqlViewSpec) -> str:
    """CREATE VIEW for the two-stage prediction.

    Columns: the key, p_graduate_4y, time_to_degree (NULL below the
    threshold -- a sentinel number would poison BI aggregates), and a
    category column carrying the display phrase for the deferred group.
    """
    if pm2_artifact.family != "logistic":
        raise DataValidationError("two-stage SQL needs a logistic first stage")
    if pm3_artifact.family != "linear":
        raise DataValidationError("two-stage SQL needs a linear second stage")
    p_expr = _score_expression(pm2_artifact, spec)
    t_expr = _score_expression(pm3_artifact, spec)
    threshold = _decimal(spec.threshold)
    return (
        f"CREATE VIEW {spec.view_name} AS\n"
        f"SELECT\n"
        f"    {spec.key_column},\n"
        f"    {p_expr} AS p_graduate_4y,\n"
        f"    CASE WHEN {p_expr} >= {threshold} THEN {t_expr} "
        f"ELSE NULL END AS time_to_degree,\n"
        f"    CASE WHEN {p_expr} >= {threshold} "
        f"THEN '{PredictionCategory.NUMERIC.value}' "
        f"ELSE '{FOUR_YEARS_OR_MORE_PHRASE}' END AS category\n"
        f"FROM {spec.source_table};\n"
    )
