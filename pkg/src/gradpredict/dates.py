"""Calendar arithmetic used across the pipeline.

Semesters follow the Finnish academic calendar: the autumn semester
starts 1 August and the spring semester starts 1 January.  A date's
semester ordinal is ``2 * year + (1 if month >= 8 else 0)``, so
consecutive semesters differ by exactly one.
"""

from __future__ import annotations

import datetime as dt

from dateutil.relativedelta import relativedelta

STUDY_RIGHT_VALIDITY_YEARS = 7


def add_years(date: dt.date, years: int) -> dt.date:
    """Shift by calendar years, clamping Feb 29 to Feb 28 when needed."""
    return date + relativedelta(years=years)


def add_months(date: dt.date, months: int) -> dt.date:
    """Shift by calendar months, clamping to the last day of the month."""
    return date + relativedelta(months=months)


def validity_end(start_date: dt.date) -> dt.date:
    """End of study-right validity: seven calendar years after the start."""
    return add_years(start_date, STUDY_RIGHT_VALIDITY_YEARS)


def semester_ordinal(date: dt.date) -> int:
    """Ordinal index of the semester containing ``date``."""
    return 2 * date.year + (1 if date.month >= 8 else 0)


def semester_start(ordinal: int) -> dt.date:
    """First day of the semester with the given ordinal (Aug 1 or Jan 1)."""
    year, autumn = divmod(ordinal, 2)
    return dt.date(year, 8 if autumn else 1, 1)


def parse_iso_date(text: str) -> dt.date:
    """Parse a strict YYYY-MM-DD date."""
    return dt.date.fromisoformat(text)
