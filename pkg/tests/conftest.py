"""Shared test plumbing.

Acceptance tests register one line per criterion through the ``acceptance``
decorator; the terminal summary then prints an explicit pass/fail roster so a
full run ends with one line per criterion regardless of where it failed.
"""
from __future__ import annotations

import functools

_LINES: dict[int, tuple[bool, str]] = {}


def record_acceptance(num: int, passed: bool, detail: str) -> None:
    _LINES[num] = (passed, detail)


def acceptance(num: int):
    """Record the wrapped test's outcome under criterion ``num``.

    On success the test's return value becomes the detail string; on any
    failure the exception text is recorded before it propagates.
    """
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                text = str(exc).split("\n")[0][:200] or type(exc).__name__
                record_acceptance(num, False, f"{type(exc).__name__}: {text}")
                raise
            record_acceptance(num, True, detail or "ok")
        return wrapper
    return deco


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_LINES):
        passed, detail = _LINES[num]
        word = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {num} {word}: {detail}")
