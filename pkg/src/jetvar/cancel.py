"""Cooperative cancellation for long integration-by-parts loops.

The active token lives in a context variable, so concurrent computations in
different threads or tasks each see their own token.
"""
from __future__ import annotations

import contextlib
import contextvars
import time

from .errors import Cancelled


class CancelToken:
    def __init__(self, timeout: float | None = None):
        self.deadline = None if timeout is None else time.monotonic() + timeout
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True

    def check(self) -> None:
        if self.cancelled:
            raise Cancelled("computation cancelled")
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise Cancelled("computation timed out")


_active: contextvars.ContextVar[CancelToken | None] = contextvars.ContextVar(
    "jetvar_cancel_token", default=None
)


@contextlib.contextmanager
def cancellation(token: CancelToken):
    reset = _active.set(token)
    try:
        yield token
    finally:
        _active.reset(reset)


def checkpoint() -> None:
    token = _active.get()
    if token is not None:
        token.check()
