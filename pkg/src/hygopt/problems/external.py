"""Line-oriented protocol for external cost evaluators.

The evaluator is any child process that reads requests

    EVAL <run_id> <index> <p1> <p2> ... <pN>\\n

from stdin and answers one line per request:

    OK <index> <cost>\\n      or      ERR <index> <message>\\n

Numbers travel in full-precision decimal scientific notation.  Responses
must echo the request index; timeouts, malformed lines, index mismatches
and dead processes raise, optionally after restarting the child and
retrying.
"""

from __future__ import annotations

import queue
import subprocess
import threading

import numpy as np


class ExternalEvaluationError(RuntimeError):
    """Base error for the external-evaluator protocol."""


class ResponseTimeoutError(ExternalEvaluationError):
    pass


class MalformedResponseError(ExternalEvaluationError):
    pass


class IndexMismatchError(ExternalEvaluationError):
    pass


class ExternalEvaluator:
    """Cost evaluation through a child process speaking the line protocol.

    Callable on a parameter vector; request indices increase by one per
    call so request/response indices are bijective over a run.
    """

    def __init__(self, command, run_id: str = "run", timeout: float = 30.0,
                 retries: int = 1):
        self.command = list(command)
        self.run_id = run_id
        self.timeout = float(timeout)
        self.retries = int(retries)
        self.next_index = 0
        self._proc = None
        self._lines = None

    # -- process management -------------------------------------------------

    def _start(self):
        self._proc = subprocess.Popen(
            self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, text=True, bufsize=1)
        self._lines = queue.Queue()

        def pump(proc, out):
            for line in proc.stdout:
                out.put(line)

        threading.Thread(target=pump, args=(self._proc, self._lines),
                         daemon=True).start()

    def _stop(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()
        self._proc = None
        self._lines = None

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- protocol ------------------------------------------------------------

    def _request_once(self, index: int, params: np.ndarray) -> float:
        if self._proc is None or self._proc.poll() is not None:
            self._stop()
            self._start()
        numbers = " ".join(format(p, ".17e") for p in params)
        try:
            self._proc.stdin.write(f"EVAL {self.run_id} {index} {numbers}\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ExternalEvaluationError(
                f"evaluator process died (exit {self._proc.poll()})") from exc
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise ResponseTimeoutError(
                f"no response to index {index} within {self.timeout}s") from None
        parts = line.split()
        if len(parts) < 2 or parts[0] not in ("OK", "ERR"):
            raise MalformedResponseError(f"bad response line: {line!r}")
        try:
            got_index = int(parts[1])
        except ValueError:
            raise MalformedResponseError(f"bad response index: {line!r}") from None
        if got_index != index:
            raise IndexMismatchError(
                f"response index {got_index} != request index {index}")
        if parts[0] == "ERR":
            raise ExternalEvaluationError(
                f"evaluator error for index {index}: {' '.join(parts[2:])}")
        if len(parts) != 3:
            raise MalformedResponseError(f"bad OK response: {line!r}")
        try:
            return float(parts[2])
        except ValueError:
            raise MalformedResponseError(f"non-numeric cost: {line!r}") from None

    def __call__(self, params) -> float:
        params = np.asarray(params, dtype=float).ravel()
        index = self.next_index
        self.next_index += 1
        last_error = None
        for _ in range(self.retries + 1):
            try:
                return self._request_once(index, params)
            except (ResponseTimeoutError, MalformedResponseError,
                    ExternalEvaluationError) as exc:
                last_error = exc
                self._stop()         # restart the child before retrying
        raise last_error
