"""External-evaluator line protocol against scripted stub processes."""

import sys
import textwrap

import numpy as np
import pytest

from hygopt.problems import (ExternalEvaluationError, ExternalEvaluator,
                             IndexMismatchError, MalformedResponseError,
                             ResponseTimeoutError)


def make_stub(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(textwrap.dedent(body))
    return [sys.executable, str(path)]


SPHERE_STUB = """
    import sys
    for line in sys.stdin:
        parts = line.split()
        if parts[0] != "EVAL":
            continue
        idx = parts[2]
        cost = sum(float(p) ** 2 for p in parts[3:])
        print(f"OK {idx} {cost!r}", flush=True)
"""


class TestHappyPath:
    def test_sphere_echo_stub(self, tmp_path):
        cmd = make_stub(tmp_path, "sphere.py", SPHERE_STUB)
        with ExternalEvaluator(cmd, run_id="t1", timeout=10) as ev:
            assert ev([3.0, 4.0]) == 25.0
            assert ev([0.0, 0.0]) == 0.0
            assert ev([1.5]) == 2.25

    def test_indices_increase_per_call(self, tmp_path):
        cmd = make_stub(tmp_path, "idx.py", """
            import sys
            for line in sys.stdin:
                parts = line.split()
                print(f"OK {parts[2]} {float(parts[2])}", flush=True)
        """)
        with ExternalEvaluator(cmd, timeout=10) as ev:
            got = [ev([0.0]) for _ in range(5)]
        assert got == [0.0, 1.0, 2.0, 3.0, 4.0]

    def test_full_precision_round_trip(self, tmp_path):
        cmd = make_stub(tmp_path, "echo1.py", """
            import sys
            for line in sys.stdin:
                parts = line.split()
                print(f"OK {parts[2]} {parts[3]}", flush=True)
        """)
        value = 0.1 + 0.2            # not exactly representable in decimal
        with ExternalEvaluator(cmd, timeout=10) as ev:
            assert ev([value]) == value

    def test_run_id_transmitted(self, tmp_path):
        cmd = make_stub(tmp_path, "runid.py", """
            import sys
            for line in sys.stdin:
                parts = line.split()
                ok = 1.0 if parts[1] == "myrun" else -1.0
                print(f"OK {parts[2]} {ok}", flush=True)
        """)
        with ExternalEvaluator(cmd, run_id="myrun", timeout=10) as ev:
            assert ev([0.0]) == 1.0


class TestFailures:
    def test_timeout(self, tmp_path):
        cmd = make_stub(tmp_path, "sleep.py", """
            import sys, time
            for line in sys.stdin:
                time.sleep(60)
        """)
        with ExternalEvaluator(cmd, timeout=0.3, retries=0) as ev:
            with pytest.raises(ResponseTimeoutError):
                ev([1.0])

    def test_malformed_response(self, tmp_path):
        cmd = make_stub(tmp_path, "garbage.py", """
            import sys
            for line in sys.stdin:
                print("WAT", flush=True)
        """)
        with ExternalEvaluator(cmd, timeout=10, retries=0) as ev:
            with pytest.raises(MalformedResponseError):
                ev([1.0])

    def test_non_numeric_cost(self, tmp_path):
        cmd = make_stub(tmp_path, "notnum.py", """
            import sys
            for line in sys.stdin:
                parts = line.split()
                print(f"OK {parts[2]} banana", flush=True)
        """)
        with ExternalEvaluator(cmd, timeout=10, retries=0) as ev:
            with pytest.raises(MalformedResponseError):
                ev([1.0])

    def test_index_mismatch(self, tmp_path):
        cmd = make_stub(tmp_path, "wrongidx.py", """
            import sys
            for line in sys.stdin:
                print("OK 999 1.0", flush=True)
        """)
        with ExternalEvaluator(cmd, timeout=10, retries=0) as ev:
            with pytest.raises(IndexMismatchError):
                ev([1.0])

    def test_err_response_surfaces_message(self, tmp_path):
        cmd = make_stub(tmp_path, "err.py", """
            import sys
            for line in sys.stdin:
                parts = line.split()
                print(f"ERR {parts[2]} solver blew up", flush=True)
        """)
        with ExternalEvaluator(cmd, timeout=10, retries=0) as ev:
            with pytest.raises(ExternalEvaluationError, match="blew up"):
                ev([1.0])

    def test_dead_process_raises(self, tmp_path):
        cmd = make_stub(tmp_path, "die.py", "import sys; sys.exit(3)")
        with ExternalEvaluator(cmd, timeout=1.0, retries=0) as ev:
            with pytest.raises(ExternalEvaluationError):
                ev([1.0])


class TestRetry:
    def test_restart_after_crash(self, tmp_path):
        # the stub answers one request then dies; a retry restarts it
        marker = tmp_path / "count"
        cmd = make_stub(tmp_path, "flaky.py", f"""
            import sys
            from pathlib import Path
            marker = Path({str(marker)!r})
            n = int(marker.read_text()) if marker.exists() else 0
            marker.write_text(str(n + 1))
            for line in sys.stdin:
                parts = line.split()
                print(f"OK {{parts[2]}} 7.0", flush=True)
                sys.exit(0)
        """)
        with ExternalEvaluator(cmd, timeout=10, retries=1) as ev:
            assert ev([1.0]) == 7.0
            assert ev([2.0]) == 7.0      # needs a restart to answer
        assert int(marker.read_text()) >= 2

    def test_retries_exhausted(self, tmp_path):
        cmd = make_stub(tmp_path, "never.py", """
            import sys, time
            for line in sys.stdin:
                time.sleep(60)
        """)
        with ExternalEvaluator(cmd, timeout=0.2, retries=2) as ev:
            with pytest.raises(ResponseTimeoutError):
                ev([1.0])


class TestInput:
    def test_vector_flattened_and_cast(self, tmp_path):
        cmd = make_stub(tmp_path, "dims.py", """
            import sys
            for line in sys.stdin:
                parts = line.split()
                print(f"OK {parts[2]} {len(parts) - 3}", flush=True)
        """)
        with ExternalEvaluator(cmd, timeout=10) as ev:
            assert ev(np.array([[1, 2], [3, 4]])) == 4.0
