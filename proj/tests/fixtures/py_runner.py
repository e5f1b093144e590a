#!/usr/bin/env python3
# Copyright 2026 The Agreerank Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Minimal protocol runner used by the test suite.

Each request runs `code + "\\n" + test` in a forked child of the runner, so
the budget covers the candidate rather than interpreter startup.
"""

import json
import os
import signal
import sys
import time


def run_child(program, err_fd):
    try:
        exec(compile(program, "<candidate>", "exec"), {"__name__": "__main__"})
    except AssertionError:
        os._exit(1)
    except BaseException as e:  # noqa: BLE001
        os.write(err_fd, repr(e)[:400].encode(errors="replace"))
        os._exit(2)
    os._exit(0)


def execute(program, budget):
    """Returns (status, detail)."""
    read_fd, write_fd = os.pipe()
    sys.stdout.flush()
    pid = os.fork()
    if pid == 0:
        os.close(read_fd)
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, 0)
        os.dup2(devnull, 1)
        run_child(program, write_fd)
    os.close(write_fd)
    deadline = time.monotonic() + budget
    while True:
        done, status = os.waitpid(pid, os.WNOHANG)
        if done:
            break
        if time.monotonic() >= deadline:
            os.kill(pid, signal.SIGKILL)
            os.waitpid(pid, 0)
            os.close(read_fd)
            return "timeout", ""
        time.sleep(0.001)
    detail = os.read(read_fd, 4096).decode(errors="replace")
    os.close(read_fd)
    code = os.waitstatus_to_exitcode(status)
    return {0: "pass", 1: "fail"}.get(code, "error"), detail


def respond(rid, status, duration_ms, detail=""):
    out = {"id": rid, "status": status, "duration_ms": int(duration_ms)}
    if detail:
        out["detail"] = detail[:512]
    sys.stdout.write(json.dumps(out) + "\n")
    sys.stdout.flush()


def main():
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            rid = req["id"]
            program = req["code"] + "\n" + req["test"] + "\n"
            budget = req["timeout_ms"] / 1000.0
        except Exception as e:  # noqa: BLE001
            respond("unknown", "error", 0, "bad request: %r" % e)
            continue
        start = time.monotonic()
        status, detail = execute(program, budget)
        respond(rid, status, (time.monotonic() - start) * 1000, detail)


if __name__ == "__main__":
    main()
