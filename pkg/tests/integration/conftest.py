"""
Adaptive fixtures for command-line integration tests.

The command is run in-process by default. Setting ``TIPS_CLI_SUBPROCESS=1``
runs every invocation as ``python -m tips_profiles`` in a child process
instead, which also exercises the console entry point.

In-process:  TIPS_CLI_SUBPROCESS unset/empty  (fast)
Subprocess:  TIPS_CLI_SUBPROCESS=1            (closer to a real install)
"""

import json
import logging
import os
import subprocess
import sys
from pathlib import Path
from typing import Any, Dict, NamedTuple

import pytest

from tips_profiles.cli import run

logger = logging.getLogger(__name__)

# ── Environment detection ────────────────────────────────────────────────────

USE_SUBPROCESS = os.environ.get("TIPS_CLI_SUBPROCESS", "").strip() not in ("", "0")
FIXTURES = Path(__file__).resolve().parents[2] / "fixtures"

logger.info("CLI test mode: %s", "SUBPROCESS" if USE_SUBPROCESS else "IN-PROCESS")


class CliResult(NamedTuple):
    code: int
    stdout: str
    stderr: str

    def json(self) -> Dict[str, Any]:
        return json.loads(self.stdout)


# ── Fixtures ─────────────────────────────────────────────────────────────────


@pytest.fixture()
def fixture_file():
    """Path of a bundled task-system document by name."""

    def _path(name: str) -> str:
        return str(FIXTURES / f"{name}.json")

    return _path


@pytest.fixture()
def cli(capsys):
    """Run the command line and collect exit status and output."""

    def _run(*argv: str) -> CliResult:
        if USE_SUBPROCESS:
            result = subprocess.run(
                [sys.executable, "-m", "tips_profiles", *argv],
                capture_output=True,
                text=True,
            )
            return CliResult(result.returncode, result.stdout, result.stderr)
        capsys.readouterr()
        code = run(list(argv))
        captured = capsys.readouterr()
        return CliResult(code, captured.out, captured.err)

    return _run


@pytest.fixture()
def mutated_fixture(tmp_path):
    """Copy of a fixture with ``edit`` applied to its parsed JSON."""

    def _mutate(name: str, edit) -> str:
        data = json.loads((FIXTURES / f"{name}.json").read_text())
        edit(data)
        target = tmp_path / f"{name}-mutated.json"
        target.write_text(json.dumps(data))
        return str(target)

    return _mutate
