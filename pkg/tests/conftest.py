from __future__ import annotations

import os
import shlex
import shutil
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("suite", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")

REPO_ROOT = Path(__file__).resolve().parents[1]
STUB_SCRIPT = Path(__file__).resolve().parent / "stub_policy.py"
REFERENCE_CLIENT = REPO_ROOT / "policy-client" / "dist" / "server.js"


def stub_endpoint(*flags: str) -> str:
    """Endpoint string launching the local test stub as a subprocess."""
    return shlex.join([sys.executable, str(STUB_SCRIPT), *flags])


def reference_client_endpoint() -> str | None:
    """Endpoint of the reference policy client, if one is available.

    Honors POLICY_CLIENT_ENDPOINT when set; otherwise falls back to the
    built `policy-client` package next to this repository's sources.
    """
    configured = os.environ.get("POLICY_CLIENT_ENDPOINT")
    if configured:
        return configured
    if REFERENCE_CLIENT.exists() and shutil.which("node"):
        return shlex.join(["node", str(REFERENCE_CLIENT)])
    return None


requires_reference_client = pytest.mark.skipif(
    reference_client_endpoint() is None,
    reason="no external policy client endpoint is configured")
