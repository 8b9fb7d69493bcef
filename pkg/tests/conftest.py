"""Shared fixtures for riesz-tomo tests."""

from unittest.mock import patch

import pytest


@pytest.fixture(autouse=True)
def fixed_threads():
    # Every module resolves worker counts through ``config.get_threads``; pinning
    # the env-derived default keeps runs independent of the host.
    with patch("riesz_tomo.config.RIESZ_TOMO_THREADS", "2"):
        yield


@pytest.fixture
def bump64():
    from riesz_tomo import preset_phantom, rasterize
    return rasterize(preset_phantom("bump", radius=0.5), 64)


@pytest.fixture
def annulus32():
    from riesz_tomo import preset_phantom, rasterize
    return rasterize(preset_phantom("annulus", r_inner=0.5, r_outer=0.9, smooth=1), 32)


@pytest.fixture
def geometry16():
    from riesz_tomo import roi_geometry
    return roi_geometry(16)


@pytest.fixture
def fixtures_dir():
    from pathlib import Path
    return Path(__file__).parent / "fixtures"


@pytest.fixture
def run_cli(capsys):
    """Run the CLI in-process; returns (exit_code, stdout, stderr)."""
    from riesz_tomo.cli import main

    def run(*argv):
        code = main([str(a) for a in argv])
        captured = capsys.readouterr()
        return code, captured.out, captured.err
    return run


@pytest.fixture
def parse_output():
    """Turns the key=value lines of a CLI run into a dict (other lines are skipped)."""
    def parse(text):
        result = {}
        for line in text.splitlines():
            key, sep, value = line.partition("=")
            if sep and " " not in key:
                result[key] = value
        return result
    return parse
