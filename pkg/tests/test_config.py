"""Дымовые тесты загрузки Settings."""

from __future__ import annotations

import pytest
from pydantic import ValidationError

from floquet_holonomy.app_support import load_settings
from floquet_holonomy.config import Settings
from floquet_holonomy.exceptions import ConfigurationError
from floquet_holonomy.models.propagation import IntegrationMethod


def test_settings_defaults(monkeypatch, tmp_path) -> None:
    """Без переменных окружения действуют значения по умолчанию."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("FLOQUET_HOLONOMY_THREADS", raising=False)

    settings = Settings()

    assert settings.threads == 0
    assert settings.default_steps == 512
    assert settings.default_method is IntegrationMethod.MAGNUS4
    assert settings.resonance_tol == 1e-6
    assert settings.effective_threads >= 1


def test_threads_read_from_environment(monkeypatch, tmp_path) -> None:
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("FLOQUET_HOLONOMY_THREADS", "3")

    settings = Settings()

    assert settings.threads == 3
    assert settings.effective_threads == 3


def test_settings_read_dotenv_file(monkeypatch, tmp_path) -> None:
    monkeypatch.chdir(tmp_path)
    (tmp_path / ".env").write_text("FLOQUET_HOLONOMY_LOG_LEVEL=DEBUG\n", encoding="utf-8")

    assert Settings().log_level == "DEBUG"


def test_default_steps_must_be_power_of_two(monkeypatch, tmp_path) -> None:
    monkeypatch.chdir(tmp_path)

    with pytest.raises(ValidationError):
        Settings(default_steps=500)
    assert Settings(default_steps=1024).default_steps == 1024


def test_method_and_format_are_normalised(monkeypatch, tmp_path) -> None:
    monkeypatch.chdir(tmp_path)

    settings = Settings(default_method=" MAGNUS2 ", report_format="Both")

    assert settings.default_method is IntegrationMethod.MAGNUS2
    assert settings.report_format == "both"
    with pytest.raises(ValidationError):
        Settings(default_method="rk4")


def test_resonance_tol_rejects_out_of_range(monkeypatch, tmp_path) -> None:
    monkeypatch.chdir(tmp_path)

    with pytest.raises(ValidationError):
        Settings(resonance_tol=0.0)
    with pytest.raises(ValidationError):
        Settings(resonance_tol=0.5)


def test_load_settings_wraps_validation_error(monkeypatch, tmp_path) -> None:
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("FLOQUET_HOLONOMY_THREADS", "-1")

    with pytest.raises(ConfigurationError) as exc_info:
        load_settings()

    assert "threads" in str(exc_info.value)
    assert exc_info.value.exit_code == 2


def test_report_format_rejects_unknown_value(monkeypatch, tmp_path) -> None:
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("FLOQUET_HOLONOMY_REPORT_FORMAT", "xml")

    with pytest.raises(ValidationError):
        Settings()
