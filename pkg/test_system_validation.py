import os

import system_validation


def test_individual_checks():
    """Cada chequeo exacto del script devuelve True."""
    assert system_validation.check_indicator_scaling()
    assert system_validation.check_rho_closed_form()
    assert system_validation.check_lambda_brownian()
    assert system_validation.check_h_norm_closed_form()


def test_spec_files(capsys):
    config_dir = system_validation.CONFIG_DIR
    assert system_validation.validate_spec_file(os.path.join(config_dir, 'single.toml'))
    assert system_validation.validate_spec_file(os.path.join(config_dir, 'bad.toml'), expect_valid=False)
    assert not system_validation.validate_spec_file(os.path.join(config_dir, 'bad.toml'))
    assert not system_validation.validate_spec_file(os.path.join(config_dir, 'nope.toml'))
    assert '❌' in capsys.readouterr().out


def test_main_returns_zero():
    assert system_validation.main() == 0
