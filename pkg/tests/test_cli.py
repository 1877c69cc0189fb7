"""Tests for bogs.cli module."""

import json
from pathlib import Path
from datetime import datetime
from unittest.mock import patch

import numpy as np
import pytest

from bogs.cli import (
    EXIT_OK,
    EXIT_ERROR,
    EXIT_BLOWUP,
    EXIT_SCALE_ERROR,
    EXIT_CONFIG_ERROR,
    main,
    dispatch,
    exit_code,
    _build_parser,
)
from bogs.config import RunConfig, parse_config
from bogs.errors import BogsError, ScaleError, ConfigError, BlowUpError

BASE = """
[equation]
kind = "{kind}"

[grid]
n_points = 128
length = "16pi"

[solver]
dt = 0.01
t_end = 0.05

[initial]
a = {a}
"""


def _config(kind: str = 'mBO', a: float = 0.5, extra: str = '') -> RunConfig:
    return parse_config(BASE.format(kind=kind, a=a) + extra)


class TestBuildParser:
    def test_defaults(self):
        args = _build_parser().parse_args(['simulate', '-c', 'run.toml'])
        assert args.command == 'simulate'
        assert args.config == 'run.toml'
        assert args.out == 'runs'
        assert args.seed is None
        assert args.json_output is False

    def test_seed_and_json(self):
        args = _build_parser().parse_args(['probe', '--config', 'run.toml', '--seed', '5', '--json'])
        assert args.seed == 5
        assert args.json_output is True

    @pytest.mark.parametrize('command', ['prop14', 'spacetime-l2'])
    def test_spacetime_commands(self, command: str):
        assert _build_parser().parse_args([command, '-c', 'run.toml']).command == command

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            _build_parser().parse_args(['fly', '-c', 'run.toml'])

    def test_verbose_and_quiet_exclusive(self):
        with pytest.raises(SystemExit):
            _build_parser().parse_args(['simulate', '-c', 'run.toml', '-v', '-q'])


class TestExitCode:
    @pytest.mark.parametrize(
        ('error', 'code'),
        [
            (ConfigError('x'), EXIT_CONFIG_ERROR),
            (BlowUpError('x', last_time=0.0), EXIT_BLOWUP),
            (ScaleError('x'), EXIT_SCALE_ERROR),
            (BogsError('x'), EXIT_ERROR),
        ],
    )
    def test_mapping(self, error: BogsError, code: int):
        assert exit_code(error) == code


class TestDispatch:
    def test_simulate_zero_data(self, tmp_path: Path):
        result = dispatch('simulate', _config(a=0.0), tmp_path)
        assert result.status == EXIT_OK
        assert result.run_dir is not None
        names = sorted(p.name for p in result.run_dir.iterdir())
        assert 'conservation.csv' in names
        assert 'metadata.json' in names
        assert [n for n in names if n.startswith('snapshot_')] == [f'snapshot_{i}.bogs' for i in range(6)]
        assert result.summary['snapshots'] == 6

    def test_conserve(self, tmp_path: Path):
        result = dispatch('conserve', _config(), tmp_path)
        assert result.status == EXIT_OK
        assert result.run_dir is not None
        assert (result.run_dir / 'drift.csv').exists()
        assert result.summary['drift']['l2_mass'] < 1e-8

    def test_unresolvable_scale_writes_nothing(self, tmp_path: Path):
        cfg = _config(extra='\n[analysis]\ndyadic = [16]\n')
        result = dispatch('gauge-verify', cfg, tmp_path)
        assert result.status == EXIT_SCALE_ERROR
        assert list(tmp_path.iterdir()) == []

    def test_gauge_verify_requires_mbo(self, tmp_path: Path):
        result = dispatch('gauge-verify', _config(kind='BO'), tmp_path)
        assert result.status == EXIT_CONFIG_ERROR

    def test_gauge_verify(self, tmp_path: Path):
        cfg = _config(extra='\n[analysis]\ndyadic = [2, 4]\n')
        result = dispatch('gauge-verify', cfg, tmp_path)
        assert result.status == EXIT_OK
        assert result.run_dir is not None
        assert (result.run_dir / 'gauge_residual_N2.csv').exists()
        assert set(result.summary['max_residual']) == {'2', '4'}
        assert set(result.summary['max_phase_mismatch']) == {'2', '4'}
        header = (result.run_dir / 'gauge_residual_N2.csv').read_text().splitlines()[0]
        assert header == 'time,residual,relative_residual,phase_mismatch'

    def test_blowup(self, tmp_path: Path):
        text = BASE.format(kind='mBO', a=50.0).replace('t_end = 0.05', 't_end = 10.0\nblowup_factor = 1.5')
        text = text.replace('dt = 0.01', 'dt = 0.1') + 'sigma = 0.5\n'
        with np.errstate(all='ignore'):
            result = dispatch('simulate', parse_config(text), tmp_path)
        assert result.status == EXIT_BLOWUP
        assert list(tmp_path.iterdir()) == []

    def test_unknown_command(self, tmp_path: Path):
        result = dispatch('fly', _config(), tmp_path)
        assert result.status == EXIT_ERROR
        assert result.error is not None

    def test_deterministic_csv(self, tmp_path: Path):
        first = dispatch('conserve', _config(), tmp_path, now=datetime(2026, 1, 1))
        second = dispatch('conserve', _config(), tmp_path, now=datetime(2026, 1, 2))
        assert first.run_dir is not None
        assert second.run_dir is not None
        for name in ('conservation.csv', 'drift.csv'):
            assert (first.run_dir / name).read_bytes() == (second.run_dir / name).read_bytes()

    def test_scale(self, tmp_path: Path):
        cfg = _config(extra='\n[analysis]\nscale_time = 0.05\n')
        result = dispatch('scale', cfg, tmp_path)
        assert result.status == EXIT_OK
        assert result.summary['lam'] == 2.0

    def test_lp_check(self, tmp_path: Path):
        cfg = _config(extra='\n[analysis]\nprobe_samples = 2\nmin_samples = 2\n')
        result = dispatch('lp-check', cfg, tmp_path)
        assert result.status == EXIT_OK
        assert result.summary['p=2']['max'] == pytest.approx(1.0, abs=1e-10)

    def test_norms(self, tmp_path: Path):
        result = dispatch('norms', _config(), tmp_path)
        assert result.status == EXIT_OK
        assert result.summary['Y'] > 0
        assert set(result.summary['mixed']) >= {'L2_xT', 'LTinf_Lx2'}

    def test_prop14(self, tmp_path: Path):
        cfg = _config(extra='\n[analysis]\nensemble = 2\n')
        result = dispatch('prop14', cfg, tmp_path, now=datetime(2026, 1, 1))
        assert result.status == EXIT_OK
        assert result.run_dir is not None
        lines = (result.run_dir / 'spacetime_l2.csv').read_text().splitlines()
        assert lines[0] == 'seed,lhs,rhs,ratio'
        assert len(lines) == 3
        assert result.summary['members'] == 2

    def test_spacetime_l2_alias_matches_prop14(self, tmp_path: Path):
        cfg = _config(extra='\n[analysis]\nensemble = 2\n')
        first = dispatch('prop14', cfg, tmp_path, now=datetime(2026, 1, 1))
        second = dispatch('spacetime-l2', cfg, tmp_path, now=datetime(2026, 1, 2))
        assert first.run_dir is not None
        assert second.run_dir is not None
        name = 'spacetime_l2.csv'
        assert (first.run_dir / name).read_bytes() == (second.run_dir / name).read_bytes()

    def test_prop14_rejects_dnls(self, tmp_path: Path):
        assert dispatch('prop14', _config(kind='DNLS'), tmp_path).status == EXIT_CONFIG_ERROR


class TestMain:
    def _write(self, tmp_path: Path, text: str) -> Path:
        path = tmp_path / 'run.toml'
        path.write_text(text)
        return path

    def test_json_success(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        path = self._write(tmp_path, BASE.format(kind='mBO', a=0.5))
        main(['conserve', '-c', str(path), '-o', str(tmp_path / 'runs'), '--json', '-q'])
        output = json.loads(capsys.readouterr().out)
        assert output['status'] == 'ok'
        assert output['command'] == 'conserve'
        assert Path(output['run_dir']).is_dir()

    def test_seed_override(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        path = self._write(tmp_path, BASE.format(kind='mBO', a=0.5))
        main(['simulate', '-c', str(path), '-o', str(tmp_path / 'runs'), '--seed', '12', '--json', '-q'])
        output = json.loads(capsys.readouterr().out)
        assert output['run_dir'].endswith('-seed12')
        metadata = json.loads((Path(output['run_dir']) / 'metadata.json').read_text())
        assert metadata['seed'] == 12
        assert metadata['config']['initial']['seed'] == 12

    def test_config_error_exit(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        path = self._write(tmp_path, BASE.format(kind='KdV', a=0.5))
        with pytest.raises(SystemExit) as exc_info:
            main(['simulate', '-c', str(path), '--json'])
        assert exc_info.value.code == EXIT_CONFIG_ERROR
        output = json.loads(capsys.readouterr().out)
        assert output['error'] == 'config_error'
        assert 'equation.kind' in output['message']

    def test_scale_error_exit(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        text = BASE.format(kind='mBO', a=0.5) + '\n[analysis]\ndyadic = [16]\n'
        path = self._write(tmp_path, text)
        with pytest.raises(SystemExit) as exc_info:
            main(['gauge-verify', '-c', str(path), '-o', str(tmp_path / 'runs')])
        assert exc_info.value.code == EXIT_SCALE_ERROR
        assert 'not resolvable' in capsys.readouterr().err

    def test_version_from_argv(self, capsys: pytest.CaptureFixture[str]):
        with patch('sys.argv', ['bogs', '--version']), pytest.raises(SystemExit) as exc_info:
            main()
        assert exc_info.value.code == 0
        assert capsys.readouterr().out.startswith('bogs ')
