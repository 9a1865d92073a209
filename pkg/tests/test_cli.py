"""End-to-end tests for the transnn command line"""

import argparse
import json

import numpy as np
import pandas as pd
import pytest

from transnn import certificates, cli
from transnn.builders import build_spec, chain_spec, random_spec, self_loop_spec
from transnn.network_model import EXCITATORY, read_spec


def _report(out_dir):
    return {entry['kind']: entry for entry in json.loads((out_dir / "report.json").read_text())}


class TestArguments:

    def test_clamp_parsing(self):
        assert cli._parse_clamp("1=1,3=0") == {0: 1, 2: 0}

    @pytest.mark.parametrize("text", ["1:1", "0=1", "2=5"])
    def test_bad_clamp(self, text):
        with pytest.raises(argparse.ArgumentTypeError):
            cli._parse_clamp(text)

    def test_out_dir_resolution(self, monkeypatch, tmp_path):
        monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path / "env"))
        assert cli.resolve_out_dir(None) == tmp_path / "env"
        assert cli.resolve_out_dir(str(tmp_path / "flag")) == tmp_path / "flag"
        monkeypatch.delenv(cli.OUT_DIR_ENV)
        assert str(cli.resolve_out_dir(None)) == cli.DEFAULT_OUT_DIR


class TestUsageErrors:

    def test_unknown_command(self, tracker):
        assert cli.run(['fly']) == cli.EXIT_USAGE

    def test_missing_spec_flag(self, tracker, tmp_path):
        assert cli.run(['simulate', '--out', str(tmp_path)]) == cli.EXIT_USAGE

    def test_missing_spec_file(self, tracker, tmp_path):
        code = cli.run(['oracle', '--spec', str(tmp_path / "absent.json"), '--out', str(tmp_path)])
        assert code == cli.EXIT_USAGE

    def test_bad_truth_table(self, tracker, tmp_path):
        assert cli.run(['compile', '--table', '011', '--out', str(tmp_path)]) == cli.EXIT_USAGE

    def test_help(self, tracker):
        assert cli.run(['--help']) == cli.EXIT_OK


class TestFailures:

    def test_invalid_spec(self, tracker, spec_file, tmp_path):
        path = spec_file(build_spec(2, [(1, 0, EXCITATORY, 1.5)]))
        assert cli.run(['simulate', '--spec', str(path), '--out', str(tmp_path / "out")]) == cli.EXIT_FAILURE
        assert tracker.has_errors()
        assert "probability out of range" in tracker.get_error_summary()[0]

    def test_oracle_cap(self, tracker, spec_file, tmp_path):
        path = spec_file(chain_spec(21, horizon=1))
        assert cli.run(['oracle', '--spec', str(path), '--out', str(tmp_path / "out")]) == cli.EXIT_FAILURE
        assert tracker.get_error_count() == 1

    def test_main_exit_code(self, tracker, monkeypatch):
        monkeypatch.setattr('sys.argv', ['transnn', 'simulate'])
        with pytest.raises(SystemExit) as exc:
            cli.main()
        assert exc.value.code == cli.EXIT_USAGE


class TestCommands:

    def test_simulate_zero_spec(self, tracker, spec_file, tmp_path):
        spec = build_spec(1, [(0, 0, EXCITATORY, 0.5)], [0.0], horizon=3)
        out = tmp_path / "out"
        assert cli.run(['simulate', '--spec', str(spec_file(spec)), '--trials', '50', '--out', str(out)]) == 0
        lines = (out / "marginals.csv").read_text().splitlines()
        assert lines[0] == "step,node_1"
        assert (pd.read_csv(out / "marginals.csv", index_col='step')['node_1'] == 0).all()
        manifest = json.loads((out / "run.json").read_text())
        assert manifest['command'] == 'simulate'
        assert 'marginals.csv' in manifest['files']

    def test_certify_contracting_loop(self, tracker, spec_file, tmp_path):
        out = tmp_path / "out"
        path = spec_file(self_loop_spec(0.4, horizon=5))
        assert cli.run(['certify', '--spec', str(path), '--norm', 'inf', '--out', str(out)]) == 0
        reports = _report(out)
        assert reports['contraction-inf']['holds']
        assert reports['contraction-inf']['witness'] == pytest.approx(0.4)
        assert reports['stability']['holds']

    def test_certify_tolerances_are_separate(self, tracker, spec_file, tmp_path):
        path = spec_file(self_loop_spec(0.4, p0=0.5, horizon=5))
        out = tmp_path / "slack"
        assert cli.run(['certify', '--spec', str(path), '--tol', '0.5', '--out', str(out)]) == 0
        reports = _report(out)
        assert reports['stability']['details']['tol'] == certificates.POWER_TOL
        assert reports['upper-bound-info']['details']['tol'] == 0.5
        assert reports['upper-bound-limit']['details']['tol'] == 0.5

        out = tmp_path / "power"
        assert cli.run(['certify', '--spec', str(path), '--power-tol', '1e-6', '--out', str(out)]) == 0
        reports = _report(out)
        assert reports['stability']['details']['tol'] == 1e-6
        assert reports['upper-bound-info']['details']['tol'] == certificates.BOUND_SLACK

    def test_certify_failing_is_still_success(self, tracker, spec_file, tmp_path):
        out = tmp_path / "out"
        path = spec_file(self_loop_spec(1.5, p0=0.5, horizon=5))
        assert cli.run(['certify', '--spec', str(path), '--norm', '1', '--out', str(out)]) == 0
        reports = _report(out)
        assert not reports['contraction-1']['holds']
        assert reports['upper-bound-limit']['holds']
        assert (out / "bound_s_limit.csv").exists()

    def test_compile_then_simulate(self, tracker, tmp_path):
        compiled = tmp_path / "or"
        assert cli.run(['compile', '--table', '0111', '--out', str(compiled)]) == 0
        logic = json.loads((compiled / "logic.json").read_text())
        assert logic['table'] == "0111"
        spec = read_spec(compiled / "network.json")
        output = f"node_{logic['output']}"

        for row, expected in enumerate((0, 1, 1, 1)):
            a, b = row >> 1, row & 1
            out = tmp_path / f"row_{row}"
            code = cli.run(['simulate', '--spec', str(compiled / "network.json"), '--horizon', '4',
                            '--trials', '5', '--clamp', f"1={a},2={b}", '--out', str(out)])
            assert code == 0
            marginals = pd.read_csv(out / "marginals.csv", index_col='step')
            assert marginals.shape == (5, spec.n)
            assert marginals.loc[4, output] == expected

    def test_compare_is_reproducible(self, tracker, spec_file, rng, tmp_path):
        path = str(spec_file(random_spec(rng, 3, max_rate=1.0, horizon=4)))
        first, second = tmp_path / "first", tmp_path / "second"
        for out in (first, second):
            assert cli.run(['compare', '--spec', path, '--seed', '7', '--trials', '200',
                            '--counts', '16,32', '--out', str(out)]) == 0
        names = sorted(p.name for p in first.iterdir())
        assert names == sorted(p.name for p in second.iterdir())
        assert 'meanfield_vs_limit.csv' in names
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_csv_and_json_agree(self, tracker, spec_file, rng, tmp_path):
        path = str(spec_file(random_spec(rng, 3, horizon=3)))
        assert cli.run(['meanfield', '--spec', path, '--mode', 'info', '--out', str(tmp_path / "csv")]) == 0
        assert cli.run(['meanfield', '--spec', path, '--mode', 'info', '--format', 'json',
                        '--out', str(tmp_path / "json")]) == 0
        for name in ('s', 'o', 'meanfield'):
            frame = pd.read_csv(tmp_path / "csv" / f"{name}.csv", index_col='step')
            document = json.loads((tmp_path / "json" / f"{name}.json").read_text())
            assert list(frame.columns) == document['columns']
            np.testing.assert_allclose(frame.values, np.array(document["data"], dtype=float))

    def test_out_dir_from_environment(self, tracker, spec_file, monkeypatch, tmp_path):
        monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path / "env_out"))
        path = spec_file(chain_spec(3, horizon=2))
        assert cli.run(['limit', '--spec', str(path)]) == 0
        assert (tmp_path / "env_out" / "limit.csv").exists()
