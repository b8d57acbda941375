import json

from click.testing import CliRunner
import pytest

from cli import cli, execute, EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_LIMIT
from matcore import orthonormal_basis, scalars, matrix_unit, subspace_to_json
from utils import canonical_json


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


@pytest.fixture
def files(tmp_path):
    """Writes named inputs and returns their paths."""
    def write(name: str, content) -> str:
        path = tmp_path / name
        path.write_text(content if isinstance(content, str) else canonical_json(content))
        return str(path)

    return {
        'k2': write('k2.txt', '2\n0 1\n'),
        'k3': write('k3.json', {'vertices': 3, 'edges': [[0, 1], [0, 2], [1, 2]]}),
        'c4': write('c4.txt', '4\n0 1\n1 2\n2 3\n3 0\n'),
        'scalars': write('scalars.json', subspace_to_json(scalars(1))),
        'column': write('column.json', subspace_to_json(
            orthonormal_basis([[[1], [0]], [[0], [1]]]))),
        'corrupted': write('corrupted.json', subspace_to_json(
            orthonormal_basis([matrix_unit(0, 0, (3, 2))]))),
        'huge': write('huge.txt', '40\n0 1\n'),
        'broken': write('broken.json', '{"vertices": '),
        'dir': str(tmp_path),
    }


def certificate(result) -> dict:
    return json.loads(result.stdout)


def test_delta_eq_of_complete_graphs(runner, files):
    result = runner.invoke(cli, ['graph', 'delta-eq', files['k2'], files['k3']])
    assert result.exit_code == EXIT_OK
    cert = certificate(result)
    assert cert['verdict'] == 'equivalent'
    assert cert['command'] == 'graph delta-eq'
    assert cert['witness']['quotient_g'] == {'vertices': 1, 'edges': []}


def test_delta_eq_of_different_graphs(runner, files):
    result = runner.invoke(cli, ['graph', 'delta-eq', files['k3'], files['c4']])
    assert result.exit_code == EXIT_OK
    assert certificate(result)['verdict'] == 'not_equivalent'


def test_tro_witness_is_accepted_by_verify(runner, files, tmp_path):
    result = runner.invoke(cli, ['graph', 'tro-witness', files['k2'], files['k3']])
    assert result.exit_code == EXIT_OK
    witness = tmp_path / 'witness.json'
    witness.write_text(result.stdout)

    verified = runner.invoke(cli, ['verify', 'tro-eq', str(witness)])
    assert verified.exit_code == EXIT_OK
    assert certificate(verified)['verdict'] == 'pass'

    context = runner.invoke(cli, ['--level-cap', '2', 'verify', 'delta-context', str(witness)])
    assert context.exit_code == EXIT_OK, context.stderr


def test_verify_rejects_corrupted_carrier(runner, files):
    result = runner.invoke(cli, ['verify', 'tro-eq', files['k2'], files['k3'], files['corrupted']])
    assert result.exit_code == EXIT_FAILED
    cert = certificate(result)
    assert cert['verdict'] == 'fail'
    assert cert['residuals']['equality_T'] > 0


def test_toeplitz_piped_into_rigidity(runner):
    made = runner.invoke(cli, ['toeplitz', '--n', '3'])
    assert made.exit_code == EXIT_OK
    assert certificate(made)['witness']['dim'] == 5

    result = runner.invoke(cli, ['sys', 'rigid', '-'], input=made.stdout)
    assert result.exit_code == EXIT_OK
    cert = certificate(result)
    assert cert['witness']['rigid'] is True
    assert cert['witness']['multiplier_dim'] == 1


def test_multiplier_of_graph_system(runner, files):
    result = runner.invoke(cli, ['sys', 'multiplier', files['k3']])
    assert result.exit_code == EXIT_OK
    assert certificate(result)['witness']['dim'] == 9


def test_induce_through_column(runner, files):
    result = runner.invoke(cli, ['induce', files['column'], files['scalars']])
    assert result.exit_code == EXIT_OK
    assert certificate(result)['witness']['representation']['dim'] == 2


def test_roundtrip_through_column(runner, files):
    result = runner.invoke(cli, ['roundtrip', files['column'], files['scalars'],
                                 '--random-copies', '2'])
    assert result.exit_code == EXIT_OK
    assert certificate(result)['verdict'] == 'unitary'


def test_oracle_agrees(runner, files):
    result = runner.invoke(cli, ['graph', 'oracle', files['k2'], files['c4'], '--max-target', '4'])
    assert result.exit_code == EXIT_OK
    assert certificate(result)['verdict'] == 'agree'


@pytest.mark.parametrize('args', [
    ['graph', 'quotient', 'missing.txt'],
    ['graph', 'quotient', '{broken}'],
    ['toeplitz', '--n', '0'],
])
def test_invalid_input_exits_with_input_code(runner, files, args):
    args = [files['broken'] if a == '{broken}' else a for a in args]
    result = runner.invoke(cli, args)
    assert result.exit_code == EXIT_INPUT
    assert result.stdout == ''


def test_vertex_cap_exits_with_limit_code(runner, files):
    result = runner.invoke(cli, ['graph', 'quotient', files['huge']])
    assert result.exit_code == EXIT_LIMIT


def test_out_option_writes_file(runner, tmp_path):
    out = tmp_path / 'cert.json'
    result = runner.invoke(cli, ['--out', str(out), 'toeplitz', '--n', '2'])
    assert result.exit_code == EXIT_OK
    assert result.stdout == ''
    assert json.loads(out.read_text())['witness']['dim'] == 3


def test_batch_runs_every_job(runner, files, tmp_path):
    manifest = tmp_path / 'jobs.json'
    manifest.write_text(json.dumps([
        ['graph', 'delta-eq', files['k2'], files['k3']],
        ['verify', 'tro-eq', files['k2'], files['k3'], files['corrupted']],
        ['toeplitz', '--n', '3'],
    ]))
    result = runner.invoke(cli, ['--batch', str(manifest)])
    assert result.exit_code == EXIT_FAILED
    certs = json.loads(result.stdout)
    assert [c['verdict'] for c in certs] == ['equivalent', 'fail', 'toeplitz']


def test_certificates_are_deterministic(files):
    args = ['--seed', '7', 'graph', 'tro-witness', files['k2'], files['k3']]
    first, second = execute(args), execute(args)
    assert first.code == second.code == EXIT_OK
    a, b = first.certificate.to_json(), second.certificate.to_json()
    a.pop('timestamp')
    b.pop('timestamp')
    assert canonical_json(a) == canonical_json(b)
    assert a['seed'] == 7


def test_execute_reports_errors_without_certificate(files):
    result = execute(['graph', 'quotient', files['broken']])
    assert result.code == EXIT_INPUT
    assert result.certificate is None
