"""
Command-line entry point.

Every command prints one JSON certificate on stdout (or into `--out`);
diagnostics go to stderr. Exit codes: 0 computed, 1 verification failed,
2 invalid input, 3 size cap or search budget exceeded.

Usage:
    python cli.py graph delta-eq k2.json k3.json
    python cli.py toeplitz --n 3 | python cli.py sys rigid -
"""

import logging_config
import config
from matcore import (Tolerance, MatSubspace, OperatorSystem, subspace_from_json, system_from_json,
                     subspace_to_json, cmatrix_to_json)
from cstar import (generated_algebra, block_decompose, multiplier_algebra, is_rigid,
                   irreducibility_probe)
from ncgraph import (Graph, parse_graph, graph_system, twin_quotient, twin_classes,
                     decide_delta_graphs, PullbackWitness, synthesize_graph_tro, witness_bundle,
                     graph_env_embedding, Embedding, brute_force_common_pullback)
from tro import (KrausFamily, ContextBundle, VerificationReport, conjugation_context,
                 tensor_context, verify_tro_equivalence, verify_cohomomorphism,
                 verify_delta_context, verify_bihom_context)
from morita import (Representation, identity_representation, random_representation, induce_rep,
                    roundtrip_unitary)
from funcsys import centre_system, toeplitz_system, rigid_stable_structure
from utils import (InputError, PreconditionError, VerificationFailedError, LimitExceededError,
                   canonical_json, digest)

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
import json
import logging
import sys

import click
import pandas as pd

logger = logging_config.get_local_logger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3
MULTIPLIER_ASSUMPTION = 'multipliers computed inside C*(S), taken as the C*-envelope'


#region certificates
@dataclass
class Certificate:
    """
    Machine-checkable output of one command.

    Everything except `timestamp` is reproduced byte-for-byte by re-running
    the command on the same inputs with the same seed.
    """
    command: str
    inputs_digest: str
    verdict: str
    witness: dict
    residuals: dict
    tolerance: float
    seed: int
    version: str = config.TOOL_VERSION
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class Result:
    code: int
    certificate: Certificate | None
    out: str | None = None


@dataclass
class Settings:
    tol: Tolerance
    level_cap: int
    out: str | None
    capture: bool = False


def _certify(command: str, inputs: list[str], verdict: str, witness: dict,
             residuals: dict | None = None, code: int = EXIT_OK) -> Result:
    ctx = click.get_current_context()
    settings: Settings = ctx.obj
    cert = Certificate(command, digest({'command': command, 'inputs': inputs}), verdict, witness,
                       residuals or {}, settings.tol.eps, settings.tol.seed)
    return Result(code, cert, settings.out)


def _report_result(command: str, inputs: list[str], report: VerificationReport,
                   witness: dict | None = None) -> Result:
    """Certificate of a verification report; exit 1 when an axiom fails."""
    residuals = {e.axiom: e.residual for e in report.entries}
    if not report.passed:
        logger.warning(f'{command}: failing axioms {report.failures()}.')
        logger.debug('\n' + report.to_frame().to_string())
    return _certify(command, inputs, 'pass' if report.passed else 'fail',
                    {**(witness or {}), 'report': report.to_json()}, residuals,
                    EXIT_OK if report.passed else EXIT_FAILED)
#endregion


#region input loading
def _read(stream) -> str:
    return stream.read()


def _load_json(text: str, what: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        message = f'Invalid {what} JSON: {e}.'
        logger.error(message)
        raise InputError(message)
    if not isinstance(data, dict):
        message = f'{what} JSON must be an object.'
        logger.error(message)
        raise InputError(message)
    return data


def _unwrap(data: dict, *keys: str) -> dict:
    """Takes the first of `keys` out of a certificate's witness; plain payloads pass through."""
    witness = data.get('witness')
    if isinstance(witness, dict) and 'command' in data:
        for key in keys:
            if key in witness:
                return witness[key]
        message = f'Certificate of "{data["command"]}" carries none of {list(keys)}.'
        logger.error(message)
        raise InputError(message)
    return data


def _load_system(text: str, tol: Tolerance, *keys: str) -> OperatorSystem:
    """Operator system from subspace JSON, graph JSON, edge list or a certificate."""
    if not text.lstrip().startswith('{'):
        return graph_system(parse_graph(text), tol)
    data = _unwrap(_load_json(text, 'system'), *keys, 'system')
    if 'vertices' in data:
        return graph_system(Graph.from_json(data), tol)
    return system_from_json(data, tol)


def _load_space(text: str, tol: Tolerance, *keys: str) -> MatSubspace:
    return subspace_from_json(_unwrap(_load_json(text, 'space'), *keys, 'tro'), tol)


def _load_bundle(text: str, settings: Settings) -> ContextBundle:
    """Context bundle JSON, or the conjugation context of a tro-witness certificate."""
    data = _load_json(text, 'context bundle')
    witness = data.get('witness')
    if isinstance(witness, dict) and 'tro' in witness:
        tol = settings.tol
        return conjugation_context(system_from_json(witness['s'], tol),
                                   system_from_json(witness['t'], tol),
                                   subspace_from_json(witness['tro'], tol), settings.level_cap)
    bundle = ContextBundle.from_json(data, settings.tol)
    bundle.level_cap = settings.level_cap
    return bundle
#endregion


#region root group
# passed as `obj` by `execute` so the certificate is returned instead of written
CAPTURE = object()


class CertifyingGroup(click.Group):
    """Group mapping domain errors of its subcommands to exit codes."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except click.FileError as e:
            e.show()
            ctx.exit(EXIT_INPUT)
        except (InputError, PreconditionError) as e:
            click.echo(f'Error: {e}', err=True)
            ctx.exit(EXIT_INPUT)
        except VerificationFailedError as e:
            click.echo(f'Verification failed: {e}', err=True)
            ctx.exit(EXIT_FAILED)
        except LimitExceededError as e:
            click.echo(f'Limit exceeded: {e}', err=True)
            ctx.exit(EXIT_LIMIT)


@click.group(cls=CertifyingGroup, invoke_without_command=True)
@click.option('--tol', type=float, default=config.DEFAULT_EPS, show_default=True,
              help='Relative rank threshold.')
@click.option('--seed', type=int, default=config.DEFAULT_SEED, show_default=True,
              help='Seed of every randomized check.')
@click.option('--level-cap', type=int, default=config.DEFAULT_LEVEL_CAP, show_default=True,
              help='Highest matrix level of sampled positivity checks.')
@click.option('--out', type=click.Path(dir_okay=False), default=None,
              help='Write the certificate here instead of stdout.')
@click.option('--batch', type=click.File('r'), default=None,
              help='JSON list of argument lists to run in parallel.')
@click.option('-v', '--verbose', is_flag=True, help='Debug diagnostics on stderr.')
@click.pass_context
def cli(ctx: click.Context, tol: float, seed: int, level_cap: int, out: str | None,
        batch, verbose: bool):
    """Decides and verifies Δ- and TRO-equivalence of operator systems."""
    if verbose:
        logging_config.set_verbosity(logging.DEBUG)
    if level_cap < 1:
        raise click.BadParameter('must be positive', param_hint='--level-cap')
    ctx.obj = Settings(Tolerance(tol, seed), level_cap, out, capture=ctx.obj is CAPTURE)
    if ctx.invoked_subcommand is not None:
        return None
    if batch is None:
        click.echo(ctx.get_help(), err=True)
        return EXIT_OK
    try:
        jobs = json.load(batch)
    except json.JSONDecodeError as e:
        message = f'Invalid batch manifest: {e}.'
        logger.error(message)
        raise InputError(message)
    return run_batch(jobs, out)


@cli.result_callback()
@click.pass_context
def emit(ctx: click.Context, result: 'Result | int | None', **_):
    """Writes the certificate of a subcommand and exits with its code."""
    settings: Settings = ctx.obj
    if isinstance(result, Result):
        if settings.capture:
            return result
        _write(canonical_json(result.certificate.to_json()), result.out)
        ctx.exit(result.code)
    ctx.exit(result or EXIT_OK)


def run_batch(jobs: list[list[str]], out: str | None = None) -> int:
    """
    Runs independent invocations in a thread pool.

    Certificates are printed as one JSON list in manifest order; a summary
    table goes to stderr.

    Returns:
        The largest exit code of the jobs.
    """
    if not isinstance(jobs, list) or not all(isinstance(j, list) for j in jobs):
        message = 'Batch manifest must be a list of argument lists.'
        logger.error(message)
        raise InputError(message)
    with ThreadPoolExecutor() as pool:
        results = list(pool.map(lambda argv: execute([str(a) for a in argv]), jobs))

    summary = pd.DataFrame({
        'argv': [' '.join(map(str, argv)) for argv in jobs],
        'exit': [r.code for r in results],
        'verdict': [r.certificate.verdict if r.certificate else '' for r in results],
    })
    click.echo(summary.to_string(), err=True)
    _write(canonical_json([r.certificate.to_json() if r.certificate else None for r in results]),
           out)
    return max((r.code for r in results), default=EXIT_OK)
#endregion


#region graph
@cli.group()
def graph():
    """Graph operator systems."""


@graph.command('quotient')
@click.argument('g', type=click.File('r'))
def graph_quotient(g):
    """Twin quotient of a graph."""
    text = _read(g)
    parsed = parse_graph(text)
    q, f = twin_quotient(parsed)
    return _certify('graph quotient', [text], 'quotient',
                    {'quotient': q.to_json(), 'map': f.to_json(),
                     'classes': twin_classes(parsed)})


@graph.command('delta-eq')
@click.argument('g', type=click.File('r'))
@click.argument('h', type=click.File('r'))
def graph_delta_eq(g, h):
    """Decides whether S_G and S_H are Δ-equivalent."""
    texts = [_read(g), _read(h)]
    verdict = decide_delta_graphs(parse_graph(texts[0]), parse_graph(texts[1]))
    equivalent = isinstance(verdict, PullbackWitness)
    return _certify('graph delta-eq', texts, 'equivalent' if equivalent else 'not_equivalent',
                    verdict.to_json())


@graph.command('tro-witness')
@click.argument('g', type=click.File('r'))
@click.argument('h', type=click.File('r'))
def graph_tro_witness(g, h):
    """Builds and verifies the pattern TRO of an equivalence."""
    settings: Settings = click.get_current_context().obj
    texts = [_read(g), _read(h)]
    gg, hh = parse_graph(texts[0]), parse_graph(texts[1])
    verdict = decide_delta_graphs(gg, hh)
    if not isinstance(verdict, PullbackWitness):
        return _certify('graph tro-witness', texts, 'not_equivalent', verdict.to_json())
    m = synthesize_graph_tro(verdict, settings.tol)
    s, t = graph_system(gg, settings.tol), graph_system(hh, settings.tol)
    report = verify_tro_equivalence(s, t, m)
    bundle = {**witness_bundle(verdict, m), 's': subspace_to_json(s), 't': subspace_to_json(t)}
    return _report_result('graph tro-witness', texts, report, bundle)


@graph.command('embed-env')
@click.argument('g', type=click.File('r'))
@click.argument('h', type=click.File('r'))
def graph_embed_env(g, h):
    """Finds components of H whose union is Δ-equivalent to G."""
    texts = [_read(g), _read(h)]
    verdict = graph_env_embedding(parse_graph(texts[0]), parse_graph(texts[1]))
    found = isinstance(verdict, Embedding)
    return _certify('graph embed-env', texts, 'embeddable' if found else 'not_embeddable',
                    verdict.to_json())


@graph.command('oracle')
@click.argument('g', type=click.File('r'))
@click.argument('h', type=click.File('r'))
@click.option('--max-target', type=int, default=5, show_default=True)
def graph_oracle(g, h, max_target: int):
    """Compares the decision with the brute-force pullback oracle."""
    texts = [_read(g), _read(h)]
    gg, hh = parse_graph(texts[0]), parse_graph(texts[1])
    decided = isinstance(decide_delta_graphs(gg, hh), PullbackWitness)
    oracle = brute_force_common_pullback(gg, hh, max_target)
    agree = decided == oracle
    return _certify('graph oracle', texts, 'agree' if agree else 'disagree',
                    {'decision': decided, 'oracle': oracle, 'max_target': max_target},
                    code=EXIT_OK if agree else EXIT_FAILED)
#endregion


#region sys
@cli.group('sys')
def sys_group():
    """Operator systems."""


@sys_group.command('algebra')
@click.argument('s', type=click.File('r'))
def sys_algebra(s):
    """C*(S) and its block decomposition."""
    settings: Settings = click.get_current_context().obj
    text = _read(s)
    alg = generated_algebra(_load_system(text, settings.tol))
    bd = block_decompose(alg)
    return _certify('sys algebra', [text], 'algebra',
                    {'dim': alg.dim, 'basis': subspace_to_json(alg), **bd.to_json()},
                    {'block': bd.residual})


@sys_group.command('multiplier')
@click.argument('s', type=click.File('r'))
def sys_multiplier(s):
    """Multiplier algebra A_S."""
    settings: Settings = click.get_current_context().obj
    text = _read(s)
    alg = multiplier_algebra(_load_system(text, settings.tol))
    bd = block_decompose(alg)
    return _certify('sys multiplier', [text], 'multiplier',
                    {'dim': alg.dim, 'basis': subspace_to_json(alg), **bd.to_json(),
                     'assumption': MULTIPLIER_ASSUMPTION},
                    {'block': bd.residual})


@sys_group.command('center')
@click.argument('s', type=click.File('r'))
def sys_center(s):
    """Centre Z(S) = S ∩ C*(S)'."""
    settings: Settings = click.get_current_context().obj
    text = _read(s)
    cert = centre_system(_load_system(text, settings.tol))
    return _certify('sys center', [text], 'center', cert.to_json(),
                    {'commutator': cert.residual})


@sys_group.command('rigid')
@click.argument('s', type=click.File('r'))
@click.option('--target', type=click.File('r'), default=None,
              help='System T equivalent to S; with --tro, realizes T as M_k(S).')
@click.option('--tro', 'tro_file', type=click.File('r'), default=None)
def sys_rigid(s, target, tro_file):
    """Whether A_S = C I."""
    settings: Settings = click.get_current_context().obj
    text = _read(s)
    system = _load_system(text, settings.tol)
    rigid = is_rigid(system)
    witness = {'rigid': rigid, 'multiplier_dim': multiplier_algebra(system).dim,
               'assumption': MULTIPLIER_ASSUMPTION}
    if (target is None) != (tro_file is None):
        raise click.UsageError('--target and --tro go together.')
    if target is None:
        return _certify('sys rigid', [text], 'rigid' if rigid else 'not_rigid', witness)

    texts = [text, _read(target), _read(tro_file)]
    structure = rigid_stable_structure(system, _load_system(texts[1], settings.tol, 't'),
                                       _load_space(texts[2], settings.tol))
    return _certify('sys rigid', texts, 'stable', {**witness, 'structure': structure.to_json()},
                    {'structure': structure.residual})


@sys_group.command('irreducible')
@click.argument('s', type=click.File('r'))
def sys_irreducible(s):
    """Probes whether S acts irreducibly."""
    settings: Settings = click.get_current_context().obj
    text = _read(s)
    verdict = irreducibility_probe(_load_system(text, settings.tol), settings.level_cap)
    return _certify('sys irreducible', [text], verdict.kind, verdict.to_json())
#endregion


#region verify
@cli.group()
def verify():
    """Verification of equivalences, cohomomorphisms and contexts."""


@verify.command('tro-eq')
@click.argument('files', type=click.File('r'), nargs=-1, required=True)
def verify_tro_eq(files):
    """
    Checks (S, T, M); FILES is either S T M or one tro-witness certificate.
    """
    settings: Settings = click.get_current_context().obj
    texts = [_read(f) for f in files]
    if len(texts) == 1:
        s = _load_system(texts[0], settings.tol, 's')
        t = _load_system(texts[0], settings.tol, 't')
        m = _load_space(texts[0], settings.tol, 'tro')
    elif len(texts) == 3:
        s = _load_system(texts[0], settings.tol, 's')
        t = _load_system(texts[1], settings.tol, 't')
        m = _load_space(texts[2], settings.tol, 'tro')
    else:
        raise click.UsageError('Give S T M or a single tro-witness certificate.')
    return _report_result('verify tro-eq', texts, verify_tro_equivalence(s, t, m))


@verify.command('cohom')
@click.argument('kraus', type=click.File('r'))
@click.argument('t', type=click.File('r'))
@click.argument('s', type=click.File('r'))
def verify_cohom(kraus, t, s):
    """Checks that the Kraus family maps T into S unitally."""
    settings: Settings = click.get_current_context().obj
    texts = [_read(kraus), _read(t), _read(s)]
    family = KrausFamily.from_json(_load_json(texts[0], 'Kraus family'))
    report = verify_cohomomorphism(family, _load_system(texts[1], settings.tol, 't'),
                                   _load_system(texts[2], settings.tol, 's'))
    return _report_result('verify cohom', texts, report)


@verify.command('delta-context')
@click.argument('bundle', type=click.File('r'))
@click.option('--tabulate', is_flag=True, help='Verify the tensor form of both maps.')
def verify_delta(bundle, tabulate: bool):
    """Checks the Δ-context axioms of a bundle."""
    settings: Settings = click.get_current_context().obj
    text = _read(bundle)
    ctx = _load_bundle(text, settings)
    if tabulate:
        ctx = tensor_context(ctx)
    return _report_result('verify delta-context', [text], verify_delta_context(ctx))


@verify.command('bihom-context')
@click.argument('bundle', type=click.File('r'))
@click.option('--tabulate', is_flag=True, help='Verify the tensor form of both maps.')
def verify_bihom(bundle, tabulate: bool):
    """Checks the bihomomorphism-context axioms of a bundle."""
    settings: Settings = click.get_current_context().obj
    text = _read(bundle)
    ctx = _load_bundle(text, settings)
    if tabulate:
        ctx = tensor_context(ctx)
    return _report_result('verify bihom-context', [text], verify_bihom_context(ctx))
#endregion


#region induction
def _representation(text: str | None, s: OperatorSystem, copies: int | None,
                     settings: Settings) -> Representation:
    if text is not None:
        return Representation.from_json(_load_json(text, 'representation'), settings.tol)
    if copies is not None:
        return random_representation(s, settings.tol.seed, copies)
    return identity_representation(s)


@cli.command()
@click.argument('m', type=click.File('r'))
@click.argument('s', type=click.File('r'))
@click.option('--rep', type=click.File('r'), default=None,
              help='Representation of S; the identity when omitted.')
@click.option('--random-copies', type=int, default=None,
              help='Use a random unitary conjugate of S ⊗ I_k instead.')
def induce(m, s, rep, random_copies):
    """Induces a representation of S through M to T = [M S M*]."""
    settings: Settings = click.get_current_context().obj
    texts = [_read(m), _read(s)] + ([_read(rep)] if rep else [])
    carrier = _load_space(texts[0], settings.tol)
    system = _load_system(texts[1], settings.tol, 's')
    phi = _representation(texts[2] if rep else None, system, random_copies, settings)
    induced = induce_rep(carrier, phi)
    report = induced.validate()
    return _certify('induce', texts, 'induced',
                    {'representation': induced.to_json(), 'gram': induced.gram.to_json()},
                    {e.axiom: e.residual for e in report.entries}
                    | {'descent': induced.gram.descent_residual})


@cli.command()
@click.argument('m', type=click.File('r'))
@click.argument('s', type=click.File('r'))
@click.option('--rep', type=click.File('r'), default=None,
              help='Representation of S; the identity when omitted.')
@click.option('--random-copies', type=int, default=None,
              help='Use a random unitary conjugate of S ⊗ I_k instead.')
def roundtrip(m, s, rep, random_copies):
    """Unitary from the double-induced representation back to the original."""
    settings: Settings = click.get_current_context().obj
    texts = [_read(m), _read(s)] + ([_read(rep)] if rep else [])
    carrier = _load_space(texts[0], settings.tol)
    system = _load_system(texts[1], settings.tol, 's')
    phi = _representation(texts[2] if rep else None, system, random_copies, settings)
    u, residual = roundtrip_unitary(carrier, phi)
    ok = residual <= settings.tol.small(1.0) * 10
    return _certify('roundtrip', texts, 'unitary' if ok else 'fail',
                    {'unitary': cmatrix_to_json(u)}, {'roundtrip': residual},
                    EXIT_OK if ok else EXIT_FAILED)


@cli.command()
@click.option('--n', type=int, required=True, help='Size of the Toeplitz matrices.')
def toeplitz(n: int):
    """The Toeplitz system span{S^j : |j| < n} in M_n."""
    settings: Settings = click.get_current_context().obj
    system = toeplitz_system(n, settings.tol)
    return _certify('toeplitz', [str(n)], 'toeplitz',
                    {'system': subspace_to_json(system), 'dim': system.dim,
                     'rigid': is_rigid(system)})
#endregion


#region running
def _write(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text)
    else:
        with open(out, 'w', encoding='utf-8') as f:
            f.write(text + '\n')


def _main(argv: list[str], **extra) -> 'Result | int':
    try:
        return cli.main(args=argv, prog_name='ncmorita', standalone_mode=False, **extra)
    except click.ClickException as e:
        e.show()
        return EXIT_INPUT
    except click.Abort:
        return EXIT_INPUT


def execute(argv: list[str]) -> Result:
    """
    Runs one invocation and returns its certificate instead of writing it.

    The certificate is None when the invocation ended in an error.
    """
    rv = _main(argv, obj=CAPTURE)
    if isinstance(rv, Result):
        return rv
    return Result(rv or EXIT_OK, None)


def run(argv: list[str] | None = None) -> int:
    """
    Runs the CLI and writes the certificate.

    Args:
        argv: arguments without the program name; `sys.argv[1:]` when None

    Returns:
        Exit code.
    """
    rv = _main(sys.argv[1:] if argv is None else list(argv))
    return rv.code if isinstance(rv, Result) else (rv or EXIT_OK)
#endregion


if __name__ == '__main__':
    sys.exit(run())
