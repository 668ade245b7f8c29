"""
Command line: python -m floquet {run,compare,spectrum,validate}.

Exit codes: 0 on success, 1 when a configuration or comparison does not
validate, 2 when a run fails at runtime.
"""
import argparse
import json
import logging
import sys

from floquet.errors import BackendGraphMismatch, CapExceeded, ConfigError, \
        FloquetError, GridMismatch, InvalidGraph, PatternError
from floquet.harness import compare, load_config, prepare, run, \
        spectrum_of_csv
from floquet.analysis import N_MAX, classify, peaks_text

logger = logging.getLogger('floquet')

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2

_VALIDATION_ERRORS = (ConfigError, BackendGraphMismatch, CapExceeded,
                      InvalidGraph, PatternError, GridMismatch)


def _run(args):
    config = load_config(args.config)
    root = run(config, args.output)
    manifest = json.loads((root / 'manifest.json').read_text(encoding='utf-8'))
    failed = manifest['failed']
    print(root)
    return EXIT_FAILED if failed else EXIT_OK


def _validate(args):
    config = load_config(args.config)
    graph, pattern, measure = prepare(config)
    print('{}: {} grid points, graph {} ({} qubits, {} edges, {} layers), '
          'measure set of {}'.format(
              config.name, len(config.grid()), graph.name, graph.num_qubits,
              len(graph.edges), len(graph.layers), len(measure)))
    return EXIT_OK


def _compare(args):
    report = compare(args.run_a, args.run_b, args.tol)
    sys.stdout.write(report.text())
    return EXIT_OK if report.passed else EXIT_INVALID


def _spectrum(args):
    spec, peaks = spectrum_of_csv(args.series, args.n_max, args.column)
    if args.output:
        spec.to_frame().to_csv(args.output, index=False, lineterminator='\n')
    sys.stdout.write(peaks_text(peaks))
    print('classification {}'.format(classify(peaks, args.n_max)))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog='floquet', description='Floquet kicked-Ising simulator.')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='log at DEBUG level')
    commands = parser.add_subparsers(dest='command', required=True)

    command = commands.add_parser('run', help='run a configuration')
    command.add_argument('config')
    command.add_argument('-o', '--output', default=None,
                         help='run directory (overrides the config)')
    command.set_defaults(handler=_run)

    command = commands.add_parser('validate', help='check a configuration')
    command.add_argument('config')
    command.set_defaults(handler=_validate)

    command = commands.add_parser('compare', help='compare two run directories')
    command.add_argument('run_a')
    command.add_argument('run_b')
    command.add_argument('--tol', type=float, default=1e-8)
    command.set_defaults(handler=_compare)

    command = commands.add_parser('spectrum', help='spectrum of a series file')
    command.add_argument('series')
    command.add_argument('--n-max', type=int, default=N_MAX)
    command.add_argument('--column', default='mitigated')
    command.add_argument('-o', '--output', default=None,
                         help='write the spectrum CSV here')
    command.set_defaults(handler=_spectrum)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    try:
        return args.handler(args)
    except _VALIDATION_ERRORS as err:
        logger.error('%s: %s', type(err).__name__, err)
        return EXIT_INVALID
    except (FloquetError, OSError) as err:
        logger.error('%s: %s', type(err).__name__, err)
        return EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
