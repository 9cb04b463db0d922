# -*- coding: utf-8 -*-

"""
Command line interface: ``gtbench <train|eval|encode|inspect|sweep>``
"""

import os
import sys
import json
import logging
import logging.config
import argparse

import numpy as np

import gtbench
from gtbench import graphkit
from gtbench import pe
from gtbench import at
from gtbench import config
from gtbench import results
from gtbench import runner
from gtbench import tasks
from gtbench.exceptions import ConfigError
from gtbench.exceptions import GraphParseError
from gtbench.exceptions import GraphTransformerError
from gtbench.exceptions import NumericError

LOGGER = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)-15s %(levelname)s %(relativeCreated)dms ' \
             '%(filename)s::%(funcName)s():%(lineno)d %(message)s'

SUCCESS_EXIT = 0
CONFIG_ERROR_EXIT = 2
NUMERIC_ERROR_EXIT = 3

TRAIN_CMD = 'train'
EVAL_CMD = 'eval'
ENCODE_CMD = 'encode'
INSPECT_CMD = 'inspect'
SWEEP_CMD = 'sweep'


class Formatter(argparse.ArgumentDefaultsHelpFormatter,
                argparse.RawDescriptionHelpFormatter):
    pass


def _parse_arguments(desc, args):
    """
    Parses command line arguments

    :param desc: description to display on command line
    :param args: command line arguments usually :py:func:`sys.argv[1:]`
    :return: arguments parsed by :py:mod:`argparse`
    :rtype: :py:class:`argparse.Namespace`
    """
    parser = argparse.ArgumentParser(description=desc,
                                     formatter_class=Formatter)
    parser.add_argument('--logconf', default=None,
                        help='Path to python logging configuration file '
                             'in logging.config.fileConfig format. If set '
                             '-v is ignored')
    parser.add_argument('--verbose', '-v', action='count', default=0,
                        help='Increases verbosity of logger to standard '
                             'error for log messages in this module. '
                             'Messages are output at these python logging '
                             'levels -v = WARNING, -vv = INFO, '
                             '-vvv = DEBUG')
    parser.add_argument('--progress', action='store_true',
                        help='Show progress bars')
    parser.add_argument('--version', action='version',
                        version=('%(prog)s ' + gtbench.__version__))
    subparsers = parser.add_subparsers(dest='command', required=True)

    train = subparsers.add_parser(TRAIN_CMD, formatter_class=Formatter,
                                  help='Trains one configuration')
    train.add_argument('--config', required=True,
                       help='JSON experiment config')
    train.add_argument('--out', required=True,
                       help='Output directory for ' +
                            results.RESULTS_FILE + ', ' +
                            results.MANIFEST_FILE + ' and ' +
                            results.PARAMS_FILE)

    evaluate = subparsers.add_parser(EVAL_CMD, formatter_class=Formatter,
                                     help='Evaluates a trained checkpoint')
    evaluate.add_argument('--checkpoint', required=True,
                          help='Output directory of a train run')
    evaluate.add_argument('--split', default=tasks.TEST,
                          choices=tasks.SPLITS, help='Split to score')

    encode = subparsers.add_parser(ENCODE_CMD, formatter_class=Formatter,
                                   help='Prints positional encodings')
    encode.add_argument('--graph', required=True, help='Graph file')
    encode.add_argument('--format', default=graphkit.JSON_FORMAT,
                        choices=(graphkit.JSON_FORMAT, graphkit.CX2_FORMAT),
                        help='Format of graph file')
    encode.add_argument('--pe', required=True, choices=pe.PE_KINDS,
                        help='Encoding')
    encode.add_argument('--size', type=int, default=pe.DEFAULT_PE_SIZE,
                        help='Eigenvector count or SVD rank')

    inspect = subparsers.add_parser(INSPECT_CMD, formatter_class=Formatter,
                                    help='Prints attention structure. spb '
                                         'prints the shortest path '
                                         'distances indexing its bias '
                                         'table')
    inspect.add_argument('--graph', required=True, help='Graph file')
    inspect.add_argument('--format', default=graphkit.JSON_FORMAT,
                         choices=(graphkit.JSON_FORMAT,
                                  graphkit.CX2_FORMAT),
                         help='Format of graph file')
    inspect.add_argument('--at', required=True,
                         choices=(at.MASK_1, at.MASK_N, at.SPATIAL_BIAS,
                                  at.PMA, at.KERNEL),
                         help='Attention modification')
    inspect.add_argument('--heads', type=int, default=2,
                         help='Head count for mask-n')
    inspect.add_argument('--hops', type=int, default=at.DEFAULT_HOPS,
                         help='Hop count for mask-n')
    inspect.add_argument('--views', type=int, default=at.DEFAULT_VIEWS,
                         help='View count for pma')
    inspect.add_argument('--kernel', default=at.DEFAULT_KERNEL[0],
                         choices=(graphkit.DIFFUSION_KERNEL,
                                  graphkit.P_STEP_RW_KERNEL),
                         help='Graph kernel for kernel')
    inspect.add_argument('--kernel-param', type=float, default=None,
                         help='Diffusion beta or random walk step count. '
                              'Defaults to ' + str(at.DEFAULT_KERNEL[1]) +
                              ' for diffusion and ' +
                              str(at.DEFAULT_P_STEPS) + ' for p-step-rw')

    sweep = subparsers.add_parser(SWEEP_CMD, formatter_class=Formatter,
                                  help='Runs a grid of configurations')
    sweep.add_argument('--grid', required=True, help='JSON sweep grid')
    sweep.add_argument('--out', required=True, help='Output directory')
    sweep.add_argument('--numworkers', type=int, default=1,
                       help='Number of experiments run in parallel')
    return parser.parse_args(args)


def _setup_logging(args):
    """
    Sets up logging based on parsed command line arguments.
    If args.logconf is set use that configuration otherwise look
    at args.verbose and set logging for this module

    :param args: parsed command line arguments from argparse
    :raises AttributeError: If args is None or args.logconf is None
    :return: None
    """
    if args.logconf is None:
        level = (50 - (10 * args.verbose))
        logging.basicConfig(format=LOG_FORMAT, level=logging.ERROR)
        logging.getLogger('gtbench').setLevel(level)
        return
    logging.config.fileConfig(args.logconf,
                              disable_existing_loggers=False)


def _to_json(value):
    return np.asarray(value).tolist()


def _encode(args):
    graphs = graphkit.load_graph(args.graph, format_tag=args.format)
    out = []
    for index, graph in enumerate(graphs):
        entry = {'graph': index}
        if args.pe == pe.DEGREE_PE:
            indeg, outdeg = graphkit.degrees(graph)
            entry['in_degree'] = _to_json(indeg)
            entry['out_degree'] = _to_json(outdeg)
        elif args.pe == pe.LAPLACIAN_PE:
            entry['encoding'] = _to_json(pe.laplacian_pe(graph, args.size))
        else:
            entry['encoding'] = _to_json(pe.svd_pe(graph, args.size))
        out.append(entry)
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write('\n')
    return SUCCESS_EXIT


def _kernel_param(args):
    if args.kernel_param is None:
        if args.kernel == graphkit.P_STEP_RW_KERNEL:
            return at.DEFAULT_P_STEPS
        return at.DEFAULT_KERNEL[1]
    return args.kernel_param


def _inspect(args):
    """
    Dumps the structural arrays a modifier is built from. Masks, PMA
    views and kernels are dumped as built; spb dumps the shortest path
    distances that index its learned bias table
    """
    p = at.ATParams(args.at, args.heads, n_hops=args.hops, views=args.views,
                    kernel_kind=args.kernel,
                    kernel_param=_kernel_param(args))
    graphs = graphkit.load_graph(args.graph, format_tag=args.format)
    out = []
    for index, graph in enumerate(graphs):
        sc = graphkit.StructCache(graph)
        _, pair = at.structure_arrays(graph, sc, p)
        entry = {'graph': index, 'at': args.at}
        if args.at == at.MASK_1:
            entry['mask'] = _to_json(pair['keep'][:, :, 0])
        elif args.at == at.MASK_N:
            entry['mask'] = _to_json(np.moveaxis(pair['keep'], -1, 0))
        elif args.at == at.SPATIAL_BIAS:
            entry['spd'] = _to_json(sc.get_spd())
        elif args.at == at.PMA:
            entry['views'] = _to_json(np.moveaxis(pair['views'], -1, 0))
        else:
            entry['kernel'] = _to_json(pair['kernel'][:, :, 0])
            entry['kernel_kind'] = p.kernel_kind
            entry['kernel_param'] = p.kernel_param
        out.append(entry)
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write('\n')
    return SUCCESS_EXIT


def _train(args):
    cfg = config.load_config(args.config)
    runner.run_experiment(cfg, out_dir=args.out,
                          disable_tqdm=not args.progress)
    print(os.path.join(args.out, results.RESULTS_FILE))
    return SUCCESS_EXIT


def _eval(args):
    cfg, value = runner.evaluate_checkpoint(args.checkpoint,
                                            split=args.split)
    print(args.split + ' ' + cfg.get_task_spec().metric + ' ' +
          results.format_value(value))
    return SUCCESS_EXIT


def _sweep(args):
    configs = config.load_grid(args.grid)
    sweeper = runner.SweepRunner(configs, args.out,
                                 numworkers=args.numworkers,
                                 disable_tqdm=not args.progress)
    sweeper.run()
    print(os.path.join(args.out, runner.TABLE_FILE))
    return SUCCESS_EXIT


COMMANDS = {TRAIN_CMD: _train,
            EVAL_CMD: _eval,
            ENCODE_CMD: _encode,
            INSPECT_CMD: _inspect,
            SWEEP_CMD: _sweep}


def main(args=None):
    """
    Main entry point for program

    :param args: command line arguments, defaults to
                 :py:func:`sys.argv[1:]`
    :return: exit code, 0 on success, 2 on configuration or input
             errors and 3 on numeric failures
    :rtype: int
    """
    desc = """
    Version {version}

    Trains and evaluates graph Transformer variants on synthetic graph
    tasks and prints positional encodings or attention structure of
    graph files.

    Exit codes: 0 success, 2 configuration or input error, 3 numeric
    failure
    """.format(version=gtbench.__version__)
    if args is None:
        args = sys.argv[1:]
    theargs = _parse_arguments(desc, args)
    theargs.program = 'gtbench'
    theargs.version = gtbench.__version__

    try:
        _setup_logging(theargs)
        return COMMANDS[theargs.command](theargs)
    except NumericError as e:
        LOGGER.exception('Numeric failure')
        sys.stderr.write('Numeric error: ' + str(e) + '\n')
        return NUMERIC_ERROR_EXIT
    except (ConfigError, GraphParseError) as e:
        sys.stderr.write('Configuration error: ' + str(e) + '\n')
        return CONFIG_ERROR_EXIT
    except GraphTransformerError as e:
        sys.stderr.write('Invalid input: ' + str(e) + '\n')
        return CONFIG_ERROR_EXIT
    finally:
        logging.shutdown()


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main(sys.argv[1:]))
