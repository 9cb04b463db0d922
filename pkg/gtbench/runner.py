# -*- coding: utf-8 -*-

import os
import csv
import time
import logging
from collections import OrderedDict
from multiprocessing import Pool

import numpy as np
from tqdm import tqdm

from gtbench import tape
from gtbench import graphkit
from gtbench import metrics
from gtbench import optim
from gtbench import tasks
from gtbench import results
from gtbench.batching import collate
from gtbench.batching import iterate_batches
from gtbench.config import ExperimentConfig
from gtbench.model import GraphTransformer
from gtbench.model import NODE_LEVEL
from gtbench.exceptions import ConfigError
from gtbench.exceptions import GraphTransformerError
from gtbench.exceptions import NumericError
from gtbench.exceptions import UndefinedMetricError

LOGGER = logging.getLogger(__name__)

EVAL_SPLITS = (tasks.VALID, tasks.TEST)

TABLE_FILE = 'table.csv'


def _cur_time_in_ms():
    return int(round(time.time() * 1000))


def seed_streams(seed):
    """
    Independent generators for data, parameter init, neighborhood
    sampling and training noise, all derived from `seed`

    :return: ``(data, init, sample, train)`` generators
    :rtype: tuple
    """
    children = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.default_rng(c) for c in children)


def save_params(path, params):
    """
    Writes parameters to a ``.npz`` file
    """
    np.savez(path, **params)


def load_params(path):
    """
    Reads parameters written by :py:func:`save_params`

    :rtype: :py:class:`collections.OrderedDict`
    """
    with np.load(path) as data:
        return OrderedDict((name, np.array(data[name]))
                           for name in data.files)


class Runner(object):
    """
    Base class for objects that run benchmark work.

    Currently built Runners:

    :py:class:`ExperimentRunner` - Trains and evaluates one config

    :py:class:`SweepRunner` - Runs a grid of configs in a process pool
    """
    def __init__(self, disable_tqdm=True):
        """
        Constructor

        :param disable_tqdm: If ``True`` no progress bars are drawn
        :type disable_tqdm: bool
        """
        self._disable_tqdm = disable_tqdm

    def run(self):
        """
        Must be implemented by subclasses. Will always raise
        :py:class:`~gtbench.exceptions.GraphTransformerError`

        :raises GraphTransformerError: Will always raise this
        """
        raise GraphTransformerError('Not implemented for this Runner')


class ExperimentRunner(Runner):
    """
    Trains one variant on one task and evaluates it on the held out
    splits.

    The run is a pure function of the config: generated data, initial
    parameters, sampled neighborhoods and dropout noise all come from
    streams seeded by ``cfg.seed``. Data and sampling streams do not
    depend on the variant, so runs that differ only in variant see the
    same graphs

    :param cfg: run configuration
    :type cfg: :py:class:`~gtbench.config.ExperimentConfig`
    :param disable_tqdm: If ``True`` no progress bar is drawn
    :type disable_tqdm: bool
    """
    def __init__(self, cfg, disable_tqdm=True):
        """
        Constructor
        """
        super(ExperimentRunner, self).__init__(disable_tqdm=disable_tqdm)
        self._cfg = cfg
        self._task = cfg.get_task_spec()
        self._config_hash = cfg.config_hash()
        (self._data_rng, self._init_rng,
         self._sample_rng, self._train_rng) = seed_streams(cfg.seed)
        self._model = None
        self._dataset = None
        self._params = None
        self._state = None
        self._start_ms = None

    def get_config(self):
        return self._cfg

    def get_model(self):
        return self._model

    def get_params(self):
        """
        Gets current parameters, ``None`` before :py:meth:`run`

        :rtype: :py:class:`collections.OrderedDict`
        """
        return self._params

    def set_params(self, params):
        self._params = params

    def get_train_state(self):
        return self._state

    def get_dataset(self):
        """
        Gets prepared instances by split, building them on first call

        :return: split name => list of
                 :py:class:`~gtbench.batching.PreparedInstance`
        :rtype: dict
        """
        if self._dataset is None:
            self._build()
        return self._dataset

    def _scaled_target(self, value):
        task = self._task
        if task.is_regression():
            return np.atleast_1d(np.asarray(value, dtype=np.float64) /
                                 task.target_scale)
        if task.loss == metrics.CROSS_ENTROPY:
            return int(value)
        return np.atleast_1d(np.asarray(value, dtype=np.float64))

    def _build(self):
        cfg = self._cfg
        task = self._task
        graphs = tasks.gen_task(cfg.task, cfg.n_graphs, self._data_rng)
        in_dim = graphs[0].get_node_feature_dim()
        edge_dim = max(g.get_edge_feature_dim() for g in graphs)
        self._model = GraphTransformer(cfg.get_model_spec(), in_dim,
                                       task.out_dim, edge_dim=edge_dim,
                                       directed=False, level=task.level)
        dataset = {split: [] for split in tasks.SPLITS}
        index = 0
        for graph in graphs:
            if task.level == NODE_LEVEL:
                labels = graph.get_node_labels()
                for v in range(graph.get_num_nodes()):
                    sub = graphkit.shadow_khop_sample(graph, v, cfg.max_hop,
                                                      cfg.max_nbrs,
                                                      self._sample_rng)
                    inst = self._model.prepare(
                        sub.graph, target=self._scaled_target(labels[v]),
                        target_index=sub.target_index)
                    dataset[tasks.split_of(index)].append(inst)
                    index += 1
            else:
                inst = self._model.prepare(
                    graph, target=self._scaled_target(graph.get_graph_label()))
                dataset[tasks.split_of(index)].append(inst)
                index += 1
        if not dataset[tasks.TRAIN]:
            raise ConfigError('task.n_graphs: ' + str(cfg.n_graphs) +
                              ' graphs leave no training instances')
        LOGGER.debug('Prepared ' + str(index) + ' instances: ' +
                     ', '.join(s + '=' + str(len(dataset[s]))
                               for s in tasks.SPLITS))
        self._dataset = dataset

    def _train_batches(self):
        train = self._dataset[tasks.TRAIN]
        while True:
            for batch in iterate_batches(train, self._cfg.training.batch_size,
                                         rng=self._train_rng):
                yield collate(batch)

    def train_step(self, batch):
        """
        One forward, backward and Adam update

        :raises NumericError: If the loss or a gradient is not finite
        :return: training loss before the update
        :rtype: float
        """
        tp = tape.Tape()
        variables = OrderedDict((name, tp.variable(val, name=name))
                                for name, val in self._params.items())
        pred = self._model.forward(batch, variables, training=True,
                                   rng=self._train_rng)
        loss = metrics.loss(self._task.loss, pred, batch.targets)
        loss_value = float(tape.value_of(loss))
        if not np.isfinite(loss_value):
            raise NumericError('Training loss is not finite at step ' +
                               str(self._state.step + 1))
        grads = tape.named_gradients(tape.backward(tp, loss), variables)
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise NumericError('Gradient of ' + name + ' is not finite '
                                   'at step ' + str(self._state.step + 1))
        self._params, self._state = optim.adam_step(self._state,
                                                    self._params, grads,
                                                    self._cfg.training)
        return loss_value

    def predict(self, instances):
        """
        Eval mode predictions for `instances`, batched like training

        :return: ``(len(instances), out_dim)`` array
        :rtype: :py:class:`numpy.ndarray`
        """
        preds = []
        for group in iterate_batches(instances,
                                     self._cfg.training.batch_size):
            preds.append(self._model.predict(collate(group), self._params))
        return np.concatenate(preds, axis=0)

    def evaluate(self, split):
        """
        Task metric of the current parameters on `split`

        :raises UndefinedMetricError: If the split is empty or the metric
                                      is undefined on its labels
        :rtype: float
        """
        instances = self.get_dataset()[split]
        if not instances:
            raise UndefinedMetricError('Split ' + split + ' is empty')
        preds = self.predict(instances)
        labels = np.stack([np.asarray(inst.target) for inst in instances])
        if not np.all(np.isfinite(preds)):
            raise NumericError('Predictions on ' + split +
                               ' are not finite')
        return metrics.metric(self._task.metric, preds, labels)

    def _record(self, step, split, metric_name, value):
        cfg = self._cfg
        return results.make_record(self._config_hash, cfg.variant,
                                   cfg.task, cfg.size, cfg.seed, step, split,
                                   metric_name, value,
                                   _cur_time_in_ms() - self._start_ms)

    def eval_records(self, step, train_loss=None, splits=EVAL_SPLITS):
        """
        Result rows for one evaluation event. Splits whose metric is
        undefined are logged and skipped

        :rtype: list
        """
        records = []
        if train_loss is not None:
            records.append(self._record(step, tasks.TRAIN,
                                        results.TRAIN_LOSS, train_loss))
        for split in splits:
            try:
                value = self.evaluate(split)
            except UndefinedMetricError as e:
                LOGGER.warning('Skipping ' + split + ' ' +
                               self._task.metric + ' at step ' + str(step) +
                               ': ' + str(e))
                continue
            LOGGER.info(self._cfg.variant + ' ' + self._cfg.task +
                        ' step ' + str(step) + ' ' + split + ' ' +
                        self._task.metric + ' ' +
                        results.format_value(value))
            records.append(self._record(step, split, self._task.metric,
                                        value))
        return records

    def run(self):
        """
        Trains for ``training.max_steps`` updates, evaluating every
        ``eval_interval`` steps and after the last one

        :raises NumericError: If training diverges
        :return: emitted rows
        :rtype: list
        """
        self._start_ms = _cur_time_in_ms()
        self.get_dataset()
        cfg = self._cfg
        self._params = self._model.init_params(self._init_rng)
        self._state = optim.TrainState.for_params(self._params)
        max_steps = cfg.training.max_steps
        records = []
        losses = []
        batches = self._train_batches()
        with tqdm(total=max_steps, desc='Training', unit=' steps',
                  disable=self._disable_tqdm) as pbar:
            for step in range(1, max_steps + 1):
                losses.append(self.train_step(next(batches)))
                pbar.update()
                if step % cfg.eval_interval == 0 or step == max_steps:
                    records.extend(self.eval_records(
                        step, train_loss=float(np.mean(losses))))
                    losses = []
        return records


def run_experiment(cfg, out_dir=None, disable_tqdm=True):
    """
    Trains and evaluates the run described by `cfg`.

    When `out_dir` is set the rows are appended to ``results.csv`` in
    it and ``manifest.json`` plus ``params.npz`` are written alongside

    :param cfg: run configuration
    :type cfg: :py:class:`~gtbench.config.ExperimentConfig`
    :param out_dir: output directory, created if missing
    :type out_dir: str
    :param disable_tqdm: If ``True`` no progress bar is drawn
    :type disable_tqdm: bool
    :raises NumericError: If training diverges
    :return: emitted :py:class:`~gtbench.results.ResultRecord` rows
    :rtype: list
    """
    runner = ExperimentRunner(cfg, disable_tqdm=disable_tqdm)
    records = runner.run()
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        results.write_results(os.path.join(out_dir, results.RESULTS_FILE),
                              records)
        results.write_manifest(os.path.join(out_dir, results.MANIFEST_FILE),
                               cfg, extra={'steps': runner.get_train_state()
                                           .step})
        save_params(os.path.join(out_dir, results.PARAMS_FILE),
                    runner.get_params())
    return records


def evaluate_checkpoint(checkpoint_dir, split=tasks.TEST):
    """
    Reloads a run written by :py:func:`run_experiment` and evaluates it
    on `split`

    :raises ConfigError: If the manifest is missing or invalid
    :raises UndefinedMetricError: If the metric is undefined on `split`
    :return: ``(config, metric value)``
    :rtype: tuple
    """
    manifest_path = os.path.join(checkpoint_dir, results.MANIFEST_FILE)
    if not os.path.isfile(manifest_path):
        raise ConfigError('checkpoint: ' + manifest_path + ' not found')
    cfg = ExperimentConfig.from_dict(
        results.read_manifest(manifest_path)['config'])
    runner = ExperimentRunner(cfg)
    runner.get_dataset()
    runner.set_params(load_params(os.path.join(checkpoint_dir,
                                               results.PARAMS_FILE)))
    return cfg, runner.evaluate(split)


def _run_sweep_entry(entry):
    """
    Pool worker: runs one config document into its own directory
    """
    cfg = ExperimentConfig.from_dict(entry['config'])
    return run_experiment(cfg, out_dir=entry['outdir'])


def final_metric(records, split=tasks.TEST):
    """
    Value of the last ``split`` row that is not a training loss,
    ``None`` when there is none
    """
    final = None
    for rec in records:
        if rec.split != split or rec.metric == results.TRAIN_LOSS:
            continue
        if final is None or rec.step >= final.step:
            final = rec
    return None if final is None else final.value


class SweepRunner(Runner):
    """
    Runs a grid of configs, each in its own ``<out_dir>/<config hash>``
    directory, and summarizes them as a variant by size table of median
    final test metrics

    :param configs: runs to perform
    :type configs: list
    :param out_dir: output directory
    :type out_dir: str
    :param numworkers: size of the process pool, runs in process when 1
    :type numworkers: int
    :param disable_tqdm: If ``True`` no progress bar is drawn
    :type disable_tqdm: bool
    """
    def __init__(self, configs, out_dir, numworkers=1, disable_tqdm=True):
        """
        Constructor
        """
        super(SweepRunner, self).__init__(disable_tqdm=disable_tqdm)
        self._configs = configs
        self._out_dir = out_dir
        self._numworkers = numworkers

    def run(self):
        """
        :return: every emitted row, in config order
        :rtype: list
        """
        os.makedirs(self._out_dir, exist_ok=True)
        entries = [{'config': cfg.to_dict(),
                    'outdir': os.path.join(self._out_dir, cfg.config_hash())}
                   for cfg in self._configs]
        per_config = []
        with tqdm(total=len(entries), desc='Running experiments',
                  unit=' tasks', disable=self._disable_tqdm) as pbar:
            if self._numworkers > 1:
                with Pool(self._numworkers) as p:
                    for recs in p.imap(_run_sweep_entry, entries):
                        per_config.append(recs)
                        pbar.update()
            else:
                for entry in entries:
                    per_config.append(_run_sweep_entry(entry))
                    pbar.update()
        all_records = [rec for recs in per_config for rec in recs]
        results.write_results(os.path.join(self._out_dir,
                                           results.RESULTS_FILE),
                              all_records)
        self.write_table(os.path.join(self._out_dir, TABLE_FILE),
                         per_config)
        return all_records

    def summarize(self, per_config):
        """
        Median final test metric over seeds

        :param per_config: rows of each config, in config order
        :type per_config: list
        :return: ``(task, variant, size) => median`` for every cell with
                 at least one defined value
        :rtype: dict
        """
        cells = OrderedDict()
        for cfg, recs in zip(self._configs, per_config):
            key = (cfg.task, cfg.variant, cfg.size)
            value = final_metric(recs)
            cells.setdefault(key, [])
            if value is not None:
                cells[key].append(value)
        return OrderedDict((k, float(np.median(v)))
                           for k, v in cells.items() if v)

    def write_table(self, path, per_config):
        """
        Writes ``task,variant,<size>...`` rows with one median per size
        column, empty where undefined
        """
        summary = self.summarize(per_config)
        sizes = []
        rows = OrderedDict()
        for cfg in self._configs:
            if cfg.size not in sizes:
                sizes.append(cfg.size)
            rows.setdefault((cfg.task, cfg.variant), None)
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(['task', 'variant'] + sizes)
            for task, variant in rows:
                cells = []
                for size in sizes:
                    value = summary.get((task, variant, size))
                    cells.append('' if value is None
                                 else results.format_value(value))
                writer.writerow([task, variant] + cells)
        return summary
