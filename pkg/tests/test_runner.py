#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_runner
----------------------------------

Tests for `gtbench.runner` module.
"""

import os
import shutil
import tempfile
import unittest
from unittest.mock import patch

import numpy as np

from gtbench import results
from gtbench import runner
from gtbench import tasks
from gtbench.config import ExperimentConfig
from gtbench.runner import Runner
from gtbench.runner import ExperimentRunner
from gtbench.runner import SweepRunner
from gtbench.exceptions import ConfigError
from gtbench.exceptions import GraphTransformerError
from gtbench.exceptions import NumericError
from gtbench.exceptions import UndefinedMetricError

TINY_MODEL = {'layers': 1, 'hidden': 8, 'ffn_hidden': 8, 'heads': 2,
              'head_dim': 4}


def tiny_doc(variant='vanilla', seed=1, task='triangle-count-reg',
             max_steps=4):
    return {'task': {'name': task, 'n_graphs': 20},
            'size': 'custom',
            'model': TINY_MODEL,
            'variant': variant,
            'seed': seed,
            'eval_interval': 2,
            'training': {'max_steps': max_steps, 'warmup_steps': 1,
                         'batch_size': 8}}


def tiny_config(**kwargs):
    return ExperimentConfig.from_dict(tiny_doc(**kwargs))


def comparable(records):
    return [(r.step, r.split, r.metric, r.value) for r in records]


class TestRunner(unittest.TestCase):

    def setUp(self):
        pass

    def tearDown(self):
        pass

    def test_base_runner_run(self):
        try:
            Runner().run()
            self.fail('Expected GraphTransformerError')
        except GraphTransformerError as e:
            self.assertEqual('Not implemented for this Runner', str(e))

    def test_seed_streams(self):
        first = [g.random() for g in runner.seed_streams(3)]
        again = [g.random() for g in runner.seed_streams(3)]
        self.assertEqual(first, again)
        self.assertEqual(4, len(set(first)))

    def test_save_and_load_params(self):
        temp_dir = tempfile.mkdtemp()
        try:
            path = os.path.join(temp_dir, results.PARAMS_FILE)
            params = {'embed.w': np.arange(6.0).reshape(2, 3),
                      'head.b': np.array([0.5])}
            runner.save_params(path, params)
            loaded = runner.load_params(path)
            self.assertEqual(set(params.keys()), set(loaded.keys()))
            for name in params:
                self.assertTrue(np.array_equal(params[name], loaded[name]))
        finally:
            shutil.rmtree(temp_dir)

    def test_dataset_before_run(self):
        er = ExperimentRunner(tiny_config())
        self.assertIsNone(er.get_params())
        self.assertIsNone(er.get_model())
        dataset = er.get_dataset()
        self.assertEqual(set(tasks.SPLITS), set(dataset.keys()))
        self.assertEqual(20, sum(len(v) for v in dataset.values()))
        self.assertTrue(len(dataset[tasks.TRAIN]) > 0)
        self.assertIsNotNone(er.get_model())

    def test_node_task_has_one_instance_per_node(self):
        er = ExperimentRunner(tiny_config(task='node-degree-reg'))
        dataset = er.get_dataset()
        total = sum(len(v) for v in dataset.values())
        self.assertTrue(20 * tasks.MIN_NODES <= total <=
                        20 * tasks.MAX_NODES)

    def test_run_records(self):
        er = ExperimentRunner(tiny_config())
        records = er.run()
        losses = [r for r in records if r.metric == results.TRAIN_LOSS]
        self.assertEqual([2, 4], [r.step for r in losses])
        self.assertTrue(all(r.split == tasks.TRAIN for r in losses))
        for rec in records:
            self.assertEqual(er.get_config().config_hash(), rec.config_hash)
            self.assertEqual('vanilla', rec.variant)
            self.assertEqual('custom', rec.size)
            self.assertTrue(np.isfinite(rec.value))
            if rec.metric != results.TRAIN_LOSS:
                self.assertEqual('mae', rec.metric)
                self.assertIn(rec.split, runner.EVAL_SPLITS)
        self.assertEqual(4, er.get_train_state().step)

    def test_run_is_deterministic(self):
        first = ExperimentRunner(tiny_config(variant='at:spb')).run()
        second = ExperimentRunner(tiny_config(variant='at:spb')).run()
        self.assertEqual(comparable(first), comparable(second))

    def test_same_data_across_variants(self):
        vanilla = ExperimentRunner(tiny_config()).get_dataset()
        spb = ExperimentRunner(tiny_config(variant='at:spb')).get_dataset()
        for split in tasks.SPLITS:
            self.assertEqual([np.asarray(i.target).tolist()
                              for i in vanilla[split]],
                             [np.asarray(i.target).tolist()
                              for i in spb[split]])

    def test_training_changes_params(self):
        er = ExperimentRunner(tiny_config())
        er.run()
        trained = er.get_params()
        init = er.get_model().init_params(runner.seed_streams(1)[1])
        self.assertEqual(list(init.keys()), list(trained.keys()))
        self.assertFalse(np.allclose(init['embed.w'], trained['embed.w']))

    def test_nan_loss_raises(self):
        er = ExperimentRunner(tiny_config())
        with patch('gtbench.metrics.loss', return_value=float('nan')):
            try:
                er.run()
                self.fail('Expected NumericError')
            except NumericError as e:
                self.assertEqual('Training loss is not finite at step 1',
                                 str(e))

    def test_empty_split(self):
        er = ExperimentRunner(tiny_config())
        er.get_dataset()[tasks.VALID] = []
        try:
            er.evaluate(tasks.VALID)
            self.fail('Expected UndefinedMetricError')
        except UndefinedMetricError as e:
            self.assertEqual('Split valid is empty', str(e))
        self.assertEqual([], er.eval_records(3, splits=(tasks.VALID,)))

    def test_run_experiment_and_checkpoint(self):
        temp_dir = tempfile.mkdtemp()
        try:
            cfg = tiny_config()
            out_dir = os.path.join(temp_dir, 'run')
            records = runner.run_experiment(cfg, out_dir=out_dir)
            for name in (results.RESULTS_FILE, results.MANIFEST_FILE,
                         results.PARAMS_FILE):
                self.assertTrue(os.path.isfile(os.path.join(out_dir, name)))
            stored = results.read_results(os.path.join(out_dir,
                                                       results.RESULTS_FILE))
            self.assertEqual(comparable(records), comparable(stored))
            manifest = results.read_manifest(
                os.path.join(out_dir, results.MANIFEST_FILE))
            self.assertEqual(4, manifest['steps'])
            self.assertEqual(cfg.config_hash(), manifest['config_hash'])

            er = ExperimentRunner(cfg)
            er.get_dataset()
            er.set_params(runner.load_params(
                os.path.join(out_dir, results.PARAMS_FILE)))
            expected = er.evaluate(tasks.TRAIN)
            loaded_cfg, value = runner.evaluate_checkpoint(out_dir,
                                                           split=tasks.TRAIN)
            self.assertEqual(cfg, loaded_cfg)
            self.assertAlmostEqual(expected, value)
        finally:
            shutil.rmtree(temp_dir)

    def test_evaluate_missing_checkpoint(self):
        temp_dir = tempfile.mkdtemp()
        try:
            try:
                runner.evaluate_checkpoint(temp_dir)
                self.fail('Expected ConfigError')
            except ConfigError as e:
                self.assertEqual('checkpoint: ' +
                                 os.path.join(temp_dir,
                                              results.MANIFEST_FILE) +
                                 ' not found', str(e))
        finally:
            shutil.rmtree(temp_dir)

    def test_final_metric(self):
        def rec(step, split, metric, value):
            return results.make_record('h', 'vanilla', 'bipartite-cls',
                                       'small', 0, step, split, metric,
                                       value, 0)
        records = [rec(2, 'train', results.TRAIN_LOSS, 0.7),
                   rec(2, 'test', 'roc_auc', 0.4),
                   rec(4, 'valid', 'roc_auc', 0.9),
                   rec(4, 'test', 'roc_auc', 0.6),
                   rec(4, 'train', results.TRAIN_LOSS, 0.5)]
        self.assertEqual(0.6, runner.final_metric(records))
        self.assertEqual(0.9, runner.final_metric(records, split='valid'))
        self.assertIsNone(runner.final_metric(records[:1]))

    def test_summarize_takes_median_over_seeds(self):
        configs = [tiny_config(seed=s) for s in (0, 1, 2)]
        per_config = []
        for cfg, value in zip(configs, (0.1, 0.5, 0.3)):
            per_config.append([results.make_record(
                cfg.config_hash(), cfg.variant, cfg.task, cfg.size, cfg.seed,
                4, 'test', 'mae', value, 0)])
        sweeper = SweepRunner(configs, '/nonexistent')
        summary = sweeper.summarize(per_config)
        self.assertEqual({('triangle-count-reg', 'vanilla', 'custom'): 0.3},
                         dict(summary))
        self.assertEqual({}, dict(sweeper.summarize([[], [], []])))

    def test_write_table_cells(self):
        temp_dir = tempfile.mkdtemp()
        try:
            configs = [tiny_config(), tiny_config(variant='at:spb')]
            per_config = [[results.make_record(
                configs[0].config_hash(), 'vanilla', configs[0].task,
                'custom', 1, 4, 'test', 'mae', 0.25, 0)], []]
            path = os.path.join(temp_dir, runner.TABLE_FILE)
            SweepRunner(configs, temp_dir).write_table(path, per_config)
            with open(path, 'r', newline='') as f:
                text = f.read()
            self.assertEqual('task,variant,custom\n'
                             'triangle-count-reg,vanilla,0.25\n'
                             'triangle-count-reg,at:spb,\n', text)
        finally:
            shutil.rmtree(temp_dir)

    def test_sweep(self):
        temp_dir = tempfile.mkdtemp()
        try:
            configs = [tiny_config(), tiny_config(variant='at:mask-1')]
            sweeper = SweepRunner(configs, temp_dir)
            records = sweeper.run()
            for cfg in configs:
                run_dir = os.path.join(temp_dir, cfg.config_hash())
                self.assertTrue(os.path.isfile(
                    os.path.join(run_dir, results.MANIFEST_FILE)))
            combined = results.read_results(os.path.join(
                temp_dir, results.RESULTS_FILE))
            self.assertEqual(len(records), len(combined))
            with open(os.path.join(temp_dir, runner.TABLE_FILE), 'r') as f:
                lines = f.read().splitlines()
            self.assertEqual('task,variant,custom', lines[0])
            self.assertEqual(3, len(lines))
            self.assertTrue(lines[1].startswith('triangle-count-reg,'
                                                'vanilla,'))
            self.assertTrue(lines[2].startswith('triangle-count-reg,'
                                                'at:mask-1,'))
        finally:
            shutil.rmtree(temp_dir)

    @unittest.skipUnless(os.environ.get('GTBENCH_SLOW_TESTS') is not None,
                         'set GTBENCH_SLOW_TESTS to run training sanity '
                         'checks')
    def test_vanilla_learns_node_degrees(self):
        passed = 0
        for seed in range(5):
            cfg = ExperimentConfig.from_dict({'task': 'node-degree-reg',
                                              'seed': seed})
            records = ExperimentRunner(cfg).run()
            value = runner.final_metric(records)
            if value is not None and value < 0.15:
                passed += 1
        self.assertGreaterEqual(passed, 4)

    @unittest.skipUnless(os.environ.get('GTBENCH_SLOW_TESTS') is not None,
                         'set GTBENCH_SLOW_TESTS to run training sanity '
                         'checks')
    def test_graph_modules_beat_vanilla(self):
        variants = ['vanilla', 'at:mask-1', 'at:spb', 'ga:alternate']
        for task in ('spd-to-anchor-reg', 'triangle-count-reg'):
            configs = [ExperimentConfig.from_dict(
                {'task': task, 'variant': variant, 'seed': seed,
                 'training': {'max_steps': 2000, 'warmup_steps': 200}})
                for variant in variants for seed in range(5)]
            per_config = [runner.run_experiment(cfg) for cfg in configs]
            summary = SweepRunner(configs, '/nonexistent').summarize(
                per_config)
            baseline = summary[(task, 'vanilla', 'small')]
            for variant in variants[1:]:
                self.assertLess(summary[(task, variant, 'small')], baseline,
                                task + ' ' + variant)


if __name__ == '__main__':
    unittest.main()
