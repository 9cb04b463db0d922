# -*- coding: utf-8 -*-

import copy
import json
import hashlib
import logging
import itertools
from json.decoder import JSONDecodeError

from gtbench import tape
from gtbench import txcore
from gtbench import tasks
from gtbench import model
from gtbench import optim
from gtbench.txcore import MODEL_SIZES
from gtbench.exceptions import ConfigError
from gtbench.exceptions import InvalidInputError

LOGGER = logging.getLogger(__name__)

FULL_PROFILE = 'full'
DESK_PROFILE = 'desk'

PROFILES = (FULL_PROFILE, DESK_PROFILE)

MAX_STEPS_CEILING = 1000000

TRAINING_DEFAULTS = {'attn_dropout': 0.1,
                     'ffn_dropout': 0.1,
                     'max_steps': MAX_STEPS_CEILING,
                     'warmup_steps': 40000,
                     'peak_lr': 2e-4,
                     'batch_size': 256,
                     'weight_decay': 1e-3,
                     'lr_decay': optim.LINEAR_DECAY,
                     'clip_norm': 5.0,
                     'adam_eps': 1e-8,
                     'adam_beta1': 0.9,
                     'adam_beta2': 0.99}
"""
Training settings as used for the full scale runs
"""

DESK_OVERRIDES = {'max_steps': 3000,
                  'warmup_steps': 300,
                  'batch_size': 32,
                  'peak_lr': 1e-3}
"""
Replacements applied to :py:const:`TRAINING_DEFAULTS` by the ``desk``
profile so a run finishes in minutes
"""

SAMPLER_DEFAULTS = {'max_hop': 2, 'max_nbrs': 10}

DEFAULT_N_GRAPHS = 200

DEFAULT_EVAL_INTERVAL = 500

TOP_LEVEL_FIELDS = ('seed', 'size', 'variant', 'task', 'profile',
                    'training', 'sampler', 'model', 'activation',
                    'eval_interval')

MODEL_FIELDS = ('layers', 'hidden', 'ffn_hidden', 'heads', 'head_dim')


class TrainingConfig(object):
    """
    Optimizer, schedule and regularization settings. Attribute names
    are the keys of :py:const:`TRAINING_DEFAULTS`
    """
    def __init__(self, **kwargs):
        """
        Constructor
        """
        for key in TRAINING_DEFAULTS:
            setattr(self, key, kwargs[key])

    def as_dict(self):
        return {key: getattr(self, key) for key in TRAINING_DEFAULTS}


def training_defaults(profile=DESK_PROFILE):
    """
    Training settings for `profile`

    :rtype: dict
    """
    values = dict(TRAINING_DEFAULTS)
    if profile == DESK_PROFILE:
        values.update(DESK_OVERRIDES)
    return values


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value):
    return (isinstance(value, (int, float)) and
            not isinstance(value, bool))


class _Checker(object):
    """
    Collects ``<path>: <message>`` problems
    """
    def __init__(self):
        self.problems = []

    def add(self, path, message):
        self.problems.append(path + ': ' + message)

    def integer(self, path, value, low=None, high=None):
        if not _is_int(value):
            self.add(path, 'must be an integer, got ' + repr(value))
            return False
        if low is not None and value < low:
            self.add(path, 'must be at least ' + str(low) + ', got ' +
                     str(value))
            return False
        if high is not None and value > high:
            self.add(path, 'must be at most ' + str(high) + ', got ' +
                     str(value))
            return False
        return True

    def number(self, path, value, low=None, high=None, low_open=False,
               high_open=False):
        if not _is_number(value):
            self.add(path, 'must be a number, got ' + repr(value))
            return False
        if low is not None and (value < low or (low_open and value == low)):
            self.add(path, 'must be ' + ('>' if low_open else '>=') + ' ' +
                     str(low) + ', got ' + str(value))
            return False
        if high is not None and (value > high or
                                 (high_open and value == high)):
            self.add(path, 'must be ' + ('<' if high_open else '<=') + ' ' +
                     str(high) + ', got ' + str(value))
            return False
        return True

    def unknown(self, path_prefix, given, allowed):
        for key in sorted(given):
            if key not in allowed:
                self.add(path_prefix + str(key), 'unknown field')


class ExperimentConfig(object):
    """
    Reproducible description of one training run.

    Build instances with :py:meth:`from_dict` or :py:func:`load_config`,
    which fill in defaults and validate every field

    :ivar seed: root seed
    :ivar size: model size tag
    :ivar variant: variant descriptor, see :py:mod:`gtbench.model`
    :ivar task: task name
    :ivar n_graphs: number of generated graphs
    :ivar profile: ``full`` or ``desk``
    :ivar training: :py:class:`TrainingConfig`
    :ivar max_hop: sampler depth for node level tasks
    :ivar max_nbrs: sampler fan-out cap
    :ivar model: explicit shape for ``custom`` size, else ``None``
    :ivar activation: FFN activation
    :ivar eval_interval: steps between evaluations
    """
    def __init__(self, seed, size, variant, task, n_graphs, profile,
                 training, max_hop, max_nbrs, model_fields, activation,
                 eval_interval):
        """
        Constructor, prefer :py:meth:`from_dict`
        """
        self.seed = seed
        self.size = size
        self.variant = variant
        self.task = task
        self.n_graphs = n_graphs
        self.profile = profile
        self.training = training
        self.max_hop = max_hop
        self.max_nbrs = max_nbrs
        self.model = model_fields
        self.activation = activation
        self.eval_interval = eval_interval

    @staticmethod
    def from_dict(doc):
        """
        Validates `doc` and fills defaults

        :param doc: configuration document
        :type doc: dict
        :raises ConfigError: listing every problem with its field path
        :rtype: :py:class:`ExperimentConfig`
        """
        if not isinstance(doc, dict):
            raise ConfigError('config: must be an object')
        check = _Checker()
        check.unknown('', doc.keys(), TOP_LEVEL_FIELDS)

        seed = doc.get('seed', 0)
        check.integer('seed', seed, low=0)

        profile = doc.get('profile', DESK_PROFILE)
        if profile not in PROFILES:
            check.add('profile', 'must be one of ' + ', '.join(PROFILES) +
                      ', got ' + repr(profile))
            profile = DESK_PROFILE

        size = doc.get('size', txcore.SMALL)
        model_fields = None
        if size == txcore.CUSTOM:
            model_fields = ExperimentConfig._check_model(doc.get('model'),
                                                         check)
        elif size not in MODEL_SIZES:
            check.add('size', 'must be one of ' +
                      ', '.join(list(MODEL_SIZES) + [txcore.CUSTOM]) +
                      ', got ' + repr(size))
        elif 'model' in doc:
            check.add('model', 'only allowed when size is custom')

        activation = doc.get('activation', 'gelu')
        try:
            tape.activation(activation)
        except InvalidInputError as e:
            check.add('activation', str(e))

        variant = doc.get('variant', model.VANILLA)
        try:
            model.parse_variant(variant)
        except InvalidInputError as e:
            check.add('variant', str(e))

        task_name, n_graphs = ExperimentConfig._check_task(doc.get('task'),
                                                           check)
        training = ExperimentConfig._check_training(doc.get('training', {}),
                                                    profile, check)
        sampler = doc.get('sampler', {})
        max_hop = SAMPLER_DEFAULTS['max_hop']
        max_nbrs = SAMPLER_DEFAULTS['max_nbrs']
        if not isinstance(sampler, dict):
            check.add('sampler', 'must be an object')
        else:
            check.unknown('sampler.', sampler.keys(), SAMPLER_DEFAULTS)
            max_hop = sampler.get('max_hop', max_hop)
            max_nbrs = sampler.get('max_nbrs', max_nbrs)
            check.integer('sampler.max_hop', max_hop, low=1)
            check.integer('sampler.max_nbrs', max_nbrs, low=1)

        eval_interval = doc.get('eval_interval', DEFAULT_EVAL_INTERVAL)
        check.integer('eval_interval', eval_interval, low=1)

        if check.problems:
            raise ConfigError(check.problems)
        cfg = ExperimentConfig(seed, size, variant, task_name, n_graphs,
                               profile, TrainingConfig(**training),
                               max_hop, max_nbrs, model_fields, activation,
                               eval_interval)
        try:
            cfg.get_model_config()
        except InvalidInputError as e:
            raise ConfigError('model: ' + str(e))
        return cfg

    @staticmethod
    def _check_model(fields, check):
        if not isinstance(fields, dict):
            check.add('model', 'required object when size is custom')
            return None
        check.unknown('model.', fields.keys(), MODEL_FIELDS)
        result = dict()
        for key in MODEL_FIELDS:
            if key not in fields:
                check.add('model.' + key, 'missing')
                continue
            low = 0 if key == 'layers' else 1
            if check.integer('model.' + key, fields[key], low=low):
                result[key] = fields[key]
        if len(result) == len(MODEL_FIELDS) and\
                result['heads'] * result['head_dim'] != result['hidden']:
            check.add('model.head_dim', 'heads * head_dim must equal '
                      'hidden')
        return result

    @staticmethod
    def _check_task(task, check):
        if isinstance(task, str):
            task = {'name': task}
        if not isinstance(task, dict):
            check.add('task', 'must be a task name or an object')
            return None, DEFAULT_N_GRAPHS
        check.unknown('task.', task.keys(),
                      ('name', 'level', 'metric', 'n_graphs'))
        name = task.get('name')
        n_graphs = task.get('n_graphs', DEFAULT_N_GRAPHS)
        check.integer('task.n_graphs', n_graphs, low=10)
        if name not in tasks.TASKS:
            check.add('task.name', 'must be one of ' +
                      ', '.join(sorted(tasks.TASKS)) + ', got ' +
                      repr(name))
            return name, n_graphs
        spec = tasks.TASKS[name]
        if 'level' in task and task['level'] != spec.level:
            check.add('task.level', name + ' is a ' + spec.level +
                      ' level task')
        if 'metric' in task and task['metric'] != spec.metric:
            check.add('task.metric', name + ' is scored by ' + spec.metric)
        return name, n_graphs

    @staticmethod
    def _check_training(training, profile, check):
        values = training_defaults(profile)
        if not isinstance(training, dict):
            check.add('training', 'must be an object')
            return values
        check.unknown('training.', training.keys(), TRAINING_DEFAULTS)
        values.update({k: v for k, v in training.items()
                       if k in TRAINING_DEFAULTS})
        for key in ('attn_dropout', 'ffn_dropout'):
            check.number('training.' + key, values[key], low=0.0, high=1.0,
                         high_open=True)
        check.integer('training.max_steps', values['max_steps'], low=1,
                      high=MAX_STEPS_CEILING)
        if check.integer('training.warmup_steps', values['warmup_steps'],
                         low=0) and _is_int(values['max_steps']) and\
                values['warmup_steps'] > values['max_steps']:
            check.add('training.warmup_steps', 'must not exceed max_steps')
        check.integer('training.batch_size', values['batch_size'], low=1)
        check.number('training.peak_lr', values['peak_lr'], low=0.0,
                     low_open=True)
        check.number('training.weight_decay', values['weight_decay'],
                     low=0.0)
        check.number('training.clip_norm', values['clip_norm'], low=0.0,
                     low_open=True)
        check.number('training.adam_eps', values['adam_eps'], low=0.0,
                     low_open=True)
        for key in ('adam_beta1', 'adam_beta2'):
            check.number('training.' + key, values[key], low=0.0, high=1.0,
                         high_open=True)
        if values['lr_decay'] not in optim.LR_DECAYS:
            check.add('training.lr_decay', 'must be one of ' +
                      ', '.join(optim.LR_DECAYS) + ', got ' +
                      repr(values['lr_decay']))
        return values

    def get_task_spec(self):
        return tasks.get_task(self.task)

    def get_model_config(self):
        """
        Transformer shape with dropout rates from the training settings

        :rtype: :py:class:`gtbench.txcore.ModelConfig`
        """
        if self.size == txcore.CUSTOM:
            return txcore.ModelConfig(activation=self.activation,
                                      attn_dropout=self.training.attn_dropout,
                                      ffn_dropout=self.training.ffn_dropout,
                                      size_tag=txcore.CUSTOM, **self.model)
        return txcore.model_config(self.size, activation=self.activation,
                                   attn_dropout=self.training.attn_dropout,
                                   ffn_dropout=self.training.ffn_dropout)

    def get_model_spec(self):
        return model.ModelSpec(self.get_model_config(), self.variant)

    def to_dict(self):
        """
        Fully resolved document; :py:meth:`from_dict` of it gives an
        equal config
        """
        doc = {'seed': self.seed,
               'size': self.size,
               'variant': self.variant,
               'task': {'name': self.task, 'n_graphs': self.n_graphs},
               'profile': self.profile,
               'training': self.training.as_dict(),
               'sampler': {'max_hop': self.max_hop,
                           'max_nbrs': self.max_nbrs},
               'activation': self.activation,
               'eval_interval': self.eval_interval}
        if self.model is not None:
            doc['model'] = dict(self.model)
        return doc

    def config_hash(self):
        """
        First 12 hex digits of the SHA-256 of the canonical JSON of
        :py:meth:`to_dict`
        """
        text = json.dumps(self.to_dict(), sort_keys=True,
                          separators=(',', ':'))
        return hashlib.sha256(text.encode('utf-8')).hexdigest()[:12]

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None

    def __repr__(self):
        return 'ExperimentConfig(' + self.config_hash() + ')'


def load_config(path):
    """
    Reads an :py:class:`ExperimentConfig` from a JSON file

    :raises ConfigError: If the file cannot be read or fails validation
    """
    try:
        with open(path, 'r') as f:
            doc = json.load(f)
    except (OSError, JSONDecodeError) as e:
        raise ConfigError('config: unable to read ' + str(path) + ': ' +
                          str(e))
    return ExperimentConfig.from_dict(doc)


def save_config(path, cfg):
    with open(path, 'w') as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True)


GRID_FIELDS = ('base', 'variants', 'sizes', 'seeds', 'tasks')


def expand_grid(doc):
    """
    Cartesian product of a sweep grid. ``base`` is a config document,
    ``variants``, ``sizes``, ``seeds`` and ``tasks`` are lists whose
    entries replace the matching base field

    :raises ConfigError: If the grid or any resulting config is invalid
    :return: configs ordered by task, variant, size then seed
    :rtype: list
    """
    if not isinstance(doc, dict):
        raise ConfigError('grid: must be an object')
    check = _Checker()
    check.unknown('grid.', doc.keys(), GRID_FIELDS)
    base = doc.get('base', {})
    if not isinstance(base, dict):
        check.add('grid.base', 'must be an object')
        base = {}
    axes = dict()
    for field, key in (('variants', 'variant'), ('sizes', 'size'),
                       ('seeds', 'seed'), ('tasks', 'task')):
        values = doc.get(field)
        if values is None:
            values = [base.get(key)] if key in base else [None]
        if not isinstance(values, list) or not values:
            check.add('grid.' + field, 'must be a non-empty list')
            values = [None]
        axes[key] = values
    if check.problems:
        raise ConfigError(check.problems)
    configs = []
    problems = []
    for task, variant, size, seed in itertools.product(
            axes['task'], axes['variant'], axes['size'], axes['seed']):
        entry = copy.deepcopy(base)
        for key, value in (('task', task), ('variant', variant),
                           ('size', size), ('seed', seed)):
            if value is not None:
                entry[key] = value
        try:
            configs.append(ExperimentConfig.from_dict(entry))
        except ConfigError as e:
            problems.extend(['grid[' + str(variant) + ',' + str(size) +
                             ',' + str(seed) + '].' + p
                             for p in e.problems])
    if problems:
        raise ConfigError(problems)
    return configs


def load_grid(path):
    """
    Reads a sweep grid file, see :py:func:`expand_grid`
    """
    try:
        with open(path, 'r') as f:
            doc = json.load(f)
    except (OSError, JSONDecodeError) as e:
        raise ConfigError('grid: unable to read ' + str(path) + ': ' +
                          str(e))
    return expand_grid(doc)
