# -*- coding: utf-8 -*-

__author__ = 'gtbench developers'
__email__ = 'gtbench-dev@users.noreply.github.com'
__version__ = '0.1.0'

from .exceptions import GraphTransformerError
from .graphkit import Graph
from .graphkit import load_graph
from .config import ExperimentConfig
from .model import GraphTransformer
from .model import ModelSpec
from .runner import ExperimentRunner
from .runner import SweepRunner
from .runner import run_experiment
