# -*- coding: utf-8 -*-

"""
Results file and run manifest
"""

import os
import csv
import json
import logging
from collections import namedtuple

from gtbench.exceptions import GraphTransformerError

LOGGER = logging.getLogger(__name__)

RESULTS_HEADER = ('config_hash', 'variant', 'task', 'size', 'seed', 'step',
                  'split', 'metric', 'value', 'wall_ms')

RESULTS_FILE = 'results.csv'
MANIFEST_FILE = 'manifest.json'
PARAMS_FILE = 'params.npz'

TRAIN_LOSS = 'train_loss'

ResultRecord = namedtuple('ResultRecord', RESULTS_HEADER)
"""
One evaluation event for one metric. Use :py:func:`make_record` so the
value is already rounded to what the results file stores
"""


def format_value(value):
    """
    Six significant digits
    """
    return '%.6g' % float(value)


def make_record(config_hash, variant, task, size, seed, step, split, metric,
                value, wall_ms):
    """
    Builds a :py:class:`ResultRecord` whose value survives a write and
    read of the results file unchanged

    :rtype: :py:class:`ResultRecord`
    """
    return ResultRecord(config_hash, variant, task, size, int(seed),
                        int(step), split, metric,
                        float(format_value(value)), int(wall_ms))


class ResultsWriter(object):
    """
    Appends :py:class:`ResultRecord` rows to a CSV file, writing the
    header first when the file is new or empty

    :param path: CSV file path
    :type path: str
    """
    def __init__(self, path):
        """
        Constructor
        """
        self._path = path

    def get_path(self):
        return self._path

    def append(self, records):
        """
        Appends `records` to the file

        :param records: rows to write
        :type records: list
        :return: number of rows written
        :rtype: int
        """
        new_file = not os.path.isfile(self._path) or\
            os.path.getsize(self._path) == 0
        with open(self._path, 'a', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            if new_file:
                writer.writerow(RESULTS_HEADER)
            for rec in records:
                row = list(rec)
                row[RESULTS_HEADER.index('value')] = format_value(rec.value)
                writer.writerow(row)
        LOGGER.debug('Appended ' + str(len(records)) + ' rows to ' +
                     self._path)
        return len(records)


def write_results(path, records):
    return ResultsWriter(path).append(records)


def read_results(path):
    """
    Reads a results file back into :py:class:`ResultRecord` objects

    :param path: CSV file path
    :type path: str
    :raises GraphTransformerError: If the header does not match
                                   :py:const:`RESULTS_HEADER`
    :rtype: list
    """
    records = []
    with open(path, 'r', newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != RESULTS_HEADER:
            raise GraphTransformerError('Unexpected results header in ' +
                                        str(path) + ': ' + str(header))
        for row in reader:
            if not row:
                continue
            records.append(ResultRecord(row[0], row[1], row[2], row[3],
                                        int(row[4]), int(row[5]), row[6],
                                        row[7], float(row[8]),
                                        int(row[9])))
    return records


def write_manifest(path, cfg, extra=None):
    """
    Writes the resolved config plus its hash as JSON

    :param path: output file
    :type path: str
    :param cfg: run configuration
    :type cfg: :py:class:`gtbench.config.ExperimentConfig`
    :param extra: additional top level entries
    :type extra: dict
    """
    doc = {'config_hash': cfg.config_hash(),
           'config': cfg.to_dict()}
    if extra is not None:
        doc.update(extra)
    with open(path, 'w') as f:
        json.dump(doc, f, indent=2, sort_keys=True)


def read_manifest(path):
    with open(path, 'r') as f:
        return json.load(f)
