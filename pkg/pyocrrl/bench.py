from __future__ import print_function, division
import os
import json
import math
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import pandas as pd

from pyocrrl.logger import logger
from pyocrrl.errors import ContractError, ReportError, DatasetError, \
    TransportError, SegmentationError, InputError
from pyocrrl.config import RunConfig
from pyocrrl.corpus import load_dataset, record_config, SegmentedContent
from pyocrrl.corpus.corpus_utils import segment_record_side
from pyocrrl.rt import aggregate_text_reward
from pyocrrl.rv import RasterImage, StubBackend, RemoteBackend, \
    vision_similarities, format_alignment_reward, combine_vision_reward
from pyocrrl.render import Renderer


SCHEMA_VERSION = "1.0"
TABLE_SUFFIX = ".table.txt"


def table_filename(report_filename):
    """the human-readable table written next to a JSON report"""
    return report_filename + TABLE_SUFFIX


def overall_score(text_edit, table_teds, formula_score):
    """overall document-parsing score

    Parameters:
    ----------
        text_edit : float in [0,1], normalized edit distance (lower is better)
        table_teds : float in [0,100]
        formula_score : float in [0,100]
    Returns:
    -------
        float in [0,100] : ((1 - text_edit) * 100 + table_teds +
            formula_score) / 3
    """
    if not 0.0 <= text_edit <= 1.0:
        raise ContractError("overall_score(): text_edit must be in [0,1], " \
                            "not {0}".format(text_edit))
    for name, value in (("table_teds", table_teds),
                        ("formula_score", formula_score)):
        if not 0.0 <= value <= 100.0:
            raise ContractError("overall_score(): {0} must be in [0,100], " \
                                "not {1}".format(name, value))
    return ((1.0 - text_edit) * 100.0 + table_teds + formula_score) / 3.0


@dataclass
class ScoredRecord:
    """all reward components of one record

    Attributes:
    ----------
        id, domain : from the EvalRecord
        text : TextRewardBreakdown, text domains only
        fidelity : multi-scale visual reward, vision domains only
        s_global : clamped global similarity
        format_alignment : 0 or 1, vision domains only
        vision_reward : fidelity and format alignment combined
        rendered : True when a renderer ran for this record
        render_success : outcome of that run
        scored : False when the record could not be scored (transport
            failure); such records enter no mean
        warnings : list of str

    """
    id: str
    domain: str
    text: object = None
    fidelity: float = None
    s_global: float = None
    format_alignment: float = None
    vision_reward: float = None
    rendered: bool = False
    render_success: bool = None
    scored: bool = True
    warnings: list = field(default_factory=list)

    def to_dict(self):
        d = OrderedDict()
        d["domain"] = self.domain
        d["scored"] = self.scored
        d["text"] = self.text.to_dict() if self.text is not None else None
        if self.domain in record_config["vision_domains"]:
            d["vision"] = {"fidelity": self.fidelity,
                           "s_global": self.s_global,
                           "format_alignment": self.format_alignment,
                           "vision_reward": self.vision_reward,
                           "rendered": self.rendered,
                           "render_success": self.render_success}
        else:
            d["vision"] = None
        d["warnings"] = list(self.warnings)
        return d


def _mean(values):
    return math.fsum(values) / len(values)


@dataclass
class BenchReport:
    """corpus-level metrics plus every per-record breakdown

    corpus holds text_edit_mean in [0,1] (a distance), the table, formula
    and vision means and the exec rates in [0,100], and overall when all
    three overall-score components are present
    """
    per_record: OrderedDict
    corpus: OrderedDict
    counts: OrderedDict
    warnings: list
    schema_version: str = SCHEMA_VERSION

    def to_dict(self):
        return {"schema_version": self.schema_version,
                "corpus": dict(self.corpus),
                "counts": dict(self.counts),
                "per_record": OrderedDict((k, v.to_dict())
                                          for k, v in self.per_record.items()),
                "warnings": list(self.warnings)}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2,
                          ensure_ascii=False) + '\n'

    def write(self, filename):
        with open(filename, 'w', encoding="utf-8", newline='\n') as f:
            f.write(self.to_json())

    def to_dataframe(self):
        """one row per record, sorted by id"""
        rows = []
        for rid, r in self.per_record.items():
            per_type = r.text.per_type if r.text is not None else {}
            rows.append({"id": rid, "domain": r.domain,
                         "plain_text": per_type.get("plain_text"),
                         "formula": per_type.get("formula"),
                         "table": per_type.get("table"),
                         "text_reward": r.text.aggregate
                         if r.text is not None else None,
                         "fidelity": r.fidelity,
                         "format": r.format_alignment,
                         "vision_reward": r.vision_reward,
                         "scored": r.scored})
        columns = ["id", "domain", "plain_text", "formula", "table",
                   "text_reward", "fidelity", "format", "vision_reward",
                   "scored"]
        df = pd.DataFrame(rows, columns=columns)
        df.index = df.pop("id")
        return df

    def to_table_string(self):
        """per-record components followed by the corpus metrics"""
        corpus = pd.Series(self.corpus, dtype=object)
        return self.to_dataframe().to_string(na_rep='-', float_format=
                                             lambda x: "{0:.4f}".format(x)) + \
            "\n\n" + corpus.to_string() + '\n'


def aggregate_report(records):
    """roll scored records up into a BenchReport

    Parameters:
    ----------
        records : sequence of ScoredRecord
    Returns:
    -------
        BenchReport
    Note:
    ----
        means are unweighted over the records that have the component.
        overall is reported only when the text edit, table TEDS and
        formula means all exist
    """
    if records is None or len(records) == 0:
        raise ReportError("aggregate_report(): no records to aggregate")
    ordered = sorted(records, key=lambda r: r.id)
    per_record = OrderedDict()
    for r in ordered:
        if r.id in per_record:
            raise ReportError("aggregate_report(): duplicate record id " +
                              "'{0}'".format(r.id))
        per_record[r.id] = r

    scored = [r for r in ordered if r.scored]
    plain = [r.text.per_type["plain_text"] for r in scored
             if r.text is not None and "plain_text" in r.text.per_type]
    formula = [r.text.per_type["formula"] for r in scored
               if r.text is not None and "formula" in r.text.per_type]
    table_s = [r.text.per_type["table"] for r in scored
               if r.text is not None and "table" in r.text.per_type]
    table = [r.text.table_teds for r in scored
             if r.text is not None and r.text.table_teds is not None]
    text_agg = [r.text.aggregate for r in scored
                if r.text is not None and not r.text.unscoreable]
    fidelity = [r.fidelity for r in scored if r.fidelity is not None]
    fmt = [r.format_alignment for r in scored
           if r.format_alignment is not None]
    vision = [r.vision_reward for r in scored if r.vision_reward is not None]

    corpus = OrderedDict()
    warnings = []
    if len(plain) > 0:
        corpus["text_edit_mean"] = 1.0 - _mean(plain)
    if len(table) > 0:
        corpus["table_teds_mean"] = 100.0 * _mean(table)
    if len(table_s) > 0:
        corpus["table_teds_s_mean"] = 100.0 * _mean(table_s)
    if len(formula) > 0:
        corpus["formula_score_mean"] = 100.0 * _mean(formula)
    if len(text_agg) > 0:
        corpus["text_reward_mean"] = 100.0 * _mean(text_agg)
    if len(fidelity) > 0:
        corpus["vision_fidelity_mean"] = 100.0 * _mean(fidelity)
    if len(fmt) > 0:
        corpus["format_alignment_mean"] = 100.0 * _mean(fmt)
    if len(vision) > 0:
        corpus["vision_reward_mean"] = 100.0 * _mean(vision)

    missing = [name for name in ("text_edit_mean", "table_teds_mean",
                                 "formula_score_mean") if name not in corpus]
    if len(missing) == 0:
        corpus["overall"] = overall_score(corpus["text_edit_mean"],
                                          corpus["table_teds_mean"],
                                          corpus["formula_score_mean"])
    else:
        warnings.append("overall omitted: missing " + ', '.join(missing))

    attempts, successes = OrderedDict(), OrderedDict()
    for r in ordered:
        if r.rendered:
            attempts[r.domain] = attempts.get(r.domain, 0) + 1
            if r.render_success:
                successes[r.domain] = successes.get(r.domain, 0) + 1
    if len(attempts) > 0:
        corpus["exec_rate"] = 100.0 * sum(successes.values()) / \
                              sum(attempts.values())
        corpus["exec_rate_by_domain"] = OrderedDict(
            (d, 100.0 * successes.get(d, 0) / attempts[d])
            for d in sorted(attempts))

    counts = OrderedDict()
    for d in record_config["domains"]:
        n = sum(1 for r in ordered if r.domain == d)
        if n > 0:
            counts[d] = n
    for r in ordered:
        for w in r.warnings:
            warnings.append("{0}: {1}".format(r.id, w))
    return BenchReport(per_record=per_record, corpus=corpus, counts=counts,
                       warnings=warnings)


class Bench(object):
    """scores a dataset end to end and builds the BenchReport.
    records, the embedding backend and the renderer are loaded only when
    first needed

    Parameters:
    ----------
        config : RunConfig or str
            the run configuration or a reward control file
        verbose : bool or str
            logger target: True for the screen, a filename for a log file
        backend : object with embed() and health()
            overrides the configured embedding backend
        renderer : Renderer
            overrides the configured renderer pool

    """
    def __init__(self, config=None, verbose=False, backend=None,
                 renderer=None):
        if config is None:
            config = RunConfig()
        elif isinstance(config, str):
            config = RunConfig(config)
        self.config = config
        if verbose is False and config.log_file is not None:
            verbose = config.resolve_path("log_file")
        self.logger = logger(verbose)
        self.log = self.logger.log
        self.__records = None
        self.__backend = backend
        self.__backend_checked = False
        self.__renderer = renderer
        self.__scored = None

    @property
    def dataset_dir(self):
        path = self.config.resolve_path("dataset_path")
        return os.path.dirname(path) if path is not None else os.getcwd()

    @property
    def records(self):
        if self.__records is None:
            path = self.config.resolve_path("dataset_path")
            self.log("loading dataset " + str(path))
            self.__records = load_dataset(path)
            self.log("loading dataset " + str(path))
            self.check_records(self.__records)
        return self.__records

    def check_records(self, records):
        """every vision record needs a ground truth image"""
        for r in records:
            if r.is_vision and r.gt_image_path is None:
                raise DatasetError("Bench.check_records(): vision record " +
                                   "'{0}' has no gt_image_path".format(r.id))

    @property
    def backend(self):
        if self.__backend is None:
            if self.config.backend == "remote":
                self.__backend = RemoteBackend(
                    self.config.endpoint, timeout=self.config.timeout,
                    retries=self.config.retries,
                    max_in_flight=self.config.max_in_flight)
            else:
                self.__backend = StubBackend()
        if not self.__backend_checked:
            self.log("embedding backend health check")
            self.__backend.health()
            self.log("embedding backend health check")
            self.__backend_checked = True
        return self.__backend

    @property
    def renderer(self):
        if self.__renderer is None:
            self.__renderer = Renderer(self.config.renderers,
                                       max_workers=self.config.render_workers)
        return self.__renderer

    def _resolve_image(self, path):
        return os.path.normpath(os.path.join(self.dataset_dir, path))

    def score_text(self, record):
        result = ScoredRecord(record.id, record.domain)
        gt = segment_record_side(record.ground_truth, record.domain)
        try:
            pred = segment_record_side(record.prediction, record.domain)
        except SegmentationError as e:
            result.warnings.append("prediction scored as plain text: " +
                                   str(e))
            pred = SegmentedContent(text_spans=(record.prediction,))
        result.text = aggregate_text_reward(pred, gt)
        result.warnings.extend(result.text.warnings)
        if result.text.unscoreable:
            result.warnings.append("ground truth has no scoreable content")
        return result

    def score_vision(self, record, backend):
        cfg = self.config.vision_config
        result = ScoredRecord(record.id, record.domain)
        fmt = record.expected_format
        result.format_alignment = format_alignment_reward(record.prediction,
                                                          fmt)
        try:
            gt_img = RasterImage.from_file(
                self._resolve_image(record.gt_image_path))
        except InputError as e:
            raise DatasetError("Bench.score_vision(): record '{0}': {1}".
                               format(record.id, str(e)))
        pred_img = None
        if self.renderer.can_render(fmt):
            result.rendered = True
            rendered = self.renderer.render(record.prediction, fmt)
            result.render_success = rendered.success
            if rendered.success:
                pred_img = rendered.image
            else:
                result.warnings.append("render failed: " + rendered.reason)
        elif record.pred_image_path is not None:
            try:
                pred_img = RasterImage.from_file(
                    self._resolve_image(record.pred_image_path))
            except InputError as e:
                result.warnings.append("prediction image unreadable: " +
                                       str(e))
        else:
            result.warnings.append("no renderer for '{0}' and no " \
                                   "pred_image_path".format(fmt))
        try:
            if pred_img is None:
                result.fidelity = 0.0
            else:
                result.fidelity, result.s_global, _ = vision_similarities(
                    pred_img, gt_img, cfg, backend)
        except TransportError as e:
            result.scored = False
            result.fidelity = None
            result.warnings.append("unscored: " + str(e))
            return result
        except ContractError as e:
            result.fidelity = 0.0
            result.warnings.append("fidelity scored 0: " + str(e))
        result.vision_reward = combine_vision_reward(result.fidelity,
                                                     result.format_alignment,
                                                     cfg.format_weight)
        return result

    def score_record(self, record, backend=None):
        """ScoredRecord for one EvalRecord"""
        if record.is_vision:
            if backend is None:
                backend = self.backend
            return self.score_vision(record, backend)
        return self.score_text(record)

    def score(self):
        """score every record with the configured worker pool

        Returns:
        -------
            list of ScoredRecord sorted by id
        """
        if self.__scored is not None:
            return self.__scored
        records = self.records
        backend = None
        if any(r.is_vision for r in records):
            backend = self.backend
            # renderer is shared by the worker threads
            self.renderer
        workers = int(self.config.workers)
        self.log("scoring {0} records with {1} worker(s)".
                 format(len(records), workers))
        if workers == 1:
            scored = [self.score_record(r, backend) for r in records]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                scored = list(pool.map(lambda r: self.score_record(r, backend),
                                       records))
        self.log("scoring {0} records with {1} worker(s)".
                 format(len(records), workers))
        scored = sorted(scored, key=lambda r: r.id)
        for r in scored:
            for w in r.warnings:
                self.logger.warn("{0}: {1}".format(r.id, w))
        self.__scored = scored
        return scored

    @property
    def report(self):
        return aggregate_report(self.score())

    def write_report(self, filename=None):
        """write the JSON report to filename and the table to
        filename + ".table.txt"
        """
        if filename is None:
            filename = self.config.resolve_path("output_path")
        report = self.report
        self.log("writing report " + str(filename))
        report.write(filename)
        with open(table_filename(filename), 'w', encoding="utf-8") as f:
            f.write(report.to_table_string())
        self.log("writing report " + str(filename))
        return report
