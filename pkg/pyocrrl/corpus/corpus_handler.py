from __future__ import print_function, division
import os
import json
from dataclasses import dataclass, field

from pyocrrl.errors import ParseError, SchemaError, DomainError, DatasetError


record_config = {}

# the eight domains, split by reward path
record_config["text_domains"] = ("text_doc", "formula", "table")
record_config["vision_domains"] = ("chart", "web", "svg", "plot", "molecule")
record_config["domains"] = record_config["text_domains"] + \
                           record_config["vision_domains"]

# jsonl schema
record_config["required_fields"] = ("id", "domain", "prediction", "ground_truth")
record_config["optional_fields"] = ("gt_image_path", "pred_image_path")

# expected code format for the format-alignment reward
record_config["domain_formats"] = {"chart": "python_plot",
                                   "plot": "latex_tikz",
                                   "web": "html",
                                   "svg": "svg",
                                   "molecule": "molecule_code"}

# content types of the text-centric reward
record_config["content_types"] = ("plain_text", "formula", "table")


@dataclass(frozen=True)
class EvalRecord:
    """one scoring unit: a prediction and its ground truth for one domain

    Note:
    ----
        image paths are stored as given in the dataset; Bench resolves
        them against the dataset directory
    """
    id: str
    domain: str
    prediction: str
    ground_truth: str
    gt_image_path: str = None
    pred_image_path: str = None

    def __post_init__(self):
        if not isinstance(self.id, str) or len(self.id) == 0:
            raise SchemaError("EvalRecord: 'id' must be a non-empty string")
        if self.domain not in record_config["domains"]:
            raise DomainError("EvalRecord: unknown domain '{0}' for id '{1}'".
                              format(self.domain, self.id))

    @property
    def is_vision(self):
        return self.domain in record_config["vision_domains"]

    @property
    def expected_format(self):
        return record_config["domain_formats"].get(self.domain)

    def to_dict(self):
        d = {"id": self.id, "domain": self.domain,
             "prediction": self.prediction,
             "ground_truth": self.ground_truth}
        for name in record_config["optional_fields"]:
            value = getattr(self, name)
            if value is not None:
                d[name] = value
        return d

    def to_line(self):
        """serialize to one jsonl line (no trailing newline)"""
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)


@dataclass(frozen=True)
class SegmentedContent:
    """markdown split into plain-text spans, formulas and tables

    Attributes:
    ----------
        text_spans : tuple of plain-text strings in document order
        formulas : tuple of raw LaTeX strings (delimiters stripped)
        tables : tuple of raw <table>...</table> blocks
        layout : tuple of (kind, index, open_delim, close_delim) in
            document order; kind is one of "text", "formula", "table".
            used by render() to restore the source

    """
    text_spans: tuple = ()
    formulas: tuple = ()
    tables: tuple = ()
    layout: tuple = field(default=(), compare=False)

    @property
    def is_empty(self):
        return len(self.text_spans) == 0 and len(self.formulas) == 0 \
               and len(self.tables) == 0

    def render(self):
        """rebuild the source string with delimiters restored"""
        parts = []
        spans = {"text": self.text_spans, "formula": self.formulas,
                 "table": self.tables}
        for kind, idx, open_delim, close_delim in self.layout:
            parts.append(open_delim + spans[kind][idx] + close_delim)
        return ''.join(parts)


def parse_record_line(line, line_number=None):
    """parse one jsonl line into an EvalRecord

    Parameters:
    ----------
        line : str
            one json object
        line_number : int
            1-based line number used in error messages
    Returns:
    -------
        EvalRecord
    Note:
    ----
        unknown fields are ignored
    """
    where = "line {0}".format(line_number) if line_number is not None \
        else "record"
    try:
        obj = json.loads(line)
    except ValueError as e:
        raise ParseError("parse_record_line(): malformed json on " +
                         "{0}: {1}".format(where, str(e)))
    if not isinstance(obj, dict):
        raise ParseError("parse_record_line(): {0} is not a json object".
                         format(where))
    for name in record_config["required_fields"]:
        if name not in obj:
            raise SchemaError("parse_record_line(): {0} missing required " \
                              "field '{1}'".format(where, name))
        if not isinstance(obj[name], str):
            raise SchemaError("parse_record_line(): {0} field '{1}' must " \
                              "be a string".format(where, name))
    if obj["domain"] not in record_config["domains"]:
        raise DomainError("parse_record_line(): {0} unknown domain '{1}'".
                          format(where, obj["domain"]))
    kwargs = {}
    for name in record_config["optional_fields"]:
        value = obj.get(name)
        if value is not None and not isinstance(value, str):
            raise SchemaError("parse_record_line(): {0} field '{1}' must " \
                              "be a string or null".format(where, name))
        kwargs[name] = value
    try:
        return EvalRecord(id=obj["id"], domain=obj["domain"],
                          prediction=obj["prediction"],
                          ground_truth=obj["ground_truth"], **kwargs)
    except SchemaError as e:
        raise type(e)("parse_record_line(): {0}: {1}".format(where, str(e)))


def load_dataset(path):
    """load a jsonl dataset of EvalRecords

    Parameters:
    ----------
        path : str
            newline-delimited json file
    Returns:
    -------
        list of EvalRecord in file order
    Note:
    ----
        blank lines are skipped but still counted for line numbers
    """
    if not os.path.exists(path):
        raise DatasetError("load_dataset(): dataset file not found: " +
                           str(path))
    records = []
    seen = {}
    try:
        f = open(path, 'r', encoding="utf-8")
    except (IOError, OSError) as e:
        raise DatasetError("load_dataset(): error opening " +
                           "{0}: {1}".format(path, str(e)))
    with f:
        for iline, line in enumerate(f, start=1):
            if len(line.strip()) == 0:
                continue
            record = parse_record_line(line, line_number=iline)
            if record.id in seen:
                raise DatasetError("load_dataset(): duplicate id '{0}' on " \
                                   "lines {1} and {2}".
                                   format(record.id, seen[record.id], iline))
            seen[record.id] = iline
            records.append(record)
    return records
