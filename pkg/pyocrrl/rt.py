from __future__ import print_function, division
import math
from collections import Counter
from dataclasses import dataclass, field

import Levenshtein

from pyocrrl.errors import NormalizationError
from pyocrrl.norm import normalize_latex, normalize_table, normalize_plain_text
from pyocrrl.tree.tree_handler import teds, teds_s


BLEU_MAX_ORDER = 4


@dataclass
class TextRewardBreakdown:
    """text-centric reward breakdown for one record

    Attributes:
    ----------
        per_type : dict content type -> reward in [0,1]; a type is absent
            when the ground truth has no content of that type
        aggregate : mean of the present per_type values, 0 if none
        unscoreable : True when no content type was present
        table_teds : mean full TEDS over the table pairs (content-aware),
            None when no table was scored
        warnings : list of str

    """
    per_type: dict = field(default_factory=dict)
    aggregate: float = 0.0
    unscoreable: bool = False
    table_teds: float = None
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {"per_type": dict(sorted(self.per_type.items())),
                "aggregate": self.aggregate,
                "unscoreable": self.unscoreable,
                "table_teds": self.table_teds,
                "warnings": list(self.warnings)}


def levenshtein(a, b):
    """insert/delete/substitute edit count at unicode code point level"""
    return Levenshtein.distance(a, b)


def text_edit_reward(pred, gt):
    """1 - levenshtein / longer length; 1 when both are empty"""
    n = max(len(pred), len(gt))
    if n == 0:
        return 1.0
    return 1.0 - levenshtein(pred, gt) / n


def _ngrams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) + 1 - n)]


def bleu(candidate, reference, max_order=BLEU_MAX_ORDER):
    """single-reference BLEU over token sequences

    uniform weights over orders 1..max_order, standard exponential brevity
    penalty, add-one smoothing of the counts for orders >= 2
    """
    c = len(candidate)
    r = len(reference)
    if c == 0:
        return 0.0
    log_p = 0.0
    for n in range(1, max_order + 1):
        cand_counts = Counter(_ngrams(candidate, n))
        ref_counts = Counter(_ngrams(reference, n))
        total = sum(cand_counts.values())
        clipped = sum(min(count, ref_counts[g])
                      for g, count in cand_counts.items())
        if n == 1:
            if clipped == 0:
                return 0.0
            p_n = clipped / total
        else:
            p_n = (clipped + 1.0) / (total + 1.0)
        log_p += math.log(p_n) / max_order
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return min(1.0, bp * math.exp(log_p))


def formula_bleu_reward(pred, gt):
    """BLEU between normalized LaTeX token sequences

    Returns:
    -------
        float in [0,1], or None when the ground truth normalizes to no
        tokens (the span is then skipped)
    """
    gt_seq = normalize_latex(gt)
    if len(gt_seq) == 0:
        return None
    pred_seq = normalize_latex(pred)
    if pred_seq.tokens == gt_seq.tokens:
        return 1.0
    return bleu(list(pred_seq.tokens), list(gt_seq.tokens))


def table_reward(pred, gt, warnings=None):
    """TEDS-S between normalized tables; 0 when pred has no table"""
    gt_tree = normalize_table(gt)
    try:
        pred_tree = normalize_table(pred)
    except NormalizationError as e:
        if warnings is not None:
            warnings.append("table_reward(): prediction: " + str(e))
        return 0.0
    return teds_s(pred_tree, gt_tree)


def _table_pair(pred, gt, warnings):
    """(teds_s, teds) for one table pair; None if the gt is unusable"""
    try:
        gt_tree = normalize_table(gt)
    except NormalizationError as e:
        warnings.append("ground truth table skipped: " + str(e))
        return None
    if gt_tree.repaired:
        warnings.append("ground truth table had unclosed tags, repaired")
    if pred is None:
        return 0.0, 0.0
    try:
        pred_tree = normalize_table(pred)
    except NormalizationError as e:
        warnings.append("table_reward(): prediction: " + str(e))
        return 0.0, 0.0
    if pred_tree.repaired:
        warnings.append("predicted table had unclosed tags, repaired")
    return teds_s(pred_tree, gt_tree), teds(pred_tree, gt_tree)


def _mean(values):
    return math.fsum(values) / len(values)


def aggregate_text_reward(pred, gt):
    """text-centric reward of one record

    Parameters:
    ----------
        pred : SegmentedContent
        gt : SegmentedContent
    Returns:
    -------
        TextRewardBreakdown
    Note:
    ----
        the i-th predicted formula/table is scored against the i-th ground
        truth one; unmatched ground truth instances score 0 and extra
        predicted instances are ignored
    """
    result = TextRewardBreakdown()

    gt_text = normalize_plain_text(' '.join(gt.text_spans))
    if len(gt_text) > 0:
        pred_text = normalize_plain_text(' '.join(pred.text_spans))
        result.per_type["plain_text"] = text_edit_reward(pred_text, gt_text)

    scores = []
    for i, gt_formula in enumerate(gt.formulas):
        pred_formula = pred.formulas[i] if i < len(pred.formulas) else ""
        r = formula_bleu_reward(pred_formula, gt_formula)
        if r is None:
            result.warnings.append("ground truth formula {0} is empty after " \
                                   "normalization, skipped".format(i))
            continue
        scores.append(r)
    if len(scores) > 0:
        result.per_type["formula"] = _mean(scores)

    scores, full_scores = [], []
    for i, gt_table in enumerate(gt.tables):
        pred_table = pred.tables[i] if i < len(pred.tables) else None
        pair = _table_pair(pred_table, gt_table, result.warnings)
        if pair is None:
            continue
        scores.append(pair[0])
        full_scores.append(pair[1])
    if len(scores) > 0:
        result.per_type["table"] = _mean(scores)
        result.table_teds = _mean(full_scores)

    if len(result.per_type) == 0:
        result.aggregate = 0.0
        result.unscoreable = True
    else:
        result.aggregate = _mean(list(result.per_type.values()))
    return result
