from __future__ import print_function, division
import re

from pyocrrl.errors import SegmentationError
from pyocrrl.corpus.corpus_handler import SegmentedContent


# (open, close) pairs for formulas, longest open first
FORMULA_DELIMS = (("$$", "$$"), ("\\[", "\\]"), ("$", "$"))
TABLE_OPEN = "<table"
TABLE_CLOSE = "</table>"
_TABLE_CLOSE_RE = re.compile(re.escape(TABLE_CLOSE), re.IGNORECASE)
# table markup with the <table> wrapper left off
_BARE_ROWS_RE = re.compile(r"^\s*<(tr|thead|tbody)[\s>]", re.IGNORECASE)


def byte_offset(source, idx):
    """utf-8 byte offset of character index idx"""
    return len(source[:idx].encode("utf-8"))


def _is_table_open(source, idx):
    if source[idx:idx + len(TABLE_OPEN)].lower() != TABLE_OPEN:
        return False
    nxt = idx + len(TABLE_OPEN)
    return nxt < len(source) and (source[nxt] == '>' or source[nxt].isspace())


def segment_content(source):
    """split markdown into plain text, formulas and tables

    Parameters:
    ----------
        source : str
            markdown text.  display formulas in $$...$$ or \\[...\\],
            inline formulas in $...$, tables as <table>...</table>
    Returns:
    -------
        SegmentedContent
    Note:
    ----
        first-match scanning: the first closing delimiter ends a span, so
        nested dollars and nested tables are not supported.  \\$ is
        literal text
    """
    text_spans, formulas, tables, layout = [], [], [], []
    buf = []

    def flush():
        if len(buf) > 0:
            layout.append(("text", len(text_spans), "", ""))
            text_spans.append(''.join(buf))
            del buf[:]

    i = 0
    n = len(source)
    while i < n:
        if source.startswith("\\$", i):
            buf.append("\\$")
            i += 2
            continue
        matched = False
        for open_delim, close_delim in FORMULA_DELIMS:
            if source.startswith(open_delim, i):
                start = i + len(open_delim)
                end = source.find(close_delim, start)
                if end < 0:
                    raise SegmentationError("segment_content(): unclosed " \
                                            "formula delimiter '{0}' at byte " \
                                            "offset {1}".
                                            format(open_delim,
                                                   byte_offset(source, i)))
                flush()
                layout.append(("formula", len(formulas), open_delim,
                               close_delim))
                formulas.append(source[start:end])
                i = end + len(close_delim)
                matched = True
                break
        if matched:
            continue
        if source[i] == '<' and _is_table_open(source, i):
            close = _TABLE_CLOSE_RE.search(source, i)
            if close is None:
                raise SegmentationError("segment_content(): unclosed " \
                                        "<table> at byte offset {0}".
                                        format(byte_offset(source, i)))
            flush()
            end = close.end()
            layout.append(("table", len(tables), "", ""))
            tables.append(source[i:end])
            i = end
            continue
        buf.append(source[i])
        i += 1
    flush()
    return SegmentedContent(text_spans=tuple(text_spans),
                            formulas=tuple(formulas),
                            tables=tuple(tables),
                            layout=tuple(layout))


def segment_record_side(source, domain):
    """segment one side (prediction or ground truth) of a text record.

    formula-domain text with no delimiters at all is taken as a single
    bare formula.  table-domain text holding bare rows (<tr>, <thead> or
    <tbody> markup with no <table> wrapper) is wrapped and taken as a
    single table
    """
    seg = segment_content(source)
    if domain == "table" and len(seg.tables) == 0 and \
            _BARE_ROWS_RE.match(source) is not None:
        return SegmentedContent(text_spans=(), formulas=(),
                                tables=("<table>" + source.strip() +
                                        "</table>",),
                                layout=(("table", 0, "", ""),))
    if domain == "formula" and len(seg.formulas) == 0 and \
            len(seg.tables) == 0 and len(source.strip()) > 0:
        return SegmentedContent(text_spans=(), formulas=(source.strip(),),
                                tables=(),
                                layout=(("formula", 0, "", ""),))
    return seg


def write_dataset(records, path):
    """write EvalRecords as jsonl, one per line, LF terminated"""
    with open(path, 'w', encoding="utf-8", newline='\n') as f:
        for record in records:
            f.write(record.to_line() + '\n')
