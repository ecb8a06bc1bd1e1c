from __future__ import print_function, division
import re
import unicodedata
from dataclasses import dataclass
from html.parser import HTMLParser

from pyocrrl.errors import NormalizationError
from pyocrrl.tree.tree_handler import TableTree, SPAN_KEYS


# synonym commands and their canonical form
LATEX_SYNONYMS = {"\\dfrac": "\\frac", "\\tfrac": "\\frac",
                  "\\leq": "\\le", "\\geq": "\\ge", "\\neq": "\\ne",
                  "\\lbrace": "\\{", "\\rbrace": "\\}"}

# spacing and style commands dropped outright
LATEX_DROPPED = {"\\,", "\\;", "\\!", "\\:", "\\quad", "\\qquad",
                 "\\displaystyle", "\\textstyle"}

# delimiter-size wrappers: dropped, the delimiter that follows is kept
LATEX_WRAPPERS = {"\\left", "\\right", "\\big", "\\Big", "\\bigg", "\\Bigg",
                  "\\bigl", "\\bigr", "\\Bigl", "\\Bigr"}

STRUCTURAL_TAGS = ("table", "thead", "tbody", "tr", "td")

_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class LatexTokenSeq:
    """normalized LaTeX tokens

    Attributes:
    ----------
        tokens : tuple of str, none empty, none containing whitespace
        balanced : False when the braces of the source did not balance

    """
    tokens: tuple = ()
    balanced: bool = True

    def render(self):
        """detokenize; normalize_latex(seq.render()) == seq"""
        return ' '.join(self.tokens)

    def __len__(self):
        return len(self.tokens)


def _lex_latex(raw):
    tokens = []
    i = 0
    n = len(raw)
    while i < n:
        c = raw[i]
        if c.isspace():
            i += 1
        elif c == '%':
            # comment to end of line
            eol = raw.find('\n', i)
            i = n if eol < 0 else eol + 1
        elif c == '\\':
            if i + 1 >= n:
                tokens.append('\\')
                i += 1
            elif raw[i + 1].isalpha():
                j = i + 1
                while j < n and raw[j].isalpha():
                    j += 1
                tokens.append(raw[i:j])
                i = j
            else:
                tokens.append(raw[i:i + 2])
                i += 2
        else:
            tokens.append(c)
            i += 1
    return tokens


def normalize_latex(raw):
    """tokenize and canonicalize a LaTeX formula

    Parameters:
    ----------
        raw : str
    Returns:
    -------
        LatexTokenSeq
    Note:
    ----
        rules: comments dropped; whitespace dropped; \\left, \\right and
        the \\big family dropped keeping their delimiter; synonyms
        rewritten (LATEX_SYNONYMS); spacing commands dropped; a backslash
        followed by a non-letter is a two-character command.
        unbalanced braces are kept as-is and flagged
    """
    tokens = []
    for tok in _lex_latex(raw):
        # backslash-space and backslash-newline are spacing too
        if len(tok) == 2 and tok[0] == '\\' and tok[1].isspace():
            continue
        if tok in LATEX_DROPPED or tok in LATEX_WRAPPERS:
            continue
        tokens.append(LATEX_SYNONYMS.get(tok, tok))
    depth = 0
    balanced = True
    for tok in tokens:
        if tok == '{':
            depth += 1
        elif tok == '}':
            depth -= 1
            if depth < 0:
                balanced = False
    if depth != 0:
        balanced = False
    return LatexTokenSeq(tokens=tuple(tokens), balanced=balanced)


def normalize_plain_text(raw):
    """NFC, whitespace runs collapsed to one space, ends stripped"""
    if not raw:
        return ""
    return _WS.sub(' ', unicodedata.normalize("NFC", raw)).strip()


class _TableTreeBuilder(HTMLParser):
    """builds a TableTree from the first <table> of an html string.

    only table/thead/tbody/tr/td/th are kept (th becomes td); other tags
    are transparent, their text goes to the open cell.  misnested end tags
    close every element opened after the matching start tag
    """
    def __init__(self):
        HTMLParser.__init__(self, convert_charrefs=True)
        self.root = None
        self.stack = []
        self.cell_text = []
        self.nested_tables = 0
        self.finished = False
        self.repaired = False

    def _close_top(self):
        node = self.stack.pop()
        if node.tag == "td":
            node.text = normalize_plain_text(''.join(self.cell_text))
            self.cell_text = []
        if len(self.stack) == 0:
            self.finished = True

    def _close_until(self, tag, implicit=False):
        # pop up to and including the nearest open `tag`
        tags = [n.tag for n in self.stack]
        if tag not in tags:
            return False
        while self.stack[-1].tag != tag:
            self._close_top()
            if not implicit:
                self.repaired = True
        self._close_top()
        return True

    def handle_starttag(self, tag, attrs):
        if self.finished:
            return
        tag = tag.lower()
        if tag == "th":
            tag = "td"
        if self.root is None:
            if tag == "table":
                self.root = TableTree("table")
                self.stack.append(self.root)
            return
        if tag == "table":
            self.nested_tables += 1
            return
        if self.nested_tables > 0 or tag not in STRUCTURAL_TAGS:
            return
        # implied end tags
        if tag == "td" and any(n.tag == "td" for n in self.stack):
            self._close_until("td", implicit=True)
        elif tag == "tr" and any(n.tag == "tr" for n in self.stack):
            self._close_until("tr", implicit=True)
        elif tag in ("thead", "tbody"):
            for open_tag in ("thead", "tbody"):
                if any(n.tag == open_tag for n in self.stack):
                    self._close_until(open_tag, implicit=True)
        spans = {}
        if tag == "td":
            for key, value in attrs:
                key = key.lower()
                if key in SPAN_KEYS and value is not None:
                    try:
                        v = int(value.strip())
                    except ValueError:
                        continue
                    if v >= 1:
                        spans[key] = v
        node = TableTree(tag, attrs=spans, text="" if tag == "td" else None)
        self.stack[-1].addkid(node)
        self.stack.append(node)

    def handle_startendtag(self, tag, attrs):
        # <td/> style empty cells
        self.handle_starttag(tag, attrs)
        t = tag.lower()
        if t == "th":
            t = "td"
        if not self.finished and self.nested_tables == 0 and \
                t in STRUCTURAL_TAGS and t != "table" and \
                len(self.stack) > 0 and self.stack[-1].tag == t:
            self._close_top()

    def handle_endtag(self, tag):
        if self.finished or self.root is None:
            return
        tag = tag.lower()
        if tag == "th":
            tag = "td"
        if tag == "table" and self.nested_tables > 0:
            self.nested_tables -= 1
            return
        if self.nested_tables > 0 or tag not in STRUCTURAL_TAGS:
            return
        if not self._close_until(tag):
            # stray end tag
            self.repaired = True

    def handle_data(self, data):
        if self.finished:
            return
        if any(n.tag == "td" for n in self.stack):
            self.cell_text.append(data)


def normalize_table(raw):
    """parse an html table into a structural TableTree

    Parameters:
    ----------
        raw : str
            html containing a <table> element
    Returns:
    -------
        TableTree whose root has .repaired set when unclosed or stray
        tags had to be fixed
    """
    builder = _TableTreeBuilder()
    builder.feed(raw or "")
    builder.close()
    if builder.root is None:
        raise NormalizationError("normalize_table(): no <table> element found")
    if not builder.finished:
        builder.repaired = True
        while len(builder.stack) > 0:
            builder._close_top()
    builder.root.repaired = builder.repaired
    return builder.root
