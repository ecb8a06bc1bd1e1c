from __future__ import print_function, division
import numpy as np
import Levenshtein

from pyocrrl.errors import ContractError


SPAN_KEYS = ("rowspan", "colspan")


class TableTree(object):
    """a rooted, ordered, labeled tree node for table structure

    Parameters:
    ----------
        tag : str
            node label ("table", "thead", "tbody", "tr", "td")
        attrs : dict
            at most the keys rowspan and colspan, positive ints
        text : str
            cell text, leaf td only (None elsewhere)
        children : list of TableTree

    Note:
    ----
        a TableTree is the root node; every node is itself a TableTree.
        children order is significant
    """
    def __init__(self, tag, attrs=None, text=None, children=None):
        self.tag = tag
        self.attrs = {}
        if attrs:
            for key, value in attrs.items():
                if key not in SPAN_KEYS:
                    raise ContractError("TableTree: attribute '{0}' not " \
                                        "allowed".format(key))
                value = int(value)
                if value < 1:
                    raise ContractError("TableTree: {0} must be >= 1, " \
                                        "not {1}".format(key, value))
                self.attrs[key] = value
        self.text = text
        self.children = list(children) if children else []
        # set by normalize_table() when unclosed tags were repaired
        self.repaired = False

    def addkid(self, node):
        self.children.append(node)
        return self

    @property
    def span(self):
        """effective (rowspan, colspan), defaulting to 1"""
        return (self.attrs.get("rowspan", 1), self.attrs.get("colspan", 1))

    @property
    def size(self):
        """number of nodes in the tree rooted here"""
        return 1 + sum(c.size for c in self.children)

    def iter(self):
        """preorder traversal"""
        yield self
        for c in self.children:
            for n in c.iter():
                yield n

    def validate(self):
        if self.tag != "table":
            raise ContractError("TableTree.validate(): root tag must be " \
                                "'table', not '{0}'".format(self.tag))

    def bracket(self):
        """tree in bracket notation"""
        label = self.tag
        if self.attrs:
            label += "[" + ",".join("{0}={1}".format(k, self.attrs[k])
                                    for k in sorted(self.attrs)) + "]"
        if self.text is not None:
            label += '"' + self.text + '"'
        return "{" + label + ''.join(c.bracket() for c in self.children) + "}"

    def __eq__(self, other):
        if not isinstance(other, TableTree):
            return NotImplemented
        return self.tag == other.tag and self.span == other.span and \
               self.text == other.text and \
               len(self.children) == len(other.children) and \
               all(a == b for a, b in zip(self.children, other.children))

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __repr__(self):
        return "TableTree(" + self.bracket() + ")"


def normalized_text_distance(a, b):
    """levenshtein distance over the longer length, 0 for two empties"""
    a = a or ""
    b = b or ""
    n = max(len(a), len(b))
    if n == 0:
        return 0.0
    return Levenshtein.distance(a, b) / n


class EditCosts(object):
    """cost model for tree edit distance

    Parameters:
    ----------
        insert : float
            cost of inserting any node
        delete : float
            cost of deleting any node
        rename : callable(node_a, node_b) -> float
            relabel cost; must be 0 for equal labels, symmetric and >= 0

    """
    def __init__(self, insert=1.0, delete=1.0, rename=None):
        if insert < 0.0 or delete < 0.0:
            raise ContractError("EditCosts: insert and delete costs must " \
                                "be nonnegative")
        self.insert = float(insert)
        self.delete = float(delete)
        self.rename = rename if rename is not None else unit_rename

    @classmethod
    def unit(cls):
        return cls(1.0, 1.0, unit_rename)

    @classmethod
    def teds(cls):
        return cls(1.0, 1.0, teds_rename)

    @classmethod
    def teds_structure(cls):
        return cls(1.0, 1.0, teds_s_rename)


def unit_rename(a, b):
    if a.tag == b.tag and a.span == b.span and a.text == b.text:
        return 0.0
    return 1.0


def teds_rename(a, b):
    """1 when tags or spans differ, else normalized cell-text distance"""
    if a.tag != b.tag or a.span != b.span:
        return 1.0
    if a.tag == "td":
        return normalized_text_distance(a.text, b.text)
    return 0.0


def teds_s_rename(a, b):
    """structure only: cell text is ignored"""
    if a.tag != b.tag or a.span != b.span:
        return 1.0
    return 0.0


class _AnnotatedTree(object):
    """postorder numbering, leftmost leaf descendants and keyroots"""
    def __init__(self, root):
        self.nodes = []
        self.lmds = []
        self._walk(root)
        keyroots = {}
        for i, lmd in enumerate(self.lmds):
            keyroots[lmd] = i
        self.keyroots = sorted(keyroots.values())

    def _walk(self, node):
        first = None
        for c in node.children:
            lmd = self._walk(c)
            if first is None:
                first = lmd
        idx = len(self.nodes)
        if first is None:
            first = idx
        self.nodes.append(node)
        self.lmds.append(first)
        return first


def tree_edit_distance(a, b, costs=None):
    """ordered tree edit distance by the keyroot dynamic program

    Parameters:
    ----------
        a : TableTree
        b : TableTree
        costs : EditCosts
            defaults to unit costs
    Returns:
    -------
        float : minimum total cost of insertions, deletions and renames
            turning a into b
    """
    if a is None or b is None:
        raise ContractError("tree_edit_distance(): both trees must be " \
                            "non-empty")
    if costs is None:
        costs = EditCosts.unit()
    A = _AnnotatedTree(a)
    B = _AnnotatedTree(b)
    na, nb = len(A.nodes), len(B.nodes)
    treedists = np.zeros((na, nb), dtype=np.float64)
    ins, dele, ren = costs.insert, costs.delete, costs.rename

    for i in A.keyroots:
        for j in B.keyroots:
            al, bl = A.lmds[i], B.lmds[j]
            m = i - al + 2
            n = j - bl + 2
            fd = np.zeros((m, n), dtype=np.float64)
            ioff = al - 1
            joff = bl - 1
            for x in range(1, m):
                fd[x, 0] = fd[x - 1, 0] + dele
            for y in range(1, n):
                fd[0, y] = fd[0, y - 1] + ins
            for x in range(1, m):
                for y in range(1, n):
                    if A.lmds[x + ioff] == al and B.lmds[y + joff] == bl:
                        # both prefixes are whole trees
                        fd[x, y] = min(fd[x - 1, y] + dele,
                                       fd[x, y - 1] + ins,
                                       fd[x - 1, y - 1] +
                                       ren(A.nodes[x + ioff],
                                           B.nodes[y + joff]))
                        treedists[x + ioff, y + joff] = fd[x, y]
                    else:
                        p = A.lmds[x + ioff] - 1 - ioff
                        q = B.lmds[y + joff] - 1 - joff
                        fd[x, y] = min(fd[x - 1, y] + dele,
                                       fd[x, y - 1] + ins,
                                       fd[p, q] +
                                       treedists[x + ioff, y + joff])
    return float(treedists[na - 1, nb - 1])


def _similarity(a, b, costs):
    a.validate()
    b.validate()
    n = max(a.size, b.size)
    d = tree_edit_distance(a, b, costs)
    return min(1.0, max(0.0, 1.0 - d / n))


def teds(a, b):
    """tree edit distance based similarity, cell content included"""
    return _similarity(a, b, EditCosts.teds())


def teds_s(a, b):
    """structure-only tree edit distance based similarity"""
    return _similarity(a, b, EditCosts.teds_structure())
