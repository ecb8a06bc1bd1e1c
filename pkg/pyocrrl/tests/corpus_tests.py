import os
import tempfile


def parse_record_line_test():
    from pyocrrl.corpus import parse_record_line
    r = parse_record_line('{"id": "r1", "domain": "table", "prediction": ' \
                          '"<table></table>", "ground_truth": "<table>' \
                          '</table>", "extra": 1}')
    assert r.id == "r1"
    assert r.domain == "table"
    assert r.gt_image_path is None
    assert not r.is_vision

    r = parse_record_line('{"id": "c1", "domain": "chart", "prediction": ' \
                          '"x", "ground_truth": "y", "gt_image_path": "a.png"}')
    assert r.is_vision
    assert r.expected_format == "python_plot"
    assert r.gt_image_path == "a.png"


def parse_record_line_errors_test():
    from pyocrrl.corpus import parse_record_line
    from pyocrrl.errors import ParseError, SchemaError, DomainError
    try:
        parse_record_line('{"id": "r1", "domain": ', line_number=7)
    except ParseError as e:
        assert "line 7" in str(e)
    else:
        raise Exception("should have failed")

    try:
        parse_record_line('{"id": "r1", "domain": "table", "prediction": "x"}',
                          line_number=3)
    except SchemaError as e:
        assert "ground_truth" in str(e)
        assert "line 3" in str(e)
    else:
        raise Exception("should have failed")

    try:
        parse_record_line('{"id": "r1", "domain": "table", "prediction": 1, ' \
                          '"ground_truth": "x"}')
    except SchemaError as e:
        assert "prediction" in str(e)
    else:
        raise Exception("should have failed")

    try:
        parse_record_line('{"id": "r1", "domain": "poem", "prediction": "x", ' \
                          '"ground_truth": "x"}')
    except DomainError as e:
        assert "poem" in str(e)
    else:
        raise Exception("should have failed")


def load_dataset_test():
    from pyocrrl.corpus import load_dataset
    from pyocrrl.tests.fixture_utils import FIXTURE20
    records = load_dataset(FIXTURE20)
    assert len(records) == 20
    assert records[0].id == "doc_01"
    assert len(set(r.id for r in records)) == 20
    assert sum(1 for r in records if r.is_vision) == 6


def load_dataset_duplicate_test():
    from pyocrrl.corpus import load_dataset
    from pyocrrl.errors import DatasetError
    line_a = '{"id": "x", "domain": "formula", "prediction": "a", ' \
             '"ground_truth": "a"}'
    line_b = '{"id": "y", "domain": "formula", "prediction": "a", ' \
             '"ground_truth": "a"}'
    tmp = tempfile.mkdtemp()
    path = os.path.join(tmp, "dup.jsonl")
    with open(path, 'w') as f:
        f.write('\n'.join([line_a, line_b, "", "", line_a]) + '\n')
    try:
        load_dataset(path)
    except DatasetError as e:
        assert "'x'" in str(e)
        assert "lines 1 and 5" in str(e)
    else:
        raise Exception("should have failed")

    try:
        load_dataset(os.path.join(tmp, "missing.jsonl"))
    except DatasetError:
        pass
    else:
        raise Exception("should have failed")


def record_line_roundtrip_test():
    from pyocrrl.corpus import load_dataset, parse_record_line
    from pyocrrl.corpus.corpus_utils import write_dataset
    from pyocrrl.tests.fixture_utils import FIXTURE20
    records = load_dataset(FIXTURE20)
    for r in records:
        assert parse_record_line(r.to_line()) == r
    tmp = tempfile.mkdtemp()
    path = os.path.join(tmp, "copy.jsonl")
    write_dataset(records, path)
    assert load_dataset(path) == records


def segment_content_test():
    from pyocrrl.corpus import segment_content
    seg = segment_content("Energy $E=mc^2$ holds.")
    assert seg.text_spans == ("Energy ", " holds.")
    assert seg.formulas == ("E=mc^2",)
    assert seg.tables == ()

    table = "<table><tr><td>1</td></tr></table>"
    seg = segment_content("A " + table + " B")
    assert seg.text_spans == ("A ", " B")
    assert seg.tables == (table,)

    seg = segment_content("")
    assert seg.is_empty

    seg = segment_content("$$a$$ and \\[b\\] and $c$")
    assert seg.formulas == ("a", "b", "c")
    assert seg.text_spans == (" and ", " and ")

    # escaped dollar is text
    seg = segment_content("costs \\$5 today")
    assert seg.formulas == ()
    assert seg.text_spans == ("costs \\$5 today",)

    # <tables> is not a table tag
    seg = segment_content("see <tables> here")
    assert seg.tables == ()


def segment_content_render_test():
    from pyocrrl.corpus import segment_content
    sources = ["Energy $E=mc^2$ holds.",
               "x <TABLE border=1><tr><td>1</td></tr></TABLE> y $$z$$",
               "\\[a\\]b$c$",
               "plain only",
               ""]
    for s in sources:
        assert segment_content(s).render() == s


def segment_content_non_ascii_test():
    from pyocrrl.corpus import segment_content
    # "İ" lowercases to two characters
    source = "İİ<table><tr><td>1</td></tr></table>$$a+b$$"
    seg = segment_content(source)
    assert seg.tables == ("<table><tr><td>1</td></tr></table>",)
    assert seg.formulas == ("a+b",)
    assert seg.render() == source
    source = "İ<Table><tr><td>ß</td></tr></TABLE> été $x$"
    seg = segment_content(source)
    assert seg.tables == ("<Table><tr><td>ß</td></tr></TABLE>",)
    assert seg.formulas == ("x",)
    assert seg.render() == source


def segment_content_random_test():
    import numpy as np
    from pyocrrl.corpus import segment_content
    words = ["plain", "İstanbul", "été", "Straße", " ", "\n", "x = 1",
             "café au lait", "ΑΒΓ", "İİ", "100%"]
    tex = ["a+b", "\\frac{1}{2}", "x_i^2", "\\alpha", "é", "İ"]
    tables = ["<table><tr><td>1</td></tr></table>",
              "<TABLE><tr><td>İ</td></tr></TABLE>",
              "<table border=1><tr><td>a</td><td>b</td></tr></table>",
              "<Table>\n<tr><td>ß</td></tr></Table>"]
    rng = np.random.default_rng(20)
    for _ in range(300):
        pieces = []
        for _ in range(rng.integers(0, 8)):
            kind = rng.integers(0, 5)
            if kind == 0:
                pieces.append(words[rng.integers(len(words))])
            elif kind == 1:
                pieces.append("$" + tex[rng.integers(len(tex))] + "$")
            elif kind == 2:
                pieces.append("$$" + tex[rng.integers(len(tex))] + "$$")
            elif kind == 3:
                pieces.append("\\[" + tex[rng.integers(len(tex))] + "\\]")
            else:
                pieces.append(tables[rng.integers(len(tables))])
            # keep "$" spans from running into each other
            pieces.append(" ")
        source = "".join(pieces)
        assert segment_content(source).render() == source, source


def segment_content_unclosed_test():
    from pyocrrl.corpus import segment_content
    from pyocrrl.errors import SegmentationError
    try:
        segment_content("été $x + 1")
    except SegmentationError as e:
        # "été " is 6 bytes
        assert "byte offset 6" in str(e)
    else:
        raise Exception("should have failed")

    try:
        segment_content("a <table><tr><td>1</td></tr>")
    except SegmentationError as e:
        assert "byte offset 2" in str(e)
    else:
        raise Exception("should have failed")


def segment_record_side_test():
    from pyocrrl.corpus.corpus_utils import segment_record_side
    seg = segment_record_side("  \\frac{a}{b} ", "formula")
    assert seg.formulas == ("\\frac{a}{b}",)
    assert seg.text_spans == ()
    seg = segment_record_side("\\frac{a}{b}", "text_doc")
    assert seg.formulas == ()
    seg = segment_record_side("$x$", "formula")
    assert seg.formulas == ("x",)
    seg = segment_record_side("<tr><td>1</td></tr>", "table")
    assert seg.tables == ("<table><tr><td>1</td></tr></table>",)
    assert seg.text_spans == () and seg.formulas == ()
    seg = segment_record_side(" <TBODY><tr><td>1</td></tr></TBODY>",
                              "table")
    assert len(seg.tables) == 1
    seg = segment_record_side("<tr><td>1</td></tr>", "text_doc")
    assert seg.tables == ()
    table = "<table><tr><td>1</td></tr></table>"
    assert segment_record_side(table, "table").tables == (table,)


def segment_record_side_bare_rows_test():
    from pyocrrl.corpus.corpus_utils import segment_record_side
    from pyocrrl.rt import aggregate_text_reward
    rows = "<tr><td>1</td><td>2</td></tr>"
    reward = aggregate_text_reward(segment_record_side(rows, "table"),
                                   segment_record_side(rows, "table"))
    assert reward.per_type["table"] == 1.0
    assert reward.table_teds == 1.0
    wrapped = aggregate_text_reward(
        segment_record_side(rows, "table"),
        segment_record_side("<table>" + rows + "</table>", "table"))
    assert wrapped.per_type["table"] == 1.0


if __name__ == "__main__":
    parse_record_line_test()
    parse_record_line_errors_test()
    load_dataset_test()
    load_dataset_duplicate_test()
    record_line_roundtrip_test()
    segment_content_test()
    segment_content_render_test()
    segment_content_non_ascii_test()
    segment_content_random_test()
    segment_content_unclosed_test()
    segment_record_side_test()
    segment_record_side_bare_rows_test()
