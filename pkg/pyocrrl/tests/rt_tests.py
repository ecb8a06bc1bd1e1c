import numpy as np


def levenshtein_test():
    from pyocrrl.rt import levenshtein
    assert levenshtein("", "") == 0
    assert levenshtein("abc", "abd") == 1
    assert levenshtein("kitten", "sitting") == 3
    # code points, not bytes
    assert levenshtein("été", "ete") == 2


def text_edit_reward_test():
    from pyocrrl.rt import text_edit_reward
    assert text_edit_reward("abc", "abc") == 1.0
    assert abs(text_edit_reward("abc", "abd") - (1.0 - 1.0 / 3.0)) < 1.0e-12
    assert text_edit_reward("", "x") == 0.0
    assert text_edit_reward("", "") == 1.0
    assert text_edit_reward("abcd", "ab") == text_edit_reward("ab", "abcd")

    gt = "the quick brown fox"
    prev = text_edit_reward(gt, gt)
    for garbage in ("!", "!!", "!!!x"):
        r = text_edit_reward(gt + garbage, gt)
        assert r < prev
        prev = r


def bleu_test():
    from pyocrrl.rt import formula_bleu_reward, bleu
    assert formula_bleu_reward("\\frac{a}{b}", "\\dfrac{a}{b}") == 1.0
    assert formula_bleu_reward("", "x + 1") == 0.0
    assert formula_bleu_reward("x", "   ") is None

    # tokens [a, +, b] vs [a, +, c]: p = 2/3, 2/3, 1/2, 1 and no brevity
    # penalty
    r = formula_bleu_reward("a + b", "a + c")
    assert abs(r - (2.0 / 9.0) ** 0.25) < 1.0e-12
    assert abs(r - 0.686589) < 1.0e-6

    # short candidate is penalized
    short = bleu(["a", "+"], ["a", "+", "c"])
    assert short < bleu(["a", "+", "c"], ["a", "+", "c"])
    assert bleu(["x"], ["a", "b"]) == 0.0


def table_reward_test():
    from pyocrrl.rt import table_reward
    gt = "<table><tr><td>1</td><td>2</td></tr></table>"
    assert table_reward(gt, gt) == 1.0
    assert abs(table_reward("<table><tr><td>1</td></tr></table>", gt) -
               0.75) < 1.0e-12
    warnings = []
    assert table_reward("no table here", gt, warnings) == 0.0
    assert len(warnings) == 1


def aggregate_text_reward_test():
    from pyocrrl.corpus import SegmentedContent, segment_content
    from pyocrrl.rt import aggregate_text_reward
    gt = segment_content("Hello   world")
    r = aggregate_text_reward(segment_content("Hello world"), gt)
    assert r.per_type == {"plain_text": 1.0}
    assert r.aggregate == 1.0
    assert not r.unscoreable

    gt_table = "<table><tr><td>a</td><td>b</td></tr></table>"
    pred_table = "<table><tr><td colspan=2>a</td><td colspan=2>b</td>" \
                 "</tr></table>"
    r = aggregate_text_reward(segment_content("intro " + pred_table),
                              segment_content("intro " + gt_table))
    assert r.per_type["plain_text"] == 1.0
    assert abs(r.per_type["table"] - 0.5) < 1.0e-12
    assert abs(r.aggregate - 0.75) < 1.0e-12
    assert r.table_teds is not None and r.table_teds <= r.per_type["table"]

    r = aggregate_text_reward(segment_content("anything"), SegmentedContent())
    assert r.aggregate == 0.0
    assert r.unscoreable
    assert r.per_type == {}


def aggregate_text_reward_pairing_test():
    from pyocrrl.corpus import segment_content
    from pyocrrl.rt import aggregate_text_reward
    # second ground truth formula has no prediction and scores 0; the
    # extra predicted table is ignored
    r = aggregate_text_reward(
        segment_content("$x$ <table><tr><td>1</td></tr></table>"),
        segment_content("$x$ and $y$"))
    assert r.per_type["formula"] == 0.5
    assert "table" not in r.per_type
    assert r.per_type["plain_text"] == 0.0
    assert abs(r.aggregate - 0.25) < 1.0e-12

    # an empty ground truth formula is skipped with a warning
    r = aggregate_text_reward(segment_content("$a$"),
                              segment_content("$a$ $\\,$"))
    assert r.per_type["formula"] == 1.0
    assert len(r.warnings) == 1


def aggregate_text_reward_random_test():
    from pyocrrl.corpus import SegmentedContent
    from pyocrrl.rt import aggregate_text_reward
    rng = np.random.default_rng(17)
    words = ["alpha", "beta", "gamma", "delta", ""]
    formulas = ["a + b", "\\frac{1}{2}", "x^{2}", "\\sum_{i} i", "\\alpha"]
    tables = ["<table><tr><td>1</td></tr></table>",
              "<table><tr><td>1</td><td>2</td></tr></table>",
              "<table><tr><td colspan=2>x</td></tr><tr><td>y</td></tr>"
              "</table>",
              "not a table"]

    def pick(pool, k):
        return tuple(str(pool[i]) for i in rng.integers(0, len(pool), size=k))

    def content():
        return SegmentedContent(text_spans=pick(words, int(rng.integers(0, 3))),
                                formulas=pick(formulas,
                                              int(rng.integers(0, 3))),
                                tables=pick(tables[:3],
                                            int(rng.integers(0, 3))))

    for _ in range(100):
        gt = content()
        pred = content()
        r = aggregate_text_reward(pred, gt)
        for v in r.per_type.values():
            assert 0.0 <= v <= 1.0
        if len(r.per_type) > 0:
            mean = sum(r.per_type.values()) / len(r.per_type)
            assert abs(r.aggregate - mean) < 1.0e-12
        else:
            assert r.unscoreable and r.aggregate == 0.0
        same = aggregate_text_reward(gt, gt)
        for v in same.per_type.values():
            assert v == 1.0


if __name__ == "__main__":
    levenshtein_test()
    text_edit_reward_test()
    bleu_test()
    table_reward_test()
    aggregate_text_reward_test()
    aggregate_text_reward_pairing_test()
    aggregate_text_reward_random_test()
