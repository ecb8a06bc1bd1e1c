from .corpus import EvalRecord, SegmentedContent, load_dataset, \
    segment_content
from .norm import normalize_latex, normalize_plain_text, normalize_table
from .tree import TableTree, EditCosts, tree_edit_distance, teds, teds_s
from .rt import text_edit_reward, formula_bleu_reward, table_reward, \
    aggregate_text_reward
from .rv import EmbeddingVector, VisionRewardConfig, RasterImage, \
    multiscale_vision_reward, stub_embed, remote_embed, \
    format_alignment_reward
from .render import Renderer, render_via_command
from .grpo import RolloutGroup, group_advantages, clipped_objective, \
    entropy_filter, simulate_toy_policy
from .bench import Bench, BenchReport, overall_score, aggregate_report
from .config import RunConfig
