from .corpus_handler import EvalRecord, SegmentedContent, record_config, \
    parse_record_line, load_dataset
from . import corpus_utils
from .corpus_utils import segment_content
