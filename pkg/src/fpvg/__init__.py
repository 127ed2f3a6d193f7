"""Faithful & plausible visual grounding metrics for VQA prediction runs.

A question counts as well grounded when the model's answer survives
restriction of the visual input to the question-relevant objects and
changes when only irrelevant objects remain. This package partitions
detected objects by relevance, emits the per-condition input manifests,
and computes the grounding report plus its companion analyses from the
resulting prediction runs.
"""

from .conditions import Condition
from .errors import EvaluationError, FpvgError, GenerationError, ValidationError
from .geometry import BoundingBox, coverage_fraction, iou, max_overlap_stats
from .importance import (
    GroupedRankingMatch,
    RankingMatchScore,
    loo_importance,
    ranking_match,
    ranking_match_by_fpvg,
)
from .ingest import (
    DetectionSet,
    ImportanceVector,
    PredictionRecord,
    PredictionRun,
    QuestionRecord,
    answers_equal,
    normalize_answer,
    parse_detections,
    parse_importance,
    parse_predictions,
    parse_questions,
)
from .manifest import Manifest, build_condition_manifests, build_loo_manifests
from .metrics import (
    FpvgAggregates,
    FpvgCategory,
    QuestionOutcome,
    aggregate,
    categorize,
    comprehensiveness,
    evaluate_questions,
    flip_rate_by_category,
    fpvg_question,
    mod_fpvg_question,
    suff_comp_quadrants,
    sufficiency,
)
from .analysis import C2iRatio, c2i, compare_splits, compare_splits_multi, degradation
from .relevance import (
    DropReport,
    RelevanceAssignment,
    RelevanceConfig,
    assign_relevance,
    filter_eligible,
)
from .reporting import ReportConfig, build_report
from .synthetic import (
    SyntheticModelKind,
    SyntheticWorld,
    SyntheticWorldConfig,
    generate_world,
    run_model,
)

__version__ = "0.1.0"
