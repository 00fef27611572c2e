"""Forum graphs, survival analysis and dropout prediction for MOOC course logs."""

from .errors import (
    DataError,
    IntegrityError,
    MoocAttritionError,
    NumericError,
    ParseError,
    UsageError,
)
from .featurize import LABELS, WeeklyFeatureTable, assemble_weekly, compute_labels, last_active_week
from .forum_graph import InteractionGraph, build_graph, graph_stats
from .graph_metrics import betweenness, degrees, dropped_out_neighbors, hits
from .ingest import (
    CourseConfig,
    CourseData,
    EventRecord,
    ForumPost,
    StudentOutcome,
    active_students,
    dataset_summary,
    filter_on_schedule,
    load_course,
    save_course,
    week_of,
)
from .survival import CoxFit, cox_fit, hazard_report, standardize, to_survival_records
from .synth import SynthConfig, generate_course, twin_courses

__version__ = "0.1.0"
