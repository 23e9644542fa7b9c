"""Kaeriten annotation for reading classical Chinese as Japanese.

A pushdown automaton validates annotations and emits characters in reading
order, a generator writes marks for a given order, and exact counts and
character-level metrics round out the toolkit.
"""

__version__ = "0.1.0"

from .automaton import ValidationResult, pass_rate, run, transduce
from .combinatorics import (brute_force_count, catalan_count, count_result, enumerate_expressible,
                            gf_series_count, stack_of_queues_count)
from .errors import (AlignmentError, CorpusError, InexpressibleError, InvalidAnnotationError, KundokuError,
                     ParseError, SearchLimitExceeded)
from .markgen import annotate, generate_marks, is_expressible, round_trip
from .model import (E, RE, AnnotatedChar, AnnotatedSentence, Order, OrderedSentence, Permutation,
                    parse_annotated, render_annotated)

__all__ = [
    "AlignmentError", "AnnotatedChar", "AnnotatedSentence", "CorpusError", "E", "InexpressibleError",
    "InvalidAnnotationError", "KundokuError", "Order", "OrderedSentence", "ParseError", "Permutation", "RE",
    "SearchLimitExceeded", "ValidationResult", "annotate", "brute_force_count", "catalan_count",
    "count_result", "enumerate_expressible", "generate_marks", "gf_series_count", "is_expressible",
    "parse_annotated", "pass_rate", "render_annotated", "round_trip", "run", "stack_of_queues_count",
    "transduce",
]
