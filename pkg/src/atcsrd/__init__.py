"""Evaluation toolkit for joint ASR and speaker-role tagging of controller/pilot speech."""

from . import acoustics, align, ctc, lexstats, metrics, report, rolecluster, transcript
from .align import DEFAULT_SCHEME, ScoringScheme, needleman_wunsch, score_matrix
from .errors import AtcSrdError
from .metrics import corpus_metrics, per, score_pair, wder, wer
from .transcript import SpeakerRole, TaggedTranscript, Turn, parse_tagged, serialize

__version__ = "0.1.0"

__all__ = [
    "acoustics",
    "align",
    "ctc",
    "lexstats",
    "metrics",
    "report",
    "rolecluster",
    "transcript",
    "DEFAULT_SCHEME",
    "ScoringScheme",
    "needleman_wunsch",
    "score_matrix",
    "AtcSrdError",
    "corpus_metrics",
    "per",
    "score_pair",
    "wder",
    "wer",
    "SpeakerRole",
    "TaggedTranscript",
    "Turn",
    "parse_tagged",
    "serialize",
]
