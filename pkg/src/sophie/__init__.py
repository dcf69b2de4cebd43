"""Virtual-patient communication trainer.

Simulates a late-stage cancer patient for clinicians to practice difficult
conversations with, then scores the clinician's side of the dialogue and
renders the numbers as an annotated feedback report.
"""

__version__ = "0.1.0"

from sophie.transcript import (
    Annotation,
    AnnotationKind,
    ParseError,
    Speaker,
    Transcript,
    Turn,
    ValidationError,
    parse_transcript,
    serialize_transcript,
)

__all__ = [
    "Annotation",
    "AnnotationKind",
    "ParseError",
    "Speaker",
    "Transcript",
    "Turn",
    "ValidationError",
    "parse_transcript",
    "serialize_transcript",
    "__version__",
]
