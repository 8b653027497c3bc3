"""Ground truth, stream generators, the adaptive adversary and error measurement."""
from .adversary import AdversaryTranscript, KeepSmallest, build_adversary_stream
from .measure import ErrorReport, ExactSketch, SketchFactory, measure_error
from .oracle import RankOracle
from .streams import GENERATORS, gen_stream, tree_instance

__all__ = [
    "AdversaryTranscript",
    "ErrorReport",
    "ExactSketch",
    "GENERATORS",
    "KeepSmallest",
    "RankOracle",
    "SketchFactory",
    "build_adversary_stream",
    "gen_stream",
    "measure_error",
    "tree_instance",
]
