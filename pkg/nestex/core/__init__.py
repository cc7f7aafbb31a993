from .corpus import LabelVocab, Sentence, Span, parse_jsonl, read_jsonl, write_jsonl
from .decoder import BeamConfig, EventGraph, decode
from .metrics import Report, evaluate
from .synth import GenConfig, generate

# extractors, trainer and checkpoint import nestex.nn, which imports corpus; import them directly
__all__ = ['LabelVocab', 'Sentence', 'Span', 'parse_jsonl', 'read_jsonl', 'write_jsonl',
           'BeamConfig', 'EventGraph', 'decode', 'Report', 'evaluate', 'GenConfig', 'generate']
