from .nnkit import MLP, ModelParams, adam_step, grad_check
from .crf import CrfLayer, TagSet, viterbi, log_partition
from .encoder import SentenceEncoder, TokenVocab

__all__ = ['MLP', 'ModelParams', 'adam_step', 'grad_check', 'CrfLayer', 'TagSet', 'viterbi',
           'log_partition', 'SentenceEncoder', 'TokenVocab']
