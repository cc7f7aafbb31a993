"""Linear-chain CRF with synthetic start/end tags.

Tags 0..k-1 are real tags; index k is START and k+1 is END, so the transition
matrix is (k+2)x(k+2). Disallowed transitions are masked to -inf for both
training and decoding.
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from nestex.core.corpus import OUTSIDE, split_tag
from nestex.nn.nnkit import ModelParams
from nestex.utils.errors import CrfError, NumericError, ShapeError

NEG_INF = -np.inf


@dataclass(frozen=True)
class TagSet:
    tags: Tuple[str, ...]

    @classmethod
    def from_labels(cls, labels: Sequence[str]) -> "TagSet":
        tags = [OUTSIDE]
        for label in labels:
            tags.extend([f"B-{label}", f"I-{label}"])
        return cls(tuple(tags))

    def __len__(self) -> int:
        return len(self.tags)

    def index(self, tag: str) -> int:
        try:
            return self.tags.index(tag)
        except ValueError:
            raise CrfError(f"tag {tag!r} not in tag set") from None

    def encode(self, tags: Sequence[str]) -> List[int]:
        return [self.index(t) for t in tags]

    def decode(self, ids: Sequence[int]) -> List[str]:
        return [self.tags[i] for i in ids]


def bio_mask(tagset: TagSet) -> np.ndarray:
    """Allowed transitions: I-x only after B-x or I-x; START never enters I-x."""
    k = len(tagset)
    start, end = k, k + 1
    mask = np.zeros((k + 2, k + 2), dtype=bool)
    parsed = [split_tag(t) for t in tagset.tags]
    for j, (prefix_j, label_j) in enumerate(parsed):
        mask[start, j] = prefix_j != "I"
        for i, (prefix_i, label_i) in enumerate(parsed):
            mask[i, j] = prefix_j != "I" or (prefix_i in ("B", "I") and label_i == label_j)
    mask[:k, end] = True
    return mask


@dataclass
class CrfLayer:
    name: str
    k: int
    mask: np.ndarray

    @classmethod
    def for_tagset(cls, name: str, tagset: TagSet) -> "CrfLayer":
        return cls(name, len(tagset), bio_mask(tagset))

    @property
    def start(self) -> int:
        return self.k

    @property
    def end(self) -> int:
        return self.k + 1

    def init_params(self, params: ModelParams) -> None:
        params.add(self.param_name, (self.k + 2, self.k + 2), init="zeros")

    @property
    def param_name(self) -> str:
        return f"{self.name}.A"

    def transitions(self, A: np.ndarray) -> np.ndarray:
        if A.shape != (self.k + 2, self.k + 2):
            raise ShapeError(f"{self.name}: transition matrix {A.shape} for k={self.k}")
        return np.where(self.mask, A, NEG_INF)


def _check(F: np.ndarray, crf: CrfLayer) -> None:
    if F.ndim != 2 or F.shape[1] != crf.k or F.shape[0] < 1:
        raise ShapeError(f"{crf.name}: emissions {F.shape} for k={crf.k}")
    if not np.all(np.isfinite(F)):
        raise NumericError(f"{crf.name}: non-finite emission scores")


def sequence_score(F: np.ndarray, crf: CrfLayer, A: np.ndarray, z: Sequence[int]) -> float:
    _check(F, crf)
    if len(z) != F.shape[0]:
        raise ShapeError(f"{crf.name}: tag sequence of length {len(z)} for {F.shape[0]} tokens")
    T = crf.transitions(A)
    score = T[crf.start, z[0]] + T[z[-1], crf.end]
    for i in range(len(z) - 1):
        score += T[z[i], z[i + 1]]
    return float(score + F[np.arange(len(z)), list(z)].sum())


def _forward(F: np.ndarray, T: np.ndarray, k: int) -> np.ndarray:
    n = F.shape[0]
    alpha = np.empty((n, k))
    alpha[0] = T[k, :k] + F[0]
    for i in range(1, n):
        alpha[i] = logsumexp(alpha[i - 1][:, None] + T[:k, :k], axis=0) + F[i]
    return alpha


def _backward(F: np.ndarray, T: np.ndarray, k: int) -> np.ndarray:
    n = F.shape[0]
    beta = np.empty((n, k))
    beta[n - 1] = T[:k, k + 1]
    for i in range(n - 2, -1, -1):
        beta[i] = logsumexp(T[:k, :k] + (F[i + 1] + beta[i + 1])[None, :], axis=1)
    return beta


def log_partition(F: np.ndarray, crf: CrfLayer, A: np.ndarray) -> float:
    _check(F, crf)
    T = crf.transitions(A)
    alpha = _forward(F, T, crf.k)
    return float(logsumexp(alpha[-1] + T[:crf.k, crf.end], axis=0))


@dataclass
class Marginals:
    unary: np.ndarray      # (n, k)
    pairwise: np.ndarray   # (n-1, k, k)
    start: np.ndarray      # (k,) P(z_0 = j)
    end: np.ndarray        # (k,) P(z_{n-1} = j)
    log_z: float


def marginals(F: np.ndarray, crf: CrfLayer, A: np.ndarray) -> Marginals:
    _check(F, crf)
    k = crf.k
    T = crf.transitions(A)
    alpha = _forward(F, T, k)
    beta = _backward(F, T, k)
    log_z = float(logsumexp(alpha[-1] + T[:k, crf.end], axis=0))
    if not np.isfinite(log_z):
        raise CrfError(f"{crf.name}: no legal tag sequence")
    unary = np.exp(alpha + beta - log_z)
    n = F.shape[0]
    pairwise = np.empty((max(n - 1, 0), k, k))
    for i in range(n - 1):
        pairwise[i] = np.exp(alpha[i][:, None] + T[:k, :k] + (F[i + 1] + beta[i + 1])[None, :] - log_z)
    return Marginals(unary, pairwise, unary[0].copy(), unary[-1].copy(), log_z)


def viterbi(F: np.ndarray, crf: CrfLayer, A: np.ndarray) -> Tuple[List[int], float]:
    """Best legal path; among equal scores, the lexicographically smallest tag path."""
    _check(F, crf)
    k = crf.k
    T = crf.transitions(A)
    n = F.shape[0]
    # suffix[i, t]: best score of positions i..n-1 (plus END) given z_i = t
    suffix = np.empty((n, k))
    suffix[n - 1] = F[n - 1] + T[:k, crf.end]
    for i in range(n - 2, -1, -1):
        suffix[i] = F[i] + np.max(T[:k, :k] + suffix[i + 1][None, :], axis=1)
    first = T[crf.start, :k] + suffix[0]
    best = float(np.max(first))
    if not np.isfinite(best):
        raise CrfError(f"{crf.name}: every tag path is masked")
    path = [int(np.argmax(first))]
    for i in range(1, n):
        path.append(int(np.argmax(T[path[-1], :k] + suffix[i])))
    return path, best


def nll_and_grads(F: np.ndarray, crf: CrfLayer, A: np.ndarray,
                  gold: Sequence[int]) -> Tuple[float, np.ndarray, np.ndarray]:
    """-log p(gold | F) with gradients w.r.t. emissions and transitions."""
    gold = list(gold)
    gold_score = sequence_score(F, crf, A, gold)
    if not np.isfinite(gold_score):
        raise CrfError(f"{crf.name}: gold tag sequence uses a masked transition")
    marg = marginals(F, crf, A)
    n, k = F.shape
    dF = marg.unary.copy()
    dF[np.arange(n), gold] -= 1.0
    dA = np.zeros((k + 2, k + 2))
    if n > 1:
        dA[:k, :k] = marg.pairwise.sum(axis=0)
    dA[crf.start, :k] = marg.start
    dA[:k, crf.end] += marg.end
    dA[crf.start, gold[0]] -= 1.0
    dA[gold[-1], crf.end] -= 1.0
    for i in range(n - 1):
        dA[gold[i], gold[i + 1]] -= 1.0
    return max(marg.log_z - gold_score, 0.0), dF, dA

