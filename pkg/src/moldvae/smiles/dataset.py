"""Corpus filtering, salt removal, train/valid split and vocabulary build.

Filtering keeps strings of at most ``max_len`` characters whose atoms all
come from the organic subset {B, C, N, O, P, S, F, Cl, Br, I} and which
lex, parse and pass the valence check.  Multi-fragment inputs (salts) are
reduced to the fragment with the most heavy atoms before filtering.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .mol import MolGraph, check_valence, parse
from .tokenizer import SmilesError, Token, TokenKind, Vocabulary, detokenize, tokenize

ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})

REJECTION_CAUSES = ("blank", "lex_error", "parse_error", "too_long", "non_organic", "valence_error")


class EmptyCorpus(ValueError):
    pass


@dataclass
class PreparationReport:
    kept: int = 0
    rejected: dict[str, int] = field(default_factory=lambda: {c: 0 for c in REJECTION_CAUSES})
    salts_reduced: int = 0

    def save_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["cause", "count"])
            for cause in REJECTION_CAUSES:
                w.writerow([cause, self.rejected[cause]])


def _split_fragments(tokens: list[Token]) -> list[list[Token]]:
    frags: list[list[Token]] = [[]]
    for t in tokens:
        if t.kind == TokenKind.DOT:
            frags.append([])
        else:
            frags[-1].append(t)
    return [f for f in frags if f]


def _largest_fragment(tokens: list[Token]) -> tuple[list[Token], MolGraph] | None:
    """Pick the parseable fragment with the most heavy atoms.

    Ties break to the longest string, then the lexicographically first.
    Returns None when no fragment parses.
    """
    best = None
    for frag in _split_fragments(tokens):
        try:
            g = parse(frag)
        except SmilesError:
            continue
        text = detokenize(frag)
        key = (len(g.atoms), len(text), [-ord(c) for c in text])
        if best is None or key > best[0]:
            best = (key, frag, g)
    if best is None:
        return None
    return best[1], best[2]


def clean_line(line: str, max_len: int = 200) -> tuple[str, list[Token]] | str:
    """Apply salt removal and all filters to one corpus line.

    Returns (cleaned smiles, tokens) on success, or the rejection cause.
    """
    text = line.strip()
    if not text:
        return "blank"
    try:
        tokens = tokenize(text)
    except SmilesError:
        return "lex_error"
    picked = _largest_fragment(tokens)
    if picked is None:
        return "parse_error"
    frag, graph = picked
    cleaned = detokenize(frag)
    if len(cleaned) > max_len:
        return "too_long"
    if not graph.atoms:
        return "parse_error"
    if any(a.element not in ORGANIC_SUBSET for a in graph.atoms):
        return "non_organic"
    if not check_valence(graph).valid:
        return "valence_error"
    return cleaned, frag


def prepare_dataset(
    lines: list[str], max_len: int = 200, seed: int = 0
) -> tuple[list[str], list[str], Vocabulary, PreparationReport]:
    """Filter a raw corpus and produce a seeded 80/20 train/valid split.

    The vocabulary is built from the train split only, plus the four
    special tokens.  Raises EmptyCorpus when nothing survives.
    """
    report = PreparationReport()
    kept: list[tuple[str, list[Token]]] = []
    for line in lines:
        outcome = clean_line(line, max_len=max_len)
        if isinstance(outcome, str):
            report.rejected[outcome] += 1
            continue
        cleaned, tokens = outcome
        if cleaned != line.strip():
            report.salts_reduced += 1
        kept.append((cleaned, tokens))
    if not kept:
        raise EmptyCorpus("no molecule survived filtering")
    report.kept = len(kept)

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    order = rng.permutation(len(kept))
    n_train = int(0.8 * len(kept))
    train_idx, valid_idx = order[:n_train], order[n_train:]
    train = [kept[i][0] for i in train_idx]
    valid = [kept[i][0] for i in valid_idx]
    vocab = Vocabulary.from_corpus([kept[i][1] for i in train_idx])
    return train, valid, vocab, report


def load_corpus(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [ln.rstrip("\n") for ln in fh]


def save_corpus(lines: list[str], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ln in lines:
            fh.write(ln + "\n")
