"""SMILES handling: lexing, molecular graphs, fingerprints, corpus prep."""

from .tokenizer import (
    BOS,
    EOS,
    PAD,
    SPECIAL_TEXTS,
    UNK,
    SmilesError,
    Token,
    TokenKind,
    UnlexableCharacter,
    UnterminatedBracket,
    Vocabulary,
    detokenize,
    tokenize,
)
from .mol import (
    Atom,
    Bond,
    DanglingBond,
    EmptyBranch,
    MolGraph,
    UnclosedBranch,
    UnknownElement,
    UnmatchedRingBond,
    ValidityReport,
    check_valence,
    implicit_hydrogens,
    is_valid_smiles,
    molecular_weight,
    parse,
    parse_smiles,
)
from .fingerprint import Fingerprint, fingerprint, max_tanimoto_batch, tanimoto
from .dataset import (
    ORGANIC_SUBSET,
    EmptyCorpus,
    PreparationReport,
    clean_line,
    load_corpus,
    prepare_dataset,
    save_corpus,
)

__all__ = [
    "BOS", "EOS", "PAD", "UNK", "SPECIAL_TEXTS",
    "SmilesError", "Token", "TokenKind", "UnlexableCharacter", "UnterminatedBracket",
    "Vocabulary", "detokenize", "tokenize",
    "Atom", "Bond", "MolGraph", "ValidityReport",
    "DanglingBond", "EmptyBranch", "UnclosedBranch", "UnknownElement", "UnmatchedRingBond",
    "check_valence", "implicit_hydrogens", "is_valid_smiles", "molecular_weight",
    "parse", "parse_smiles",
    "Fingerprint", "fingerprint", "max_tanimoto_batch", "tanimoto",
    "ORGANIC_SUBSET", "EmptyCorpus", "PreparationReport",
    "clean_line", "load_corpus", "prepare_dataset", "save_corpus",
]
