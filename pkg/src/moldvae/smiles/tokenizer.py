"""Character-level SMILES lexer and vocabulary.

The lexer does longest-match tokenization: bracket atoms ``[...]``, the
two-letter halogens ``Cl``/``Br`` and multi-digit ring closures ``%NN``
are matched before single characters.  Joining the token texts always
reproduces the input string byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class SmilesError(ValueError):
    """Base class for SMILES lexing/parsing problems."""


class UnlexableCharacter(SmilesError):
    def __init__(self, smiles: str, position: int):
        self.position = position
        super().__init__(f"no token starts at position {position}: {smiles[position:position + 8]!r}")


class UnterminatedBracket(SmilesError):
    def __init__(self, position: int):
        self.position = position
        super().__init__(f"'[' at position {position} has no matching ']'")


class TokenKind(Enum):
    BRACKET_ATOM = "bracket_atom"
    ORGANIC_ATOM = "organic_atom"
    AROMATIC_ATOM = "aromatic_atom"
    BOND = "bond"
    BRANCH = "branch"
    RING_BOND = "ring_bond"
    DOT = "dot"
    WILDCARD = "wildcard"


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind


# Organic-subset atoms writable without brackets, two-letter first.
TWO_LETTER_ATOMS = ("Cl", "Br")
SINGLE_LETTER_ATOMS = frozenset("BCNOPSFI")
AROMATIC_ATOMS = frozenset("bcnops")
BOND_CHARS = frozenset("-=#:/\\")


def tokenize(smiles: str) -> list[Token]:
    """Lex a SMILES string into tokens.

    Raises UnlexableCharacter or UnterminatedBracket on malformed input.
    """
    tokens: list[Token] = []
    i = 0
    n = len(smiles)
    while i < n:
        ch = smiles[i]
        if ch == "[":
            j = smiles.find("]", i + 1)
            if j < 0:
                raise UnterminatedBracket(i)
            tokens.append(Token(smiles[i:j + 1], TokenKind.BRACKET_ATOM))
            i = j + 1
        elif ch == "%":
            if i + 2 < n and smiles[i + 1].isdigit() and smiles[i + 2].isdigit():
                tokens.append(Token(smiles[i:i + 3], TokenKind.RING_BOND))
                i += 3
            else:
                raise UnlexableCharacter(smiles, i)
        elif smiles[i:i + 2] in TWO_LETTER_ATOMS:
            tokens.append(Token(smiles[i:i + 2], TokenKind.ORGANIC_ATOM))
            i += 2
        elif ch in SINGLE_LETTER_ATOMS:
            tokens.append(Token(ch, TokenKind.ORGANIC_ATOM))
            i += 1
        elif ch in AROMATIC_ATOMS:
            tokens.append(Token(ch, TokenKind.AROMATIC_ATOM))
            i += 1
        elif ch.isdigit():
            tokens.append(Token(ch, TokenKind.RING_BOND))
            i += 1
        elif ch in BOND_CHARS:
            tokens.append(Token(ch, TokenKind.BOND))
            i += 1
        elif ch in "()":
            tokens.append(Token(ch, TokenKind.BRANCH))
            i += 1
        elif ch == ".":
            tokens.append(Token(ch, TokenKind.DOT))
            i += 1
        elif ch == "*":
            tokens.append(Token(ch, TokenKind.WILDCARD))
            i += 1
        else:
            raise UnlexableCharacter(smiles, i)
    return tokens


def detokenize(tokens: list[Token]) -> str:
    return "".join(t.text for t in tokens)


PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIAL_TEXTS = ("<PAD>", "<BOS>", "<EOS>", "<UNK>")


class Vocabulary:
    """Dense token-text <-> id mapping with four reserved specials.

    Ids 0..3 are PAD/BOS/EOS/UNK; regular tokens follow in sorted order.
    """

    def __init__(self, token_texts: list[str]):
        for t in token_texts:
            if t in SPECIAL_TEXTS:
                raise ValueError(f"reserved token text {t!r}")
        if len(set(token_texts)) != len(token_texts):
            raise ValueError("duplicate token texts")
        self.tokens = list(SPECIAL_TEXTS) + list(token_texts)
        self.id_of = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_corpus(cls, tokenized: list[list[Token]]) -> "Vocabulary":
        texts = sorted({t.text for seq in tokenized for t in seq})
        return cls(texts)

    def encode(self, tokens: list[Token], frame: bool = True) -> list[int]:
        """Map tokens to ids, framing with BOS/EOS by default."""
        ids = [self.id_of.get(t.text, UNK) for t in tokens]
        return [BOS] + ids + [EOS] if frame else ids

    def decode_text(self, ids: list[int]) -> str:
        """Join the texts of non-special ids; stops nothing, skips specials."""
        return "".join(self.tokens[i] for i in ids if i > UNK)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for t in self.tokens:
                fh.write(t + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
        if tuple(lines[:4]) != SPECIAL_TEXTS:
            raise ValueError(f"{path}: vocabulary file must start with {SPECIAL_TEXTS}")
        return cls(lines[4:])
