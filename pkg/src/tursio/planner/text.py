"""Token normalization shared by the keyword index, grammar, and grounding.

A deliberately small suffix stemmer keeps matching deterministic and
symmetric: the same stem function runs on question tokens and on schema
tokens, so "closed" and "close_date" meet at the stem "clos".
"""

from __future__ import annotations

import re
from typing import List, Set

STOPWORDS = {
    "a", "an", "and", "all", "are", "as", "at", "did", "do", "does", "each",
    "find", "fetch", "for", "get", "give", "got", "had", "has", "have", "his",
    "her", "in", "is", "it", "its", "list", "me", "of", "on", "or", "our",
    "per", "report", "show", "that", "the", "their", "them", "they", "this",
    "to", "was", "were", "what", "which", "who", "whose", "display",
    "there", "how", "many", "much", "with", "without",
}

_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+(?:\.\d+)?")
_CAMEL_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")


def stem(token: str) -> str:
    t = token.lower()
    if len(t) > 4 and t.endswith("ies"):
        t = t[:-3] + "y"
    elif len(t) > 3 and t.endswith("s") and not t.endswith("ss"):
        t = t[:-1]
    if len(t) > 4 and t.endswith("ed"):
        t = t[:-2]
    elif len(t) > 5 and t.endswith("ing"):
        t = t[:-3]
    if len(t) > 3 and t.endswith("e"):
        t = t[:-1]
    return t


def words(text: str) -> List[str]:
    spaced = _CAMEL_RE.sub(" ", text.replace("_", " "))
    return [w.lower() for w in _WORD_RE.findall(spaced)]


def stems(text: str, drop_stopwords: bool = False) -> List[str]:
    out = []
    for w in words(text):
        if drop_stopwords and w in STOPWORDS:
            continue
        out.append(stem(w))
    return out


def stem_set(text: str, drop_stopwords: bool = False) -> Set[str]:
    return set(stems(text, drop_stopwords))


def jaccard(a: Set[str], b: Set[str]) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)
