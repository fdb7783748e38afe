"""Unicode-aware tokenization shared by the metadata store and test doubles."""
from __future__ import annotations

import re
import unicodedata

# Alphanumeric runs, Unicode-aware; underscore counts as a separator.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """NFC-normalize, lowercase, and split on non-alphanumeric characters."""
    normalized = unicodedata.normalize("NFC", text).lower()
    return _TOKEN_RE.findall(normalized)
