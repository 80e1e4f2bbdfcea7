"""Query encrypted columns without decrypting them wholesale.

A sensitive column is stored encrypted in the main table and, separately, in
plaintext inside a shuffled, noise-padded search table whose key column is
encrypted.  Predicates on the sensitive column are answered from the search
table, and only the matching keys and values are ever decrypted.
"""

from .cipher import (
    AesGcmCipher,
    Cipher,
    CipherEnvelope,
    CipherKey,
    DecryptionCounter,
    KeyRing,
    XorStreamCipher,
    derive_keys,
    get_cipher,
)
from .executor import AuthContext, ResultSet, baseline_full_decrypt, execute, probe_search_table
from .protect import ProtectConfig, ProtectedPair, load_protected, save_protected
from .query import classify, explain, match_like, parse, rewrite
from .storage import ColumnSpec, Kind, Record, Table, ingest_csv, load, parse_schema_spec, save

__version__ = "0.1.0"

__all__ = [
    "AesGcmCipher", "AuthContext", "Cipher", "CipherEnvelope", "CipherKey", "ColumnSpec", "DecryptionCounter",
    "KeyRing", "Kind", "ProtectConfig", "ProtectedPair", "Record", "ResultSet", "Table", "XorStreamCipher",
    "baseline_full_decrypt", "classify", "derive_keys", "execute", "explain", "get_cipher", "ingest_csv", "load",
    "load_protected", "match_like", "parse", "parse_schema_spec", "probe_search_table", "rewrite", "save",
    "save_protected",
]
