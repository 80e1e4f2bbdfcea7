"""Exception hierarchy shared by every layer of the package."""


class SealError(Exception):
    """Base class for all errors raised by sealtable."""


# cipher


class CipherError(SealError):
    pass


class InvalidKey(CipherError):
    pass


class InvalidNonce(CipherError):
    pass


class AuthFailure(CipherError):
    """Ciphertext failed authentication (tampered or wrong key)."""


# storage


class StorageError(SealError):
    pass


class SchemaMismatch(StorageError):
    pass


class DuplicateKey(StorageError):
    def __init__(self, key: int):
        super().__init__(f"duplicate key {key}")
        self.key = key


class NullSensitiveValue(StorageError):
    def __init__(self, column: str, line: int):
        super().__init__(f"line {line}: empty value in sensitive column {column!r}")
        self.column = column
        self.line = line


class ParseError(StorageError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class FormatError(StorageError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"byte {offset}: {message}")
        self.offset = offset


class VersionMismatch(StorageError):
    pass


# protect


class ProtectError(SealError):
    pass


class NoSensitiveColumn(ProtectError):
    pass


class NonceExhaustion(ProtectError):
    pass


class EmptyDomain(ProtectError):
    pass


# query language


class QueryError(SealError):
    """Semantic problem with a well-formed query."""


class SqlSyntaxError(SealError):
    def __init__(self, position: int, expected, found: str = ""):
        self.position = position
        self.expected = frozenset(expected)
        self.found = found
        want = ", ".join(sorted(self.expected))
        super().__init__(f"syntax error at position {position}: expected {want}, found {found or 'end of input'}")


class UnknownTable(QueryError):
    pass


class UnknownColumn(QueryError):
    pass


class TypeMismatch(QueryError):
    def __init__(self, column: str, literal):
        super().__init__(f"literal {literal!r} does not match the type of column {column!r}")
        self.column = column
        self.literal = literal


class UnsupportedNegation(QueryError):
    pass


# execution


class Unauthorized(SealError):
    pass


class BenchError(SealError):
    pass


class MismatchedWorkload(BenchError):
    pass
