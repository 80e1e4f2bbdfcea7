"""SQL LIKE matching: ``%`` matches any run (possibly empty), ``_`` exactly one character."""


def match_like(value: str, pattern: str) -> bool:
    """Case-sensitive match of the whole ``value``.  No ESCAPE support."""
    v = p = 0
    star_p = -1  # pattern index just after the last %
    star_v = 0  # value index that % is currently absorbing up to
    while v < len(value):
        if p < len(pattern) and pattern[p] == "%":
            star_p = p = p + 1
            star_v = v
        elif p < len(pattern) and (pattern[p] == "_" or pattern[p] == value[v]):
            v += 1
            p += 1
        elif star_p >= 0:
            star_v += 1
            v = star_v
            p = star_p
        else:
            return False
    return all(ch == "%" for ch in pattern[p:])
