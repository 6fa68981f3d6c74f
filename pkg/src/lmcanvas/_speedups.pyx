# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled template token scanner. Mirrors _scan_py.scan_spans exactly."""

LITERAL = 0
INPUT = 1
SELECT = 2

cdef Py_UCS4 _B = u'['


cdef inline bint _is_input(unicode s, Py_ssize_t i, Py_ssize_t n):
    # "[[input]]" checked char by char; i points at the first '['.
    if i + 9 > n:
        return False
    return (s[i + 2] == u'i' and s[i + 3] == u'n' and s[i + 4] == u'p'
            and s[i + 5] == u'u' and s[i + 6] == u't'
            and s[i + 7] == u']' and s[i + 8] == u']')


cdef inline bint _is_select(unicode s, Py_ssize_t i, Py_ssize_t n):
    # "[[select]]"
    if i + 10 > n:
        return False
    return (s[i + 2] == u's' and s[i + 3] == u'e' and s[i + 4] == u'l'
            and s[i + 5] == u'e' and s[i + 6] == u'c' and s[i + 7] == u't'
            and s[i + 8] == u']' and s[i + 9] == u']')


def scan_spans(unicode content):
    """Split ``content`` into (kind, start, end) spans; see _scan_py."""
    cdef Py_ssize_t n = len(content)
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t lit_start = 0
    cdef Py_ssize_t end
    cdef int kind
    spans = []
    while i < n:
        if content[i] == _B and i + 1 < n and content[i + 1] == _B:
            if _is_input(content, i, n):
                kind = INPUT
                end = i + 9
            elif _is_select(content, i, n):
                kind = SELECT
                end = i + 10
            else:
                i += 1
                continue
            if i > lit_start:
                spans.append((LITERAL, lit_start, i))
            spans.append((kind, i, end))
            i = end
            lit_start = end
        else:
            i += 1
    if lit_start < n:
        spans.append((LITERAL, lit_start, n))
    return spans
