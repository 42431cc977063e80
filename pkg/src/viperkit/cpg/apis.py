"""Library call vocabulary and argument roles."""
from __future__ import annotations

from typing import NamedTuple, Optional


class ApiRole(NamedTuple):
    api_class: str            # write | read | copy | alloc | free
    dest: Optional[int] = None
    src: Optional[int] = None
    count: Optional[int] = None
    wide: bool = False        # count is in wchar_t units


WRITE_APIS = {
    "memcpy": ApiRole("write", 0, 1, 2),
    "strncpy": ApiRole("write", 0, 1, 2),
    "strcpy": ApiRole("write", 0, 1, None),
    "wcsncpy": ApiRole("write", 0, 1, 2, wide=True),
    "memset": ApiRole("write", 0, None, 2),
    "wmemset": ApiRole("write", 0, None, 2, wide=True),
}
READ_APIS = {
    "fgets": ApiRole("read", 0, None, 1),
    "gets": ApiRole("read", 0, None, None),
    "getchar": ApiRole("read"),
    "fgetc": ApiRole("read"),
    "getch": ApiRole("read"),
}
COPY_APIS = {
    "memmove": ApiRole("copy", 0, 1, 2),
    "wmemcpy": ApiRole("copy", 0, 1, 2, wide=True),
    "wmemmove": ApiRole("copy", 0, 1, 2, wide=True),
}
ALLOC_APIS = {
    "malloc": ApiRole("alloc"),
    "calloc": ApiRole("alloc"),
    "alloca": ApiRole("alloc"),
}
FREE_APIS = {"free": ApiRole("free", 0)}

ALL_APIS = {**WRITE_APIS, **READ_APIS, **COPY_APIS, **ALLOC_APIS, **FREE_APIS}

# names that symbolization must never touch
LIBRARY_NAMES = frozenset(ALL_APIS) | frozenset({
    "printf", "fprintf", "sprintf", "snprintf", "puts", "putchar", "strlen", "wcslen",
    "strcmp", "strncmp", "strcat", "strncat", "rand", "srand", "exit", "abort",
    "realloc", "atoi", "NULL", "stdin", "stdout", "stderr", "main", "scanf",
    "fscanf", "fopen", "fclose", "time",
})
