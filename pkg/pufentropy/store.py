#  Copyright (c) 2024 pufentropy developers
"""
Text serialisation of class maps.

A class map file is UTF-8 text with a header followed by one line per class::

    #pufclassmap v1
    n=3
    dist=gaussian
    seed=7
    shards=8
    rounds=1000000
    rejected=0
    4 0 0 648317
    2 2 2 351683

Header lines ``poisson_n=<int>`` (Poissonized runs) and ``exact=true`` (censuses) are optional and written
after ``rounds``. Body lines are sorted lexicographically descending by key.
"""

import logging
import os
from typing import Iterable, Union

from pufentropy.errors import FormatError, IntegrityError, VersionError
from pufentropy.group import orbit_size
from pufentropy.puf import MAX_N, ClassKey
from pufentropy.sampler import MAX_SEED, ClassMap, merge

logger = logging.getLogger(__name__)

MAGIC = "#pufclassmap"
VERSION = "v1"
#: counts are unsigned 64-bit integers
MAX_COUNT = 2 ** 64 - 1

_REQUIRED = ("n", "dist", "seed", "shards", "rounds")
_OPTIONAL = ("poisson_n", "rejected", "exact")

PathLike = Union[str, os.PathLike]


def dumps(cmap: ClassMap) -> str:
    """
    Serialise a class map to the text format.
    """
    for key, count in cmap.items():
        if count > MAX_COUNT:
            raise IntegrityError(f"count {count} of class {key.to_tuple()} exceeds 64 bits")
    lines = [f"{MAGIC} {VERSION}",
             f"n={cmap.n}",
             f"dist={cmap.distribution}",
             f"seed={cmap.seed}",
             f"shards={cmap.shards}",
             f"rounds={cmap.rounds}"]
    if cmap.poisson_n is not None:
        lines.append(f"poisson_n={cmap.poisson_n}")
    lines.append(f"rejected={cmap.rejected}")
    if cmap.exact:
        lines.append("exact=true")
    for key, count in cmap.items():
        lines.append(" ".join(str(v) for v in key.to_tuple()) + f" {count}")
    return "\n".join(lines) + "\n"


def _parse_int(name, text, line_no):
    try:
        value = int(text)
    except ValueError:
        raise FormatError(f"line {line_no}: {name} must be an integer, got '{text}'")
    if value < 0:
        raise FormatError(f"line {line_no}: {name} must be non-negative, got {value}")
    return value


def _parse_header(lines):
    if not lines:
        raise FormatError("empty file")
    first = lines[0].split()
    if len(first) != 2 or first[0] != MAGIC:
        raise FormatError(f"line 1: expected '{MAGIC} {VERSION}', got '{lines[0]}'")
    if first[1] != VERSION:
        raise VersionError(f"unsupported class map format version '{first[1]}' (supported: {VERSION})")
    header = {}
    line_no = 1
    for line in lines[1:]:
        if "=" not in line:
            break
        line_no += 1
        name, _, value = line.partition("=")
        if name not in _REQUIRED + _OPTIONAL:
            raise FormatError(f"line {line_no}: unknown header field '{name}'")
        if name in header:
            raise FormatError(f"line {line_no}: duplicate header field '{name}'")
        header[name] = (value, line_no)
    missing = [name for name in _REQUIRED if name not in header]
    if missing:
        raise FormatError(f"missing header field(s): {', '.join(missing)}")
    return header, line_no


def loads(text: str) -> ClassMap:
    """
    Parse and validate a class map.

    :raises FormatError: for malformed headers or records
    :raises VersionError: for other format versions
    :raises IntegrityError: if a key is not a canonical class key, keys are not sorted or unique, a count is
     zero or too large, counts do not add up to the header's rounds, or the classes cover more PUFs than exist
    """
    lines = text.splitlines()
    header, body_start = _parse_header(lines)
    fields = {}
    for name, (value, line_no) in header.items():
        if name == "dist":
            if not value or any(ch.isspace() for ch in value):
                raise FormatError(f"line {line_no}: invalid distribution name '{value}'")
            fields[name] = value
        elif name == "exact":
            if value not in ("true", "false"):
                raise FormatError(f"line {line_no}: exact must be 'true' or 'false', got '{value}'")
            fields[name] = value == "true"
        else:
            fields[name] = _parse_int(name, value, line_no)
    n = fields["n"]
    if not 1 <= n <= MAX_N:
        raise FormatError(f"n must be in [1, {MAX_N}], got {n}")
    if fields["seed"] > MAX_SEED:
        raise FormatError(f"seed must be an unsigned 64-bit integer, got {fields['seed']}")
    if fields["shards"] < 1:
        raise FormatError(f"shards must be positive, got {fields['shards']}")
    cmap = ClassMap(n=n, distribution=fields["dist"], seed=fields["seed"], shards=fields["shards"],
                    poisson_n=fields.get("poisson_n"), rejected=fields.get("rejected", 0),
                    exact=fields.get("exact", False))
    previous = None
    for line_no, line in enumerate(lines[body_start:], start=body_start + 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != n + 1:
            raise FormatError(f"line {line_no}: expected {n} Chow parameters and a count, got '{line}'")
        try:
            values = [int(v) for v in parts]
        except ValueError:
            raise FormatError(f"line {line_no}: non-integer entry in '{line}'")
        key, count = tuple(values[:n]), values[n]
        try:
            ClassKey(key)
        except ValueError as e:
            raise IntegrityError(f"line {line_no}: {e}")
        if previous is not None and key >= previous:
            raise IntegrityError(f"line {line_no}: class {key} is not strictly below {previous} "
                                 f"(records must be unique and sorted descending)")
        if not 0 < count <= MAX_COUNT:
            raise IntegrityError(f"line {line_no}: count must be in [1, 2^64), got {count}")
        cmap.add(key, count)
        previous = key
    if cmap.rounds != fields["rounds"]:
        raise IntegrityError(f"counts sum to {cmap.rounds}, header says rounds={fields['rounds']}")
    if cmap.exact:
        for key, count in cmap.items():
            if count != orbit_size(key):
                raise IntegrityError(f"census count {count} of class {key.to_tuple()} is not its orbit size")
    cmap.validate()
    return cmap


def save(cmap: ClassMap, path: PathLike):
    """
    Write a class map to ``path`` (overwriting it).
    """
    text = dumps(cmap)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.debug(f"wrote {len(cmap)} classes ({cmap.rounds} rounds) to {path}")


def load(path: PathLike) -> ClassMap:
    """
    Read and validate a class map from ``path``.
    """
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        return loads(text)
    except (FormatError, IntegrityError, VersionError) as e:
        raise type(e)(f"{path}: {e}") from e


def merge_files(paths: Iterable[PathLike], out_path: PathLike) -> ClassMap:
    """
    Merge class map files (see :func:`pufentropy.sampler.merge`) and write the result.

    :return: the merged map
    :raises IncompatibleMaps: if the files have different ``n`` or distribution
    :raises IntegrityError: if a merged count exceeds 64 bits
    """
    paths = list(paths)
    merged = merge(load(p) for p in paths)
    save(merged, out_path)
    logger.info(f"merged {len(paths)} files into {out_path}: {len(merged)} classes, {merged.rounds} rounds")
    return merged
