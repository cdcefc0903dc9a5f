"""Module for general logging, environment, file and worker-pool helpers."""
import gzip
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from logging import Logger, config, getLogger
from typing import (
    Callable,
    Iterable,
    Iterator,
    List,
    Optional,
    TextIO,
    TypeVar,
    Union,
)

from envyaml import EnvYAML

from cdspress.exceptions import ResourceNotFound

PathLike = Union[str, "os.PathLike[str]"]

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_LOGGING_FILE = os.path.join(
    os.path.dirname(__file__), "resources", "logging.yaml"
)


def config_from_json(path_to_file: str = DEFAULT_LOGGING_FILE) -> None:
    """
    Configure logger from json

    :param path_to_file: path to configuration file
    """
    with open(path_to_file, "rt") as fid:
        config_file = json.load(fid)
    config.dictConfig(config_file)


def config_from_yaml(path_to_file: str = DEFAULT_LOGGING_FILE) -> None:
    """
    Configure logger from yaml, substituting environment variables

    :param path_to_file: path to configuration file
    """
    config.dictConfig(dict(EnvYAML(path_to_file, strict=False)))


def config_from_file(path_to_file: str = DEFAULT_LOGGING_FILE) -> None:
    """
    Configure logger from file

    :param path_to_file: path to configuration file
    """

    readers = {
        ".yml": config_from_yaml,
        ".yaml": config_from_yaml,
        ".json": config_from_json,
    }

    _, file_extension = os.path.splitext(path_to_file)

    if file_extension not in readers.keys():
        raise NotImplementedError(
            f"Reader for file extension {file_extension} is not supported"
        )

    return readers[file_extension](path_to_file)


class WithLogging:
    """Base class to be used for providing a logger embedded in the class."""

    @property
    def logger(self) -> Logger:
        """Return the logger named after the dotted path of the class."""
        return getLogger(f"{type(self).__module__}.{type(self).__qualname__}")


def setup_logging(
    log_level: str, config_file: Optional[str] = None, logger_name: Optional[str] = None
) -> logging.Logger:
    with environ(LOG_LEVEL=log_level) as _:
        config_from_file(config_file or DEFAULT_LOGGING_FILE)
    return logging.getLogger(logger_name) if logger_name else logging.root


@contextmanager
def environ(*remove, **update):
    """
    Temporarily updates the ``os.environ`` dictionary in-place.

    :param remove: Environment variables to remove.
    :param update: Dictionary of environment variables and values to add/update.
    """
    env = os.environ
    update = update or {}
    remove = remove or []

    stomped = (set(update.keys()) | set(remove)) & set(env.keys())
    update_after = {k: env[k] for k in stomped}
    remove_after = frozenset(k for k in update if k not in env)

    try:
        [env.pop(k, None) for k in remove]
        env.update(update)
        yield
    finally:
        [env.pop(k) for k in remove_after]
        env.update(update_after)


@contextmanager
def open_text(path: PathLike, mode: str = "rt") -> Iterator[TextIO]:
    """
    Open a text file for reading or writing.

    ``-`` stands for standard input or output, and paths ending in ``.gz`` are
    transparently (de)compressed.

    :param path: file path or ``-``
    :param mode: ``rt`` or ``wt``
    :raises ResourceNotFound: when a file opened for reading does not exist
    """
    if str(path) == "-":
        stream = sys.stdin if "r" in mode else sys.stdout
        yield stream
        if "w" in mode:
            stream.flush()
        return

    if "r" in mode and not os.path.exists(path):
        raise ResourceNotFound(str(path))

    handle: TextIO = (
        io.TextIOWrapper(gzip.open(path, mode.replace("t", "") + "b"))
        if str(path).endswith(".gz")
        else open(path, mode)
    )
    with handle:
        yield handle


def resolve_threads(threads: Optional[int]) -> int:
    """Return a usable worker count, ``None`` meaning every available core."""
    if threads is None:
        return os.cpu_count() or 1
    return max(1, int(threads))


def parallel_map(
    func: Callable[[T], R], items: Iterable[T], threads: Optional[int] = 1
) -> List[R]:
    """
    Apply a function to every item, preserving the input order in the output.

    :param func: function to apply
    :param items: inputs
    :param threads: maximum number of worker threads, 1 runs inline
    """
    workers = resolve_threads(threads)
    if workers == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


def format_float(value: Optional[float]) -> str:
    """Render a float so that it reads back to the identical value; None is empty."""
    if value is None:
        return ""
    return repr(float(value))
