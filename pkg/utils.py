import os, errno
import csv
import json
from typing import Any, List, Sequence, Type, TypeVar
import typedload
from typedload.exceptions import TypedloadException
import config
from errors import ConfigurationError

T = TypeVar("T")


def mkdirP(path):
    if not path:
        return

    try:
        os.makedirs(path)
    except OSError as exc:
        if exc.errno == errno.EEXIST and os.path.isdir(path):
            pass
        else:
            raise


def safeOpenWrite(path):
    mkdirP(os.path.dirname(path))
    # fixed newline so artifacts are byte-identical across platforms
    return open(path, "w", newline="\n")


def fileExists(path: str) -> bool:
    return os.path.isfile(path)


def toSignificant(value: float, digits: int = config.significantDigits) -> str:
    return f"{value:.{digits}g}"


def toJson(thing: Any) -> str:
    return json.dumps(typedload.dump(thing, hidedefault=False), indent=2, sort_keys=True) + "\n"


def writeJson(path: str, thing: Any):
    with safeOpenWrite(path) as file:
        file.write(toJson(thing))


def loadJson(path: str, kind: Type[T]) -> T:
    if not fileExists(path):
        raise ConfigurationError(f"no such file: {path}")

    with open(path) as file:
        try:
            data = json.load(file)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path} is not valid JSON: {exc}")

    try:
        return typedload.load(data, kind, failonextra=True)
    except TypedloadException as exc:
        raise ConfigurationError(f"{path}: {exc}")


def writeCsv(path: str, header: Sequence[str], rows: List[Sequence[Any]]):
    with safeOpenWrite(path) as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)

        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
