import os
import pytest
import utils
from errors import ConfigurationError
from models import Dgp, ExperimentSpec, LossKind, Method, TrainConfig


def testMkdirP(tmp_path):
    path = str(tmp_path / "a" / "b")

    # creating twice is fine
    utils.mkdirP(path)
    utils.mkdirP(path)
    assert os.path.isdir(path)

    # empty paths are ignored
    utils.mkdirP("")


def testSafeOpenWrite(tmp_path):
    path = str(tmp_path / "nested" / "file.txt")

    with utils.safeOpenWrite(path) as file:
        file.write("one\ntwo\n")

    assert utils.fileExists(path)
    with open(path, "rb") as file:
        assert file.read() == b"one\ntwo\n"


def testToSignificant():
    assert utils.toSignificant(1.0986122886681098) == "1.09861"
    assert utils.toSignificant(0.75) == "0.75"
    assert utils.toSignificant(-2.978878, 3) == "-2.98"


def testJsonRoundTrip(tmp_path):
    spec = ExperimentSpec(
        name="roundTrip",
        dgp=Dgp.CONFDESC,
        method=Method.IRMV1,
        train=TrainConfig(loss=LossKind.SQUARED, penaltyWeight=3.0),
    )
    path = str(tmp_path / "spec.json")
    utils.writeJson(path, spec)

    loaded = utils.loadJson(path, ExperimentSpec)
    assert loaded == spec

    # every field is written, defaults included
    with open(path) as file:
        text = file.read()
    assert '"penaltyAnnealIters": 500' in text
    assert text.endswith("}\n")


def testLoadJsonErrors(tmp_path):
    with pytest.raises(ConfigurationError):
        utils.loadJson(str(tmp_path / "missing.json"), ExperimentSpec)

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigurationError):
        utils.loadJson(str(broken), ExperimentSpec)

    badEnum = tmp_path / "badEnum.json"
    badEnum.write_text('{"method": "lasso"}')
    with pytest.raises(ConfigurationError):
        utils.loadJson(str(badEnum), ExperimentSpec)


def testWriteCsv(tmp_path):
    path = str(tmp_path / "table.csv")
    utils.writeCsv(path, ["x1", "score"], [[-1, 0.1], [1, 1 / 3]])

    with open(path) as file:
        assert file.read() == "x1,score\n-1,0.1\n1,0.3333333333333333\n"
