import pytest

from uxfeedback import cli
from uxfeedback.synthdata import write_demo_files


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    """Demo workspace with the ingest->train->predict steps already run."""
    directory = tmp_path_factory.mktemp("demo")
    config = write_demo_files(directory)
    for command in (["ingest"], ["train"], ["predict"]):
        rc = cli.main(["--config", str(config)] + command)
        assert rc == 0, command
    return directory


@pytest.fixture(scope="session")
def demo_config(demo_dir):
    return str(demo_dir / "pipeline.toml")
