from pathlib import Path

import pytest

from imggen import make_image
from wctransfer.weights import load_model_dir

FIXTURES = Path(__file__).parent / "fixtures"
MODEL_DIR = FIXTURES / "model"


@pytest.fixture(scope="session")
def store():
    return load_model_dir(MODEL_DIR)


@pytest.fixture
def content_img():
    return make_image(100)


@pytest.fixture
def style_img():
    return make_image(200)
