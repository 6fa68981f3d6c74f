from __future__ import annotations

import pytest

from lmcanvas.blocks import Geometry, ModelParams
from lmcanvas.document import new_document
from lmcanvas.provider import MockProvider


@pytest.fixture
def doc():
    return new_document("test", doc_id="testdoc")


@pytest.fixture
def mock_provider():
    return MockProvider()


def geo(x=0.0, y=0.0, width=240.0, height=120.0) -> Geometry:
    return Geometry(x, y, width, height)


def add_text(document, content="", **kwargs) -> str:
    return document.create_text_block(content, geo(**kwargs)).block_id


def add_model(document, **params) -> str:
    return document.create_model_block(ModelParams(**params), geo()).block_id


def add_pipeline(document, text, model) -> str:
    return document.create_pipeline(text, model, geo()).block_id
