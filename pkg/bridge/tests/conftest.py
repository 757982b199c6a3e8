import pytest

from bridge_fixtures import make_image_dir


@pytest.fixture
def small_images(tmp_path):
    specs = [
        ("a_solid", "solid"),
        ("b_stripes", "stripes"),
        ("c_checker", "checker"),
        ("d_circle", "circle"),
    ]
    return make_image_dir(tmp_path / "images", specs)
