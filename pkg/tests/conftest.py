import numpy as np
import pytest

from colpoprep.image_io import save_png

# folder -> file count, chosen to mirror the documented dataset layout
FULL_TREE_COUNTS = {"Normal": 17, "NormalNoise": 28, "Abnormal": 85, "AbnormalNoise": 60}


def rand_image(rng: np.random.Generator, h: int, w: int, color: bool = False) -> np.ndarray:
    shape = (h, w, 3) if color else (h, w)
    return rng.integers(0, 256, size=shape, dtype=np.uint8)


def build_tree(root, counts, rng=None, size=6):
    """Write a Normal/NormalNoise/Abnormal/AbnormalNoise tree of tiny PNGs."""
    rng = rng or np.random.default_rng(1234)
    for folder, n in counts.items():
        for i in range(n):
            img = rand_image(rng, size, size, color=True)
            save_png(img, root / folder / f"img_{i:03d}.png")
    return root


@pytest.fixture(scope="session")
def full_tree(tmp_path_factory):
    root = tmp_path_factory.mktemp("full_tree")
    return build_tree(root, FULL_TREE_COUNTS)


@pytest.fixture
def small_tree(tmp_path):
    root = tmp_path / "small_tree"
    return build_tree(root, {"Normal": 3, "NormalNoise": 2, "Abnormal": 4, "AbnormalNoise": 3}, size=12)
