import itertools
import json

import pytest

SHAPES = ("cube", "sphere")
COLORS = ("red", "blue", "green")


def _obj(shape, color, x, y):
    return {
        "shape": shape,
        "color": color,
        "size": "small",
        "material": "rubber",
        "3d_coords": [x, y, 0.0],
        "rotation": 0.0,
    }


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory):
    """Tiny two-object corpus: 'what color is the <shape>' questions whose
    answer is readable straight off the scene tokens."""
    root = tmp_path_factory.mktemp("toy")
    scenes, questions = [], []
    combos = itertools.product(COLORS, COLORS, (-2.0, 0.0, 2.0), (-1.5, 1.5))
    for i, (c1, c2, x, y) in enumerate(combos):
        scenes.append({
            "objects": [_obj("cube", c1, x, y), _obj("sphere", c2, -x, -y)],
            "directions": {"right": [1.0, 0.0], "behind": [0.0, 1.0]},
        })
        for shape, color in (("cube", c1), ("sphere", c2)):
            questions.append({
                "question": ["what", "color", "is", "the", shape],
                "answer": color,
                "image_index": i,
            })
    (root / "scenes.json").write_text(json.dumps({"scenes": scenes}))
    (root / "questions.json").write_text(json.dumps({"questions": questions}))
    (root / "manifest.json").write_text(json.dumps({"n_objects": 2}))
    return root
