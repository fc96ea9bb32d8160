"""Guards the frozen fixture shared with the browser client's error overlay."""
import json
from pathlib import Path

import numpy as np

from condmdi.evaluation import keyframe_error
from condmdi.masks import ObservationSpec
from condmdi.motion import Convention, MotionSequence

FIXTURE = Path(__file__).parent.parent / "frontend" / "tests" / "fixtures" \
    / "keyframe_error_fixture.json"


def test_python_metric_reproduces_frozen_fixture(layout):
    fix = json.loads(FIXTURE.read_text())
    N = fix["frames"]
    F = layout.total_width
    data = np.zeros((N, F), dtype=np.float32)
    data[:, 1:3] = np.asarray(fix["generated_root_xz"], dtype=np.float32)
    data[:, 3] = 0.9
    seq = MotionSequence(data=data, fps=20.0, valid_length=N,
                         convention=Convention.GLOBAL_ROOT, layout=layout)
    mask = np.zeros((N, F), dtype=np.float32)
    sig = np.zeros((N, F), dtype=np.float32)
    for kf in fix["keyframes"]:
        fr = kf["index"]
        mask[fr, :4] = 1.0
        sig[fr, 1], sig[fr, 2] = kf["target_xz"]
        sig[fr, 3] = 0.9
    obs = ObservationSpec.from_values(sig, mask)
    got = keyframe_error(seq, obs)
    assert abs(got - fix["mean_keyframe_error_m"]) < 1e-9
    per = [float(np.hypot(float(seq.data[k["index"], 1]) - k["target_xz"][0],
                          float(seq.data[k["index"], 2]) - k["target_xz"][1]))
           for k in fix["keyframes"]]
    np.testing.assert_allclose(per, fix["per_keyframe_error_m"], atol=1e-9)
