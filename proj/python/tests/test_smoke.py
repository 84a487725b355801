# Copyright 2026 The biff Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import numpy as np
import pytest

import biff


@pytest.fixture(scope="module")
def scenes():
    return biff.generate_scenes(6, seed=5)


@pytest.fixture(scope="module")
def forecaster(scenes):
    cfg = biff.Config("smoke")
    cfg.apply("epochs = 1\nk_modalities = 3")
    anchors = biff.AnchorModel(cfg, seed=1)
    anchors.train(scenes, epochs=2, seed=1)
    return biff.Forecaster(cfg, anchors, seed=2)


def test_config_round_trip():
    cfg = biff.Config("desk")
    again = biff.Config.parse(cfg.to_text())
    assert again.to_text() == cfg.to_text()
    assert "desk" in biff.Config.presets()
    with pytest.raises(biff.ConfigError):
        cfg.set("no_such_key", "1")


def test_scene_json_and_generation_are_deterministic(scenes, tmp_path):
    again = biff.generate_scenes(6, seed=5)
    assert [s.to_json() for s in again] == [s.to_json() for s in scenes]
    assert biff.Scene.from_json(scenes[0].to_json()) == scenes[0]
    path = tmp_path / "s.jsonl"
    biff.write_scenes(path, scenes)
    assert biff.read_scenes(path) == scenes
    with pytest.raises(biff.DataError):
        biff.generate_scenes(1, templates=["no_such_template"])


def test_frames_round_trip():
    x, y = biff.to_frame(3.0, -2.0, 1.0, 4.0, 0.7)
    bx, by = biff.from_frame(x, y, 1.0, 4.0, 0.7)
    assert (bx, by) == pytest.approx((3.0, -2.0), abs=1e-12)
    assert biff.wrap_angle(3 * math.pi) == pytest.approx(math.pi)


def test_predict_shapes_and_rigid_invariance(forecaster, scenes):
    p = forecaster.predict(scenes[0])
    k, a, t = 3, 2, 80
    assert p["local"].shape == (k, a, t, 2)
    assert p["world"].shape == (k, a, t, 2)
    assert np.all((p["likelihood"] >= 0) & (p["likelihood"] <= 1))
    moved = forecaster.predict(scenes[0].transformed(1.1, 40.0, -7.0))
    assert np.max(np.abs(moved["local"] - p["local"])) < 1e-6


def test_train_evaluate_and_checkpoint(forecaster, scenes, tmp_path):
    result = forecaster.train(scenes, scenes)
    assert len(result["step_losses"]) > 0
    assert "eval" in result["curve"][-1]
    report = forecaster.evaluate(scenes)
    for key in ("minADE", "minFDE", "MR", "CCR", "count"):
        assert key in report
    path = tmp_path / "m.ckpt"
    forecaster.save(path)
    loaded = biff.Forecaster.load(path)
    assert loaded.num_parameters == forecaster.num_parameters
    assert np.array_equal(loaded.predict(scenes[1])["local"], forecaster.predict(scenes[1])["local"])
    with pytest.raises(biff.DataError):
        biff.Forecaster.load(tmp_path / "missing.ckpt")


def test_oracle_checks_pass():
    results = biff.run_checks("oracles")
    assert results and all(r["passed"] for r in results)
    with pytest.raises(biff.ConfigError):
        biff.run_checks("bogus")
