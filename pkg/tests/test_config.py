"""Scenario schema validation, compilation, and bundled file loading."""
import copy
import json

import numpy as np
import pytest

from sociallearning import (BernoulliModel, ConfigError, bundled_names,
                            compile_from_dict, load_bundled, load_scenario)

ALL_BUNDLED = ["grid_center", "grid_corner", "sensor_net",
               "sensor_net_quantized", "two_node_bernoulli",
               "two_node_bernoulli_periodic", "two_node_gaussian",
               "two_node_gaussian_not_conn"]

BASE = {
    "schema_version": 1,
    "name": "unit",
    "network": {"w": [[0.9, 0.1], [0.4, 0.6]]},
    "hypotheses": {"labels": ["a", "b"], "true_index": 0},
    "models": [
        {"family": "bernoulli", "node": 0, "p": [0.8, 0.25]},
        {"family": "bernoulli", "node": 1, "p": [0.3, 0.25]},
    ],
    "run": {"horizon": 10},
}


def variant(**changes):
    raw = copy.deepcopy(BASE)
    for key, value in changes.items():
        raw[key] = value
    return raw


class TestBundled:
    def test_names(self):
        assert bundled_names() == ALL_BUNDLED

    @pytest.mark.parametrize("name", ALL_BUNDLED)
    def test_all_compile(self, name):
        scn = load_bundled(name)
        assert scn.matrix.n == len(scn.models)
        assert all(mod.m == scn.hyp.m for mod in scn.models)
        assert scn.config.name == name

    def test_unknown_name(self):
        with pytest.raises(ConfigError, match="available"):
            load_bundled("does_not_exist")

    def test_quantized_scenario_carries_spec(self):
        scn = load_bundled("sensor_net_quantized")
        assert scn.quant is not None
        assert scn.quant.d_levels == 4095
        assert load_bundled("sensor_net").quant is None


class TestCompile:
    def test_base_compiles(self):
        scn = compile_from_dict(BASE)
        assert scn.hyp.m == 2
        assert isinstance(scn.models[0], BernoulliModel)
        np.testing.assert_allclose(scn.matrix.w, BASE["network"]["w"])

    def test_models_sorted_by_node(self):
        raw = variant(models=list(reversed(BASE["models"])))
        scn = compile_from_dict(raw)
        assert [mod.node for mod in scn.models] == [0, 1]
        assert scn.models[0].p == (0.8, 0.25)

    def test_prior_accepted(self):
        scn = compile_from_dict(variant(prior=[[0.5, 0.5], [0.9, 0.1]]))
        assert scn.config.prior[1] == [0.9, 0.1]

    def test_wrong_schema_version(self):
        with pytest.raises(ConfigError):
            compile_from_dict(variant(schema_version=2))

    def test_missing_node_coverage(self):
        raw = copy.deepcopy(BASE)
        raw["models"][1]["node"] = 0
        with pytest.raises(ConfigError, match="cover 0..n-1"):
            compile_from_dict(raw)

    def test_model_count_mismatch(self):
        with pytest.raises(ConfigError, match="models for"):
            compile_from_dict(variant(models=BASE["models"][:1]))

    def test_hypothesis_count_mismatch(self):
        raw = copy.deepcopy(BASE)
        raw["models"][0]["p"] = [0.8, 0.25, 0.5]
        with pytest.raises(ConfigError, match="parameterizes"):
            compile_from_dict(raw)

    def test_true_index_out_of_range(self):
        raw = copy.deepcopy(BASE)
        raw["hypotheses"]["true_index"] = 2
        with pytest.raises(ConfigError, match="hypotheses"):
            compile_from_dict(raw)

    def test_prior_wrong_shape(self):
        with pytest.raises(ConfigError, match="n rows"):
            compile_from_dict(variant(prior=[[0.5, 0.5]]))

    def test_prior_nonpositive(self):
        with pytest.raises(ConfigError, match="strictly positive"):
            compile_from_dict(variant(prior=[[1.0, 0.0], [0.5, 0.5]]))

    def test_negative_weight(self):
        raw = variant(network={"w": [[1.1, -0.1], [0.4, 0.6]]})
        with pytest.raises(ConfigError, match="network"):
            compile_from_dict(raw)

    def test_quantization_needs_levels(self):
        raw = copy.deepcopy(BASE)
        raw["run"]["quantization"] = {"enabled": True, "d_levels": 0}
        with pytest.raises(ConfigError, match="quantization"):
            compile_from_dict(raw)

    def test_unknown_family(self):
        raw = copy.deepcopy(BASE)
        raw["models"][0]["family"] = "poisson"
        with pytest.raises(ConfigError):
            compile_from_dict(raw)

    def test_bad_model_parameters(self):
        raw = copy.deepcopy(BASE)
        raw["models"][0]["p"] = [1.5, 0.25]
        with pytest.raises(ConfigError, match="models"):
            compile_from_dict(raw)


class TestLoadScenario:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "scn.json"
        path.write_text(json.dumps(BASE), encoding="utf-8")
        scn = load_scenario(path)
        assert scn.config.name == "unit"
        assert scn.config.run.horizon == 10

    def test_broken_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="cannot read"):
            load_scenario(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_scenario(tmp_path / "absent.json")
