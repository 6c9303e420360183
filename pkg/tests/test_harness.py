import json
import math

import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from stmc import core as C
from stmc import harness as H
from stmc import models as M

CONST = M.warped(M.Spatial("circle", {"L": 2 * math.pi}), M.Warp("const", {"c": 1.0}), (0.0, 1.0))


def strip_runtime(doc):
    return {k: v for k, v in doc.items() if k != "runtime"}


class TestRecords:
    def test_provenance_required(self):
        with pytest.raises(ValueError):
            H.CaseRecord("c", {}, 1.0, "GUESS", 1.0)
        assert H.CaseRecord("c", {}, 1.0, "PAPER: formula", 1.0).passed

    def test_report_json(self):
        cases = [H.CaseRecord("a", {"n": np.int64(2)}, 0.0, "TRIVIAL", np.float64(math.inf), passed=False)]
        rep = H.ExperimentReport("sandwich", cases, 7, 0.5, [{"param": 1.0, "upper": math.inf}])
        doc = json.loads(json.dumps(rep.to_json(), allow_nan=False))
        assert doc["schema"] == "report-v1"
        assert doc["verdict"] == "fail"
        assert doc["cases"][0]["got"] == "inf"
        assert doc["cases"][0]["provenance"] == "TRIVIAL"
        assert [c.name for c in rep.failures()] == ["a"]

    def test_csv(self):
        rep = H.ExperimentReport("convergence", [], 1, series=[{"param": 0.5, "lower": 0.0, "upper": 0.1, "floor": 0.05}])
        lines = rep.csv().splitlines()
        assert lines[0] == "param,lower,upper,floor"
        assert [float(v) for v in lines[1].split(",")] == [0.5, 0.0, 0.1, 0.05]


class TestConfig:
    def test_ladder_must_increase(self):
        with pytest.raises(ValueError):
            H.ExperimentConfig("oracle_regression", model=CONST, ladder=[(16, 16), (16, 32)])

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            H.ExperimentConfig("fit")

    def test_needs_model_and_ladder(self):
        with pytest.raises(ValueError):
            H.ExperimentConfig("oracle_regression", ladder=[(8, 8)])
        with pytest.raises(ValueError):
            H.ExperimentConfig("convergence")

    def test_yaml(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump({"kind": "sandwich", "seed": 3, "trials": 5}))
        cfg = H.load_config(path)
        assert cfg.kind == "sandwich" and cfg.seed == 3 and cfg.params["trials"] == 5

    def test_model_section(self):
        cfg = H.ExperimentConfig.from_dict({"kind": "oracle_regression", "model": CONST.to_json(), "ladder": [[8, 8]]})
        assert cfg.model == CONST and cfg.ladder == [(8, 8)]


class TestGenerators:
    @given(st.integers(0, 2**31), st.integers(1, 7))
    @settings(max_examples=40, deadline=None)
    def test_random_space_is_valid(self, seed, n):
        assert C.validate(H.random_space(np.random.default_rng(seed), n)).ok

    @given(st.integers(0, 2**31))
    @settings(max_examples=40, deadline=None)
    def test_inflated_copy(self, seed):
        rng = np.random.default_rng(seed)
        X = H.random_space(rng, 4)
        Y = H.inflate_one_distance(X, 0.1, rng)
        if Y is None:
            return
        assert C.validate(Y).ok
        diff = np.abs(Y.dist - X.dist)
        assert np.count_nonzero(diff > 1e-12) == 2
        assert diff.max() == pytest.approx(0.1)

    def test_big_bang_space(self):
        X = H.random_bigbang_space(np.random.default_rng(0), 4)
        assert C.validate(X).ok
        np.testing.assert_allclose(X.dist[X.basepoint_index], X.tau)

    def test_initial_set_time(self):
        X = H.with_initial_set(H.random_space(np.random.default_rng(1), 5), [0, 2])
        np.testing.assert_allclose(X.tau, X.dist[:, [0, 2]].min(axis=1))
        assert C.validate(X).ok

    def test_jittered_sampling_connected(self):
        L = H.space_from_model(CONST, 10, 10)
        A = H.space_from_model(CONST, 10, 10, jitter=1.0, seed=[1, 1], window_radius=L.meta["window_radius"])
        assert A.n == 100 and np.isfinite(A.dist).all()


class TestFixtures:
    def test_shipped(self):
        assert H.fixture_names() == ["flip_t", "levels_match", "t_to_x"]

    @pytest.mark.parametrize("name", ["flip_t", "levels_match", "t_to_x"])
    def test_fixture_has_provenance(self, name):
        fx = H.load_fixture(name)
        assert C.validate(fx["X"]).ok and C.validate(fx["Y"]).ok
        assert set(fx["expected"]) <= set(fx["provenance"])

    @pytest.mark.filterwarnings("ignore:exact enumeration:RuntimeWarning")
    def test_fixture_cases_pass(self):
        cases = H.fixture_cases()
        assert cases and all(c.passed for c in cases)
        assert all(c.provenance.split(":")[0] in H.PROVENANCE for c in cases)


class TestSuites:
    def test_sandwich_deterministic(self):
        a, b = H.run_sandwich_suite(11, 8, 4), H.run_sandwich_suite(11, 8, 4)
        assert a.passed
        assert strip_runtime(a.to_json()) == strip_runtime(b.to_json())

    def test_sandwich_self_pair(self):
        rep = H.run_sandwich_suite(0, 1, 1)
        assert rep.passed

    def test_definiteness_small(self):
        rep = H.run_definiteness_suite(5, 10, 4, 5)
        assert rep.passed, [c.name for c in rep.failures()]
        names = [c.name for c in rep.cases]
        assert any(n.endswith(":inflated") for n in names)
        assert any(n.startswith("bb") for n in names) and any(n.startswith("fd") for n in names)

    def test_oracle_regression(self):
        cfg = H.ExperimentConfig("oracle_regression", seed=4, model=CONST, ladder=[(8, 8), (16, 16)],
                                 params={"pairs": 40, "max_error": 0.5, "tau_max_error": 0.2})
        rep = H.run(cfg)
        assert rep.passed
        assert [r["param"] for r in rep.series] == ["8x8", "16x16"]
        assert {"null:non_increasing", "tau:non_increasing"} <= {c.name for c in rep.cases}
        assert strip_runtime(rep.to_json()) == strip_runtime(H.run(cfg).to_json())

    def test_tau_ladder_rounding_is_not_an_increase(self):
        cfg = H.ExperimentConfig("oracle_regression", model=CONST, ladder=[(16, 16), (32, 32), (64, 64)],
                                 params={"checks": ["tau"]})
        rep = H.run(cfg)
        errs = [c for c in rep.cases if c.name == "tau:non_increasing"][0]
        assert max(errs.got) <= 1e-12 and errs.passed

    def test_landmark_product_pair(self):
        cfg = H.ExperimentConfig("oracle_regression", model=CONST, ladder=[(51, 128)], params={"checks": []})
        mark = {"p": [0.2, 0.0], "q": [0.7, math.pi / 2], "expected": math.pi / 2,
                "provenance": "PAPER: product formula", "rel_tol": 0.06}
        case = H.landmark_case(CONST, mark, cfg)
        assert case.passed and case.provenance.startswith("PAPER")

    def test_convergence_small(self):
        family = M.warped(M.Spatial("circle", {"L": 2 * math.pi}), M.Warp("sinusoidal", {"a": 1.0, "omega": 2 * math.pi}),
                          (0.0, 1.0)).to_json()
        cfg = H.ExperimentConfig.from_dict({
            "kind": "convergence", "seed": 2, "ladder": [[8, 8]],
            "values": [0.5, 0.25, 0.0], "family": family, "limit": CONST.to_json(),
            "budget": 300, "probe_ops": ["timeless"], "probe_budget": 50,
        })
        rep = H.run(cfg)
        assert [r["param"] for r in rep.series] == [0.5, 0.25, 0.0]
        assert all(r["floor"] == rep.meta["floor"] for r in rep.series)
        probe = [c for c in rep.cases if c.name == "probe:timeless"][0]
        assert probe.provenance == "DERIVED: conjecture-probe" and probe.passed
        # the a = 0 member is the limit model itself
        assert rep.series[-1]["upper"] <= 1e-12

    def test_zero_amplitude_member_is_limit(self):
        family = {**CONST.to_json(), "warp": {"family": "sinusoidal", "params": {"a": 0.3, "omega": 1.0}}}
        m = H.family_member(family, "a", 0.0)
        assert m.warp.params["a"] == 0.0
