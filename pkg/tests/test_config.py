"""Run-configuration parsing: schema violations must name the offending key."""
import json
import math

import pytest

import toporisk as tr
from toporisk.config import build_mesh, build_model, build_problem, build_schedule
from toporisk.errors import ConfigError


def base_config(**overrides):
    cfg = {
        "schema_version": 1,
        "problem": {"kind": "mean", "volume_fraction": 0.4},
        "mesh": {"dim": 2, "cells": [6, 3]},
        "material": {"youngs_modulus": 1.0, "poissons_ratio": 0.3},
        "filter_radius": 1.5,
        "scenarios": {"source": "sample", "L": 5, "seed": 0},
    }
    cfg.update(overrides)
    return cfg


def test_valid_config_defaults():
    cfg = tr.parse_config(base_config())
    assert cfg.kind == "mean"
    assert cfg.x_min == 0.001
    assert cfg.method == "svd"
    assert cfg.element_size == 1.0
    assert cfg.thickness == 1.0
    assert cfg.output_dir == "out"
    assert cfg.cells == (6, 3)


def test_load_config_round_trip(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(base_config()))
    cfg = tr.load_config(path)
    assert cfg.L == 5 and cfg.seed == 0


def test_load_config_bad_file(tmp_path):
    with pytest.raises(ConfigError):
        tr.load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        tr.load_config(bad)


@pytest.mark.parametrize("mutate,fragment", [
    (lambda c: c.pop("schema_version"), "schema_version"),
    (lambda c: c.update(schema_version=2), "schema_version"),
    (lambda c: c.update(bogus=1), "unknown keys"),
    (lambda c: c["problem"].update(kind="minimax"), "problem.kind"),
    (lambda c: c["problem"].pop("volume_fraction"), "volume_fraction"),
    (lambda c: c["problem"].update(volume_fraction=1.0), "volume_fraction"),
    (lambda c: c["problem"].update(volume_fraction=True), "volume_fraction"),
    (lambda c: c["mesh"].update(dim=4), "mesh.dim"),
    (lambda c: c["mesh"].update(cells=[6]), "mesh.cells"),
    (lambda c: c["mesh"].update(cells=[6, 0]), "mesh.cells"),
    (lambda c: c.update(filter_radius=-2.0), "filter_radius"),
    (lambda c: c.update(x_min=0.0), "x_min"),
    (lambda c: c["scenarios"].update(source="guess"), "scenarios.source"),
    (lambda c: c["scenarios"].update(L=0), "scenarios.L"),
    (lambda c: c["scenarios"].update(seed=-1), "scenarios.seed"),
    (lambda c: c.update(method="fast"), "method"),
    (lambda c: c.update(svd_rel_tol=1.0), "svd_rel_tol"),
    (lambda c: c.update(schedule={"p_whoops": 2.0}), "schedule"),
])
def test_rejections_name_the_key(mutate, fragment):
    cfg = base_config()
    mutate(cfg)
    with pytest.raises(ConfigError, match=fragment.replace(".", r"\.")):
        tr.parse_config(cfg)


def test_mean_std_default_m():
    cfg = tr.parse_config(base_config(
        problem={"kind": "mean_std", "volume_fraction": 0.4}))
    assert cfg.m == 2.0
    cfg = tr.parse_config(base_config(
        problem={"kind": "mean_std", "volume_fraction": 0.4, "m": 0.0}))
    assert cfg.m == 0.0


def test_max_compliance_threshold_forms():
    cfg = tr.parse_config(base_config(problem={"kind": "max_compliance", "C_t": 120.5}))
    assert cfg.C_t == 120.5
    cfg = tr.parse_config(base_config(problem={"kind": "max_compliance", "C_t": "inf"}))
    assert math.isinf(cfg.C_t)
    with pytest.raises(ConfigError):
        tr.parse_config(base_config(problem={"kind": "max_compliance", "C_t": -1.0}))
    with pytest.raises(ConfigError):
        tr.parse_config(base_config(problem={"kind": "max_compliance"}))
    with pytest.raises(ConfigError):
        tr.parse_config(base_config(problem={"kind": "max_compliance", "C_t": "huge"}))


def test_scenario_file_source(tmp_path):
    csv = tmp_path / "loads.csv"
    csv.write_text("dof,scenario,value\n13,0,-1.0\n")
    cfg = tr.parse_config(base_config(scenarios={"source": "file", "path": str(csv)}))
    model = build_model(cfg)
    assert model.scenarios.n_scenarios == 1
    assert model.scenarios.column(0)[13] == -1.0


def test_bad_mma_and_schedule_params_rejected():
    with pytest.raises(ConfigError):
        tr.parse_config(base_config(mma={"move": -1.0}))
    with pytest.raises(ConfigError):
        tr.parse_config(base_config(mma={"whirl": 3}))
    with pytest.raises(ConfigError):
        tr.parse_config(base_config(schedule={"tol_start": 1e-4, "tol_end": 1e-3}))


def test_builders_assemble_consistent_objects():
    cfg = tr.parse_config(base_config(method="naive"))
    mesh = build_mesh(cfg)
    assert mesh.n_elements == 18
    model = build_model(cfg)
    assert model.method == "naive"
    assert model.scenarios.n_scenarios == 5
    problem = build_problem(cfg, model)
    assert isinstance(problem, tr.MeanComplianceProblem)
    schedule = build_schedule(cfg)
    assert len(schedule.steps) == 16

    # CLI-style overrides
    model2 = build_model(cfg, method="svd", seed=9)
    assert model2.method == "svd"
    assert not (model2.scenarios.block == model.scenarios.block).all()


def test_build_problem_kinds():
    cfg = tr.parse_config(base_config(
        problem={"kind": "mean_std", "volume_fraction": 0.4, "m": 1.5}))
    problem = build_problem(cfg, build_model(cfg))
    assert isinstance(problem, tr.MeanStdProblem)
    assert problem.m == 1.5

    cfg = tr.parse_config(base_config(
        problem={"kind": "max_compliance", "C_t": 50.0},
        auglag={"dual_iters": 4}))
    problem = build_problem(cfg, build_model(cfg))
    assert isinstance(problem, tr.MaxComplianceProblem)
    assert problem.dual_iters == 4

    cfg = tr.parse_config(base_config(
        problem={"kind": "max_compliance", "C_t": 50.0},
        auglag={"momentum": 0.9}))
    with pytest.raises(ConfigError):
        build_problem(cfg, build_model(cfg))
