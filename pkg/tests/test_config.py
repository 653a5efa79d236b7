from pathlib import Path

import numpy as np
import pytest

from bplab.config import (
    DEFAULT_OUTPUT_DIR,
    OUTPUT_ENV,
    SCENARIOS,
    ConfigError,
    ExperimentConfig,
    GridSpec,
    load_config,
    parse_config,
    resolve_output_dir,
)
from bplab.models import ModelKind
from bplab.timeloop import DEFAULT_RESOLUTION_FRACTION, Scheme

CATALOG = Path(__file__).resolve().parent.parent / "catalog"


class TestCatalog:
    """Every preset must load and validate."""

    @pytest.mark.parametrize("scenario", SCENARIOS)
    def test_preset_loads(self, scenario):
        config = load_config(CATALOG / f"{scenario}.yaml")
        assert config.scenario == scenario
        assert config.run_name == scenario

    def test_dispersion_preset_values(self):
        config = load_config(CATALOG / "dispersion.yaml")
        assert config.sweep.mu == [0.0, 0.1, 0.5]
        assert config.sweep.k == [1, 2, 3]
        assert config.stepper.scheme is Scheme.RK4
        assert config.grid.build().n == 256

    def test_burgers_preset_model(self):
        config = load_config(CATALOG / "burgers.yaml")
        assert config.params.model is ModelKind.BURGERS
        assert config.initial.shape == "burgers_sine"
        assert config.stepper.build().resolution_fraction == DEFAULT_RESOLUTION_FRACTION


class TestParseConfig:
    """Tests for parse_config."""

    def test_defaults(self):
        config = parse_config({"scenario": "operator-audit"})
        assert config.seed == 0
        assert config.grid.d == 1
        assert len(config.audit.grids) == 2
        assert config.thresholds.audit_symmetry == 1e-10

    def test_not_a_mapping(self):
        with pytest.raises(ConfigError, match="マッピング"):
            parse_config([1, 2, 3])

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError, match="scenario"):
            parse_config({"scenario": "tsunami"})

    def test_extra_key_reports_dotted_path(self):
        with pytest.raises(ConfigError, match=r"stepper\.dtt"):
            parse_config({"scenario": "operator-audit", "stepper": {"dtt": 0.1}})

    def test_out_of_range_value_reports_path(self):
        with pytest.raises(ConfigError, match=r"bathymetry\.beta"):
            parse_config({"scenario": "operator-audit", "bathymetry": {"beta": 1.5}})

    def test_source_is_prefixed(self):
        with pytest.raises(ConfigError, match="^cfg.yaml: "):
            parse_config({"scenario": "operator-audit", "seed": -1}, source="cfg.yaml")

    def test_invalid_grid_is_rejected(self):
        with pytest.raises(ConfigError, match="grid"):
            parse_config({"scenario": "operator-audit", "grid": {"n": 30}})

    @pytest.mark.parametrize(
        "scenario, sweep, message",
        [
            ("dispersion", {"mu": [0.1]}, "sweep.k"),
            ("longtime", {}, "sweep.eps"),
            ("burgers", {}, "sweep.eps"),
            ("consistency", {"mu": [0.1, 0.05]}, "at least 3"),
            ("mollifier-study", {"delta": [1e-2, 1e-3]}, "contain 0"),
        ],
    )
    def test_sweep_axes(self, scenario, sweep, message):
        with pytest.raises(ConfigError, match=message):
            parse_config({"scenario": scenario, "sweep": sweep})

    def test_name_overrides_run_name(self):
        config = parse_config({"scenario": "operator-audit", "name": "audit-fine"})
        assert config.run_name == "audit-fine"

    def test_params_build_with_overrides(self):
        config = parse_config({"scenario": "operator-audit", "params": {"eps": 0.1, "mu": 0.2}})
        params = config.params.build(model="SW", eps=0.0)
        assert params.model is ModelKind.SW
        assert params.eps == 0.0
        assert params.mu == 0.2


class TestGridSpec:
    """Tests for GridSpec.build."""

    def test_sqrt_mu_gamma(self):
        grid = GridSpec(d=2, n=16, L=2 * np.pi, gamma="sqrt_mu").build(mu=0.25)
        assert grid.gamma == pytest.approx(0.5)

    def test_per_axis_lengths(self):
        grid = GridSpec(d=2, n=16, L=[2 * np.pi, 4 * np.pi]).build()
        assert grid.lengths == pytest.approx((2 * np.pi, 4 * np.pi))


class TestLoadConfig:
    """Tests for load_config."""

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="見つかりません"):
            load_config(tmp_path / "missing.yaml")

    def test_broken_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("scenario: [dispersion\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="YAML"):
            load_config(path)

    def test_path_in_error(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("scenario: burgers\nsweep:\n  eps: []\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="bad.yaml"):
            load_config(path)


class TestResolveOutputDir:
    """Priority: --out > config output_dir > env > default."""

    def test_cli_wins(self, monkeypatch):
        config = parse_config({"scenario": "operator-audit", "output_dir": "/cfg"})
        assert resolve_output_dir("/cli", config) == Path("/cli")

    def test_config_before_env(self):
        config = parse_config({"scenario": "operator-audit", "output_dir": "/cfg"})
        assert resolve_output_dir(None, config) == Path("/cfg")

    def test_env(self, monkeypatch):
        monkeypatch.setenv(OUTPUT_ENV, "/env")
        assert resolve_output_dir(None, ExperimentConfig(scenario="operator-audit")) == Path("/env")

    def test_default(self, monkeypatch):
        monkeypatch.delenv(OUTPUT_ENV, raising=False)
        assert resolve_output_dir(None) == Path(DEFAULT_OUTPUT_DIR)
