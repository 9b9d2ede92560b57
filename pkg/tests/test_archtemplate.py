import json

import pytest

from spaccel.archtemplate import (
    DEFAULT_AREA_BUDGET,
    AespaConfig,
    ConfigError,
    allocate,
    config_from_dict,
    config_to_dict,
    default_calibration,
    load_calibration,
    load_config,
    peak_tflops,
    preset,
    save_config,
    used_area,
    PRESET_NAMES,
)
from spaccel.costmodel import ClusterConfig, Dataflow


class TestCalibrationEndpoints:
    def test_homog_tpu(self):
        assert peak_tflops(preset("homog-tpu")) == pytest.approx(34.56, rel=0.005)

    def test_lowest_homogeneous_is_extensor(self):
        values = {
            k: peak_tflops(preset(f"homog-{k}"))
            for k in ("tpu", "eie", "extensor", "outerspace", "matraptor")
        }
        assert min(values.values()) == values["extensor"]
        assert values["extensor"] == pytest.approx(9.98, rel=0.005)

    def test_homog_hybrid(self):
        assert peak_tflops(preset("homog-hybrid")) == pytest.approx(8.96, rel=0.005)

    def test_peak_ordering(self):
        v = {
            k: peak_tflops(preset(f"homog-{k}"))
            for k in ("tpu", "eie", "extensor", "outerspace", "matraptor", "hybrid")
        }
        assert v["tpu"] >= v["eie"] >= v["outerspace"] >= v["extensor"] >= v["hybrid"]
        assert v["eie"] >= v["matraptor"] >= v["extensor"]


class TestAllocate:
    def test_full_budget_tpu(self):
        cfg = allocate({Dataflow.TPU: 1.0})
        assert len(cfg.clusters) == 1
        assert cfg.clusters[0].pe_count == 17280

    def test_zero_mix_rejected(self):
        with pytest.raises(ConfigError):
            allocate({})
        with pytest.raises(ConfigError):
            allocate({Dataflow.TPU: 0.0})

    def test_oversubscribed_rejected(self):
        with pytest.raises(ConfigError):
            allocate({Dataflow.TPU: 0.7, Dataflow.EIE: 0.7})

    def test_negative_rejected(self):
        with pytest.raises(ConfigError):
            allocate({Dataflow.TPU: -0.1, Dataflow.EIE: 0.5})

    def test_half_half_within_budget(self):
        cfg = allocate({Dataflow.TPU: 0.5, Dataflow.OUTERSPACE: 0.5})
        assert used_area(cfg) <= DEFAULT_AREA_BUDGET + 1e-9

    def test_every_preset_fits_budget(self):
        for name in PRESET_NAMES:
            if name == "aespa-searched":
                continue  # exercised in the acceptance suite (runs the sweep)
            cfg = preset(name)
            assert used_area(cfg) <= DEFAULT_AREA_BUDGET + 1e-9, name

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            allocate({"dsp": 1.0})


class TestPeakTflops:
    def test_unit_case(self):
        cfg = AespaConfig(name="u", clusters=(ClusterConfig("c", Dataflow.TPU, 1, 1e9),))
        assert peak_tflops(cfg) == pytest.approx(2e-3)

    def test_linear_and_order_invariant(self):
        a = ClusterConfig("a", Dataflow.TPU, 100)
        b = ClusterConfig("b", Dataflow.EIE, 50)
        assert peak_tflops(AespaConfig(name="x", clusters=(a, b))) == pytest.approx(
            peak_tflops(AespaConfig(name="y", clusters=(b, a)))
        )
        double = ClusterConfig("a", Dataflow.TPU, 200)
        assert peak_tflops(AespaConfig(name="z", clusters=(double,))) == pytest.approx(
            2 * peak_tflops(AespaConfig(name="w", clusters=(a,)))
        )


class TestPresets:
    def test_quarters_has_four_kinds(self):
        cfg = preset("aespa-quarters")
        kinds = [c.dataflow for c in cfg.clusters]
        assert kinds == [Dataflow.TPU, Dataflow.EIE, Dataflow.EXTENSOR, Dataflow.OUTERSPACE]

    def test_half_tpu_outerspace(self):
        cfg = preset("aespa-half-tpu-outerspace")
        assert [c.dataflow for c in cfg.clusters] == [Dataflow.TPU, Dataflow.OUTERSPACE]
        assert cfg.clusters[0].pe_count == 17280 // 2

    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            preset("homog-dsp")

    def test_memory_defaults(self):
        cfg = preset("homog-tpu")
        assert cfg.hbm_bandwidth == 1e12
        assert cfg.hbm_capacity == 32 * 2**30
        assert cfg.scratchpad_capacity == 64 * 2**20
        assert cfg.scratchpad_bandwidth == 8.192e12
        assert cfg.frequency == 1e9


class TestConfigFile:
    def test_round_trip_lossless(self, tmp_path):
        cfg = preset("aespa-quarters")
        path = tmp_path / "cfg.json"
        save_config(cfg, path)
        again = load_config(path)
        assert config_to_dict(again) == config_to_dict(cfg)

    def test_dict_round_trip(self):
        cfg = preset("homog-eie")
        assert config_to_dict(config_from_dict(config_to_dict(cfg))) == config_to_dict(cfg)

    def test_malformed_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"name": "x"})
        with pytest.raises(ConfigError):
            config_from_dict({"clusters": [{"name": "c"}]})

    def test_custom_calibration_file(self, tmp_path):
        raw = json.loads(
            json.dumps(
                {
                    "compute_area_budget_mm2": 100.0,
                    "area_per_pe_mm2": {"tpu": 1.0, "eie": 2.0},
                    "energy": {"e_mac": 1.0, "e_sram_word": 5.0, "e_hbm_word": 6400.0, "e_idle_pe_cycle": 1.0},
                    "memory": {
                        "hbm_bandwidth_bytes_per_s": 5e11,
                        "hbm_capacity_bytes": 2**30,
                        "scratchpad_capacity_bytes": 2**20,
                        "scratchpad_bandwidth_bytes_per_s": 1e12,
                        "frequency_hz": 5e8,
                    },
                }
            )
        )
        path = tmp_path / "cal.json"
        path.write_text(json.dumps(raw))
        cal = load_calibration(path)
        cfg = allocate({Dataflow.TPU: 0.5, Dataflow.EIE: 0.5}, cal)
        assert cfg.clusters[0].pe_count == 50
        assert cfg.clusters[1].pe_count == 25
        assert cfg.hbm_bandwidth == 5e11
        assert cfg.frequency == 5e8

    def test_default_calibration_consistent(self):
        cal = default_calibration()
        assert cal.energy.e_hbm_word / cal.energy.e_mac == 6400.0
        assert set(cal.area.area_per_pe) == set(Dataflow)
