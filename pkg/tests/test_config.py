import pytest
from hypothesis import given
from hypothesis import strategies as st

from vdwtransmon.config import load_config, parse_config
from vdwtransmon.errors import ConfigError
from vdwtransmon.units import UnitError, parse_quantity

from conftest import CONFIGS


def errors_for(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.errors


class TestUnits:
    @pytest.mark.parametrize(
        "text,dim,value",
        [
            ("109 um2", "area", 109e-12),
            ("35 nm", "length", 35e-9),
            ("40.3 MHz", "frequency", 40.3e6),
            ("1.06 us", "time", 1.06e-6),
            ("1.06 µs", "time", 1.06e-6),
            ("0.2 mA", "current", 0.2e-3),
            ("26.51 fF", "capacitance", 26.51e-15),
            ("4.4", "dimensionless", 4.4),
            ("-3e2 kHz", "frequency", -3e5),
        ],
    )
    def test_parse(self, text, dim, value):
        assert parse_quantity(text, dim) == pytest.approx(value, rel=1e-15)

    @pytest.mark.parametrize(
        "text,dim,msg",
        [("40.3", "frequency", "missing unit"), ("40.3 us", "frequency", "mismatch"), ("3 furlongs", "length", "unknown unit")],
    )
    def test_errors(self, text, dim, msg):
        with pytest.raises(UnitError, match=msg):
            parse_quantity(text, dim)

    @given(st.floats(1e-3, 1e6))
    def test_scaling(self, v):
        assert parse_quantity(f"{v!r} GHz", "frequency") == pytest.approx(v * 1e9, rel=1e-15)


class TestShippedConfigs:
    def test_device_device(self):
        cfg = load_config(CONFIGS / "vdw_device.yaml")
        e_c, unit = cfg.resolved["device.e_c"]
        assert unit == "Hz" and e_c == pytest.approx(131e6, abs=0.5e6)
        assert cfg.resolved["device.ej_over_ec"][0] == pytest.approx(213.7, abs=0.5)
        assert cfg.resolved["dynamics.t_phi"][0] == pytest.approx(7.868e-6, rel=1e-3)
        assert cfg.flux == 0.0

    def test_conventional(self):
        cfg = load_config(CONFIGS / "conventional_qubit.yaml")
        assert cfg.transmon.e_c == 131e6 and cfg.geometry is None


class TestErrors:
    def test_negative_thickness(self, device_config_text):
        errs = errors_for(device_config_text.replace("thickness: 35 nm", "thickness: -35 nm"))
        assert errs == ["line 5: device.geometry.thickness = -35 nm violates invariant thickness > 0"]

    def test_dimension_mismatch(self, device_config_text):
        errs = errors_for(device_config_text.replace("g: 40.3 MHz", "g: 40.3 us"))
        assert len(errs) == 1 and "unit-dimension mismatch" in errs[0] and errs[0].startswith("line 21:")

    def test_missing_unit(self, device_config_text):
        errs = errors_for(device_config_text.replace("kappa: 290 kHz", "kappa: 290"))
        assert len(errs) == 1 and "missing unit" in errs[0]

    def test_unknown_key(self, device_config_text):
        errs = errors_for(device_config_text.replace("  seed: 2021", "  seed: 2021\n  colour: red"))
        assert errs == ["line 59: unknown key 'run.colour'"]

    def test_all_errors_reported(self, device_config_text):
        text = (
            device_config_text.replace("thickness: 35 nm", "thickness: -35 nm")
            .replace("g: 40.3 MHz", "g: 40.3 us")
            .replace("  seed: 2021", "  seed: 2021\n  colour: red")
        )
        assert len(errors_for(text)) == 3

    def test_both_parameterizations(self, device_config_text):
        text = device_config_text.replace(
            "epsilon_r: 4.4", "epsilon_r: 4.4\n  transmon:\n    e_c: 131 MHz\n    e_j_max: 28 GHz"
        )
        (err,) = errors_for(text)
        assert "both given" in err

    def test_missing_required(self):
        errs = errors_for("device:\n  transmon:\n    e_c: 131 MHz\n")
        assert any("e_j_max" in e for e in errs)

    def test_not_yaml_mapping(self):
        assert errors_for("- 1\n- 2\n")


def test_explicit_transmon():
    cfg = parse_config(
        "device:\n  transmon:\n    e_c: 131 MHz\n    e_j_max: 28 GHz\ndynamics:\n  t1: 1.06 us\n  t2_star: 1.67 us\n"
    )
    assert cfg.transmon.e_j_max == 28e9
    assert cfg.dynamics()["t_phi"] == pytest.approx(7.868e-6, rel=1e-3)
