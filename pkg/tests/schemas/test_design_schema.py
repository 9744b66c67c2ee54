import pytest
from pydantic import ValidationError

from app.schemas.design import DesignConfig, DesignKind, IndicationDesign
from app.schemas.model import ModelKind
from app.schemas.outcome import UTILITY_PRESETS


class TestIndicationDesign:
    def test_defaults(self):
        ind = IndicationDesign()
        assert (ind.n_stage1, ind.n_stage2, ind.n_interim) == (14, 20, 10)
        assert ind.max_total == 54

    def test_utility_preset_by_name(self):
        ind = IndicationDesign(utility="indication_3")
        assert ind.utility == UTILITY_PRESETS["indication_3"]

    def test_unknown_preset(self):
        with pytest.raises(ValidationError):
            IndicationDesign(utility="indication_9")

    def test_interim_beyond_stage2(self):
        with pytest.raises(ValidationError):
            IndicationDesign(n_stage2=10, n_interim=12)

    def test_stage2_needs_patients(self):
        with pytest.raises(ValidationError):
            IndicationDesign(n_stage2=0, n_interim=0)


class TestDesignConfig:
    def test_pool_sizes_default(self):
        cfg = DesignConfig(kind=DesignKind.POOL, indications=[IndicationDesign()] * 3)
        assert cfg.pool_sizes() == (81, 41)
        assert cfg.max_total == 162

    def test_independent_sizes_default(self):
        cfg = DesignConfig(kind=DesignKind.INDEPENDENT, indications=[IndicationDesign()] * 3)
        assert cfg.independent_sizes(0) == (27, 14)

    def test_independent_overrides(self):
        cfg = DesignConfig(
            kind=DesignKind.INDEPENDENT,
            indications=[IndicationDesign()] * 2,
            independent_max_per_dose=30,
            independent_interim=20,
        )
        assert cfg.independent_sizes(1) == (30, 20)
        assert cfg.max_total == 120

    def test_needs_an_indication(self):
        with pytest.raises(ValidationError):
            DesignConfig(kind=DesignKind.ROMI_V1, indications=[])


def test_design_kind_models():
    assert DesignKind.ROMI_V2.model is ModelKind.V2
    assert DesignKind.ROMI_V1_NC.model is ModelKind.NC
    assert DesignKind.POOL.model is ModelKind.CONJUGATE
    assert not DesignKind.INDEPENDENT.is_romi
