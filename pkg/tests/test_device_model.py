import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cntpuf.device_model import (
    CellClass,
    CellModel,
    ClassMix,
    ConfigError,
    LogRange,
    cell_drain_current,
    cell_gate_current,
    sample_cell,
)

volts = st.floats(-5, 5, allow_nan=False)


def semi(g_on=1e-6, g_off=1e-10, g_gate=1e-12, v_th=1.0, sigma=0.1):
    return CellModel(CellClass.SEMICONDUCTING, g_on, g_off, g_gate, v_th, sigma)


cells = st.builds(
    CellModel,
    st.sampled_from(list(CellClass)),
    st.floats(1e-13, 1e-5),
    st.floats(1e-13, 1e-5),
    st.floats(0, 3e-12),
    st.floats(0.1, 2.0),
    st.floats(0, 0.5),
)


class TestSampleCell:
    def test_degenerate_mix_is_metallic(self):
        mix = ClassMix(p_metallic=1.0, p_semiconducting=0.0, p_insulating=0.0)
        for seed in range(20):
            assert sample_cell(mix, seed).cls is CellClass.METALLIC

    def test_deterministic(self):
        assert sample_cell(ClassMix(), 1234) == sample_cell(ClassMix(), 1234)

    def test_insulating_g_off_bounds(self):
        mix = ClassMix(0.0, 0.0, 1.0, g_off_insulating=LogRange(1e-12, 4e-12))
        g = np.array([sample_cell(mix, s).g_off for s in range(10000)])
        assert g.min() >= 1e-12 and g.max() <= 4e-12
        # log-uniform: median sits at the geometric midpoint
        assert np.median(g) == pytest.approx(2e-12, rel=0.05)

    @pytest.mark.parametrize("seed", range(50))
    def test_sampled_cells_satisfy_class_invariants(self, seed):
        mix = ClassMix(p_metallic=0.3, p_semiconducting=0.4, p_insulating=0.3)
        c = sample_cell(mix, seed)
        if c.cls is CellClass.METALLIC:
            assert c.g_on == c.g_off
        elif c.cls is CellClass.SEMICONDUCTING:
            assert c.g_on > c.g_off
        else:
            assert c.g_on == c.g_off
            assert mix.g_off_insulating.lo <= c.g_off <= mix.g_off_insulating.hi
        assert c.v_th > 0 and c.g_gate >= 0

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(p_metallic=0.1, p_semiconducting=0.4, p_insulating=0.4),
            dict(g_on=LogRange(1e-5, 1e-7)),
            dict(g_off_insulating=LogRange(1e-13, 2e-10)),
            dict(v_th=LogRange(0.0, 1.0)),
            dict(noise_sigma=-0.1),
        ],
    )
    def test_invalid_mix(self, kwargs):
        with pytest.raises(ConfigError):
            ClassMix(**kwargs)

    def test_overlap_allowed_when_flagged(self):
        ClassMix(g_off_insulating=LogRange(1e-13, 2e-10), allow_overlap=True)


class TestDrainCurrent:
    def test_zero_vds(self):
        assert cell_drain_current(semi(), 2.0, 0.3, 0.3) == 0.0

    def test_insulating_leak(self):
        c = CellModel(CellClass.INSULATING, 2e-12, 2e-12, 1e-12, 1.0)
        assert cell_drain_current(c, 0.0, 0.5, 0.0) == pytest.approx(1.0e-12, rel=1e-15)

    def test_semiconducting_on_at_reference_bias(self):
        # V_GS = -2.5 V, V_DS = -1 V
        assert cell_drain_current(semi(), -2.5, -1.0, 0.0) == pytest.approx(-1.0e-6, rel=1e-15)

    def test_semiconducting_below_threshold_uses_g_off(self):
        assert cell_drain_current(semi(), 0.5, 1.0, 0.0) == pytest.approx(1e-10)

    def test_metallic_ignores_gate(self):
        c = CellModel(CellClass.METALLIC, 3e-6, 3e-6, 0.0, 1.0)
        assert cell_drain_current(c, 0.0, 0.5, 0.0) == cell_drain_current(c, 2.0, 0.5, 0.0)

    def test_noise_factor(self):
        c = semi(sigma=0.2)
        assert cell_drain_current(c, 2.0, 1.0, 0.0, noise=1.5) == pytest.approx(1e-6 * math.exp(0.3))

    @given(cells, volts, volts, volts, st.floats(0.1, 10))
    def test_linear_in_vds(self, cell, vg, vs, vds, k):
        i1 = cell_drain_current(cell, vg, vs + vds, vs)
        ik = cell_drain_current(cell, vg, vs + k * vds, vs)
        assert ik == pytest.approx(k * i1, rel=1e-9, abs=1e-30)

    @given(cells, volts, volts, volts, st.none() | st.floats(-4, 4))
    def test_polarity(self, cell, vg, vd, vs, z):
        assert cell_drain_current(cell, -vg, -vd, -vs, z) == -cell_drain_current(cell, vg, vd, vs, z)
        assert cell_gate_current(cell, -vg, -vd, -vs, z) == -cell_gate_current(cell, vg, vd, vs, z)

    @given(cells, volts, volts, volts, st.floats(-4, 4))
    def test_sign_follows_vds(self, cell, vg, vd, vs, z):
        i = cell_drain_current(cell, vg, vd, vs, z)
        assert np.sign(i) == np.sign(vd - vs) or (cell.g_on == 0 and cell.g_off == 0)


class TestGateCurrent:
    def test_zero_conductance(self):
        assert cell_gate_current(semi(g_gate=0.0), 2.0, 0.5, 0.0) == 0.0

    def test_split_leak(self):
        assert cell_gate_current(semi(g_gate=1e-12), 2.0, 0.0, 0.0) == pytest.approx(2.0e-12, rel=1e-15)

    @given(cells, volts, volts, volts, st.none() | st.floats(-4, 4))
    def test_class_swap_invariance(self, cell, vg, vd, vs, z):
        base = cell_gate_current(cell, vg, vd, vs, z)
        for cls in CellClass:
            other = CellModel(cls, 7e-6, 3e-13, cell.g_gate, 0.9, cell.noise_sigma)
            assert cell_gate_current(other, vg, vd, vs, z) == base


@settings(max_examples=50)
@given(st.integers(0, 2**32), st.integers(0, 2**32), st.integers(0, 2**32), st.sampled_from([0.5, -1.0, 0.1]))
def test_off_state_ordering(sm, ss, si, vds):
    metallic = ClassMix(1.0, 0.0, 0.0)
    semic = ClassMix(0.0, 1.0, 0.0)
    ins = ClassMix(0.0, 0.0, 1.0)
    m = abs(cell_drain_current(sample_cell(metallic, sm), 0.0, vds, 0.0))
    s = abs(cell_drain_current(sample_cell(semic, ss), 0.0, vds, 0.0))
    i = abs(cell_drain_current(sample_cell(ins, si), 0.0, vds, 0.0))
    assert m > s > i
