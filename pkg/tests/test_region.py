import numpy as np
import pytest

from mfsh.classifiers import InstabilityKind as K, eckhaus_mu
from mfsh.model import ModelParams
from mfsh.region import classify, is_stable, stable_region
from mfsh.tracer import Plane


def test_summary_example():
    c = classify(ModelParams.model1(5.5e-4, 0.003, 1000.0, pr=1.0, c2=2.0))
    assert "CR: unstable" in c.summary() and "SVI: unstable" in c.summary()
    assert not c.stable


@pytest.mark.parametrize("q,binding", [(-0.05, "osv"), (-0.02, "osv+cr"), (0.0058, "cr"), (0.05, "svi1+cr")])
def test_fig15_bindings(q, binding):
    assert classify(ModelParams.model1(0.1, q, 1000.0, pr=1.0, c2=0.0)).binding() == binding


def test_eckhaus_side():
    q = 0.1
    assert classify(ModelParams.model2(eckhaus_mu(q) * 0.9, q, 0.5)).unstable[K.ECKHAUS]
    assert is_stable(ModelParams.model2(eckhaus_mu(q) * 1.1, q, 0.5))


def test_nonexistent():
    c = classify(ModelParams.model2(1e-5, 0.1, 0.5))
    assert not c.exists and not c.stable and c.binding() == "existence"


def test_region_map_and_boundaries():
    tpl = ModelParams.model2(1.0, 0.0, 0.5)
    reg = stable_region(tpl, Plane(), (0.01, 0.2, 0.0, 0.4), resolution=(9, 9), threads=2)
    assert reg.mask.shape == (9, 9)
    assert reg.mask.any() and not reg.mask.all()
    # stable nodes lie above the Eckhaus curve
    for i, v in enumerate(reg.v_axis):
        for j, u in enumerate(reg.u_axis):
            if reg.mask[i, j]:
                assert v > eckhaus_mu(u)
    labels = {lab for lab, _ in reg.boundaries}
    assert any("eckhaus" in lab for lab in labels)
    assert reg.to_csv().splitlines()[0] == "q,mu,stable,binding"


def test_region_log_axis():
    tpl = ModelParams.model2(1.0, 0.0, 1.0)
    reg = stable_region(tpl, Plane("g-qs", 0.1), (1.0, 100.0, -0.3, 0.3), resolution=(3, 3))
    np.testing.assert_allclose(reg.u_axis, [1.0, 10.0, 100.0])
