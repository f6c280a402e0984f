from fractions import Fraction

import numpy as np
import pytest

from commatch.errors import ParameterError, ValidationError
from commatch.model import (
    CommunityLayout,
    EdgeAlphabet,
    PairedEdgeModel,
    copy_joint,
    dsbs_joint,
    homogeneous_model,
    load_model,
    marginal,
    product_coupling,
    save_model,
    single_community,
    uniform_product_joint,
    validate_model,
)


def test_layout_contiguous():
    lay = CommunityLayout.contiguous((2, 3))
    assert lay.n == 5 and lay.c == 2
    assert lay.membership == (0, 0, 1, 1, 1)
    assert lay.vertices_of(0) == (0, 1)
    assert lay.vertices_of(1) == (2, 3, 4)


def test_layout_rejects_bad_membership():
    with pytest.raises(ParameterError):
        CommunityLayout(sizes=(2, 2), membership=(0, 0, 0, 1))
    with pytest.raises(ParameterError):
        CommunityLayout(sizes=(2,), membership=(0, 5))
    with pytest.raises(ParameterError):
        CommunityLayout(sizes=(0, 2), membership=(1, 1))


@pytest.mark.parametrize("sizes,n,expected", [
    ((5, 5), 7, (4, 3)),
    ((2, 3), 10, (4, 6)),
    ((3,), 3, (3,)),
    ((1, 1), 6, (3, 3)),
    ((4, 1), 3, (2, 1)),
])
def test_scaled_sizes(sizes, n, expected):
    lay = CommunityLayout.contiguous(sizes)
    out = lay.scaled_sizes(n)
    assert out == expected
    assert sum(out) == n
    assert all(s >= 1 for s in out)


def test_scaled_sizes_rejects_too_small():
    with pytest.raises(ParameterError):
        CommunityLayout.contiguous((2, 2)).scaled_sizes(1)


def test_validate_ok():
    model, lay = homogeneous_model(dsbs_joint(0.1), (3, 2))
    rep = validate_model(model, lay)
    assert rep.ok and rep.violations == ()


def test_validate_catches_normalization():
    bad = np.full((1, 1, 2, 2), 0.3)
    rep = validate_model(PairedEdgeModel(EdgeAlphabet(2), bad), CommunityLayout.contiguous((4,)))
    assert not rep.ok
    assert any("normalization" in v for v in rep.violations)


def test_validate_catches_negative():
    blk = np.array([[1.5, -0.5], [0.0, 0.0]])
    bad = blk[None, None]
    rep = validate_model(PairedEdgeModel(EdgeAlphabet(2), bad), CommunityLayout.contiguous((4,)))
    assert not rep.ok
    assert any("negative" in v for v in rep.violations)


def test_validate_catches_asymmetry():
    t = np.zeros((2, 2, 2, 2))
    t[:] = uniform_product_joint(2)
    t[0, 1] = np.array([[0.5, 0.0], [0.0, 0.5]])  # differs from t[1, 0]
    rep = validate_model(PairedEdgeModel(EdgeAlphabet(2), t), CommunityLayout.contiguous((2, 2)))
    assert not rep.ok
    assert any("asymmetry" in v for v in rep.violations)


def test_validate_catches_community_count_mismatch():
    model = single_community(copy_joint(2))
    rep = validate_model(model, CommunityLayout.contiguous((2, 2)))
    assert not rep.ok


def test_dsbs_float():
    j = dsbs_joint(0.2)
    assert j.shape == (2, 2)
    assert j[0, 0] == j[1, 1] == 0.4
    assert j[0, 1] == j[1, 0] == 0.1
    assert j.sum() == pytest.approx(1.0, abs=1e-15)


def test_dsbs_exact():
    j = dsbs_joint(Fraction(1, 10), exact=True)
    assert j[0][0] == Fraction(9, 20)
    assert j[0][1] == Fraction(1, 20)
    assert sum(sum(row) for row in j) == 1


def test_dsbs_rejects_bad_crossover():
    with pytest.raises(ParameterError):
        dsbs_joint(1.2)
    with pytest.raises(ParameterError):
        dsbs_joint(-0.1)


def test_copy_and_uniform_joints():
    assert np.array_equal(copy_joint(3), np.eye(3) / 3)
    assert np.array_equal(uniform_product_joint(2), np.full((2, 2), 0.25))


def test_marginals_of_dsbs_are_uniform():
    model = single_community(dsbs_joint(0.2))
    for side in ("first", "second"):
        t = marginal(model, side).tensor
        assert t.shape == (1, 1, 2)
        assert np.allclose(t[0, 0], [0.5, 0.5])
    with pytest.raises(ParameterError):
        marginal(model, "third")


def test_product_coupling_of_copy_is_uniform():
    pc = product_coupling(single_community(copy_joint(2)))
    assert np.array_equal(pc.joint[0, 0], uniform_product_joint(2))


def test_product_coupling_keeps_marginals():
    model, _ = homogeneous_model(dsbs_joint(0.3), (2, 2))
    pc = product_coupling(model)
    for side in ("first", "second"):
        assert np.allclose(marginal(pc, side).tensor, marginal(model, side).tensor)


def test_homogeneous_model_tiles_blocks():
    model, lay = homogeneous_model(dsbs_joint(0.1), (2, 3))
    assert model.c == 2 and model.l == 2
    assert lay.sizes == (2, 3)
    for i in range(2):
        for j in range(2):
            assert np.array_equal(model.joint[i, j], dsbs_joint(0.1))


def test_model_roundtrip(tmp_path):
    model, lay = homogeneous_model(dsbs_joint(0.17), (3, 2))
    path = tmp_path / "model.json"
    save_model(model, lay, path)
    m2, lay2 = load_model(path)
    assert lay2.sizes == lay.sizes
    assert lay2.membership == lay.membership
    assert np.array_equal(m2.joint, model.joint)


def test_load_rejects_invalid(tmp_path):
    path = tmp_path / "bad.json"
    model, lay = homogeneous_model(dsbs_joint(0.1), (2, 2))
    save_model(model, lay, path)
    text = path.read_text().replace("0.45", "0.40", 1)
    path.write_text(text)
    with pytest.raises(ValidationError):
        load_model(path)


def test_load_wraps_file_errors(tmp_path):
    with pytest.raises(ValidationError, match="cannot read"):
        load_model(tmp_path / "missing.json")
    corrupt = tmp_path / "corrupt.json"
    corrupt.write_text("{truncated")
    with pytest.raises(ValidationError, match="not valid JSON"):
        load_model(corrupt)
    arr = tmp_path / "arr.json"
    arr.write_text("[]")
    with pytest.raises(ValidationError, match="JSON object"):
        load_model(arr)


def test_joint_tensor_is_readonly():
    model = single_community(copy_joint(2))
    with pytest.raises(ValueError):
        model.joint[0, 0, 0, 0] = 0.5
