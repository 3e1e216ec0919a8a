import struct

import numpy as np
import pytest

from trsketch.exceptions import DimensionError, InvalidInstanceError
from trsketch.projector import (
    ScalingConvention,
    apply,
    check_inner_product,
    check_linear_map,
    check_norm_preservation,
    check_quadratic_form,
    gram_deviation,
    lift,
    load_projector,
    sample_projector,
    sample_unit_vectors,
    save_projector,
)


@pytest.mark.parametrize("token, tag", [("inv-sqrt-n", 0), ("inv-sqrt-d", 1), ("orthonormal-rows", 2)])
def test_convention_tokens_and_tags(token, tag):
    conv = ScalingConvention.parse(token)
    assert conv.tag == tag
    assert ScalingConvention.from_tag(tag) is conv


def test_unknown_convention_rejected():
    with pytest.raises(ValueError):
        ScalingConvention.parse("gaussian")
    with pytest.raises(ValueError):
        ScalingConvention.from_tag(7)


def test_sampling_is_deterministic_per_seed():
    p1 = sample_projector(40, 5, "inv-sqrt-n", seed=11)
    p2 = sample_projector(40, 5, "inv-sqrt-n", seed=11)
    p3 = sample_projector(40, 5, "inv-sqrt-n", seed=12)
    assert np.array_equal(p1.entries, p2.entries)
    assert not np.array_equal(p1.entries, p3.entries)


def test_conventions_share_the_gaussian_draw():
    # same seed, different scaling: the two Gaussian conventions differ by sqrt(n/d)
    n, d = 60, 6
    pn = sample_projector(n, d, "inv-sqrt-n", seed=3)
    pd = sample_projector(n, d, "inv-sqrt-d", seed=3)
    np.testing.assert_allclose(pd.entries, pn.entries * np.sqrt(n / d), rtol=1e-14)


def test_entries_are_read_only():
    p = sample_projector(10, 3, seed=0)
    with pytest.raises(ValueError):
        p.entries[0, 0] = 1.0


@pytest.mark.parametrize("n, d", [(50, 5), (500, 50), (40, 39)])
def test_orthonormal_rows_are_orthonormal(n, d):
    p = sample_projector(n, d, "orthonormal-rows", seed=1)
    np.testing.assert_allclose(p.entries @ p.entries.T, np.eye(d), atol=1e-12)
    assert gram_deviation(p) <= 1e-10


def test_d_must_be_smaller_than_n():
    with pytest.raises(DimensionError):
        sample_projector(10, 10)
    with pytest.raises(ValueError):
        sample_projector(10, 0)


def test_gram_deviation_matches_dense_eigenvalues():
    p = sample_projector(300, 30, "inv-sqrt-n", seed=5)
    g = p.entries @ p.entries.T - np.eye(30)
    exact = np.max(np.abs(np.linalg.eigvalsh(g)))
    assert gram_deviation(p) == pytest.approx(exact, rel=1e-7)


def test_inv_sqrt_d_gram_scales_like_n_over_d():
    # P P^T ~ (n/d) I, so the deviation is about n/d - 1
    n, d = 2000, 20
    dev = gram_deviation(sample_projector(n, d, "inv-sqrt-d", seed=2))
    assert abs(dev - (n / d - 1)) < 0.5 * (n / d)


def test_apply_and_lift_shapes_and_adjointness():
    rng = np.random.default_rng(0)
    p = sample_projector(30, 4, "inv-sqrt-d", seed=9)
    x = rng.standard_normal(30)
    u = rng.standard_normal(4)
    assert apply(p, x).shape == (4,)
    assert lift(p, u).shape == (30,)
    assert apply(p, x) @ u == pytest.approx(x @ lift(p, u), rel=1e-12)
    xs = rng.standard_normal((7, 30))
    np.testing.assert_allclose(apply(p, xs), xs @ p.entries.T)
    with pytest.raises(DimensionError):
        apply(p, np.zeros(29))
    with pytest.raises(DimensionError):
        lift(p, np.zeros(5))


def test_norm_preservation_exact_on_row_span():
    # for orthonormal rows, vectors in the row span keep their norm exactly
    p = sample_projector(80, 8, "orthonormal-rows", seed=4)
    rng = np.random.default_rng(1)
    xs = rng.standard_normal((20, 8)) @ p.entries
    rep = check_norm_preservation(p, xs, 1e-9)
    assert rep.fraction == 1.0
    assert rep.worst_violation < 1e-12


def test_norm_preservation_counts_by_hand():
    # entries 1/sqrt(2) on a 1x2 matrix: ||Px||^2 = (x1 + x2)^2 / 2
    from trsketch.projector import Projector

    p = Projector(d=1, n=2, entries=np.array([[1.0, 1.0]]) / np.sqrt(2.0),
                  convention=ScalingConvention.GAUSSIAN_INV_SQRT_D, seed=0)
    xs = np.array([[1.0, 1.0], [1.0, -1.0], [1.0, 0.0]])
    # ratios 1, 0, 1/2 -> deviations 0, 1, 1/2
    rep = check_norm_preservation(p, xs, 0.6)
    assert (rep.trials, rep.satisfied) == (3, 2)
    assert rep.worst_violation == pytest.approx(1.0)
    with pytest.raises(ValueError):
        check_norm_preservation(p, np.zeros((1, 2)), 0.5)


def test_inner_product_accepts_both_pair_layouts():
    p = sample_projector(100, 50, "inv-sqrt-d", seed=0)
    rng = np.random.default_rng(2)
    xs = sample_unit_vectors(100, 30, rng)
    ys = sample_unit_vectors(100, 30, rng)
    r1 = check_inner_product(p, (xs, ys), 0.5)
    r2 = check_inner_product(p, list(zip(xs, ys)), 0.5)
    assert r1 == r2


def test_linear_map_rejects_non_unit_rows():
    p = sample_projector(20, 5, seed=0)
    a = np.eye(20)[:3].copy()
    a[1] *= 2.0
    with pytest.raises(InvalidInstanceError, match="row 1"):
        check_linear_map(p, a, np.ones((2, 20)), 0.1)


def test_linear_map_exact_under_orthonormal_embedding():
    # A P^T P x = A x when x lies in the row span of P
    p = sample_projector(50, 10, "orthonormal-rows", seed=8)
    rng = np.random.default_rng(3)
    a = sample_unit_vectors(50, 6, rng)
    xs = rng.standard_normal((5, 10)) @ p.entries
    rep = check_linear_map(p, a, xs, 1e-9)
    assert rep.fraction == 1.0


def test_quadratic_form_exact_under_span_supported_q():
    p = sample_projector(40, 8, "orthonormal-rows", seed=2)
    basis = p.entries[:3].T
    q = basis @ np.diag([1.0, -0.5, 0.2]) @ basis.T
    rng = np.random.default_rng(4)
    pairs = (rng.standard_normal((10, 40)), rng.standard_normal((10, 40)))
    rep = check_quadratic_form(p, q, pairs, 1e-6)
    assert rep.fraction == 1.0
    assert rep.worst_violation < 1e-12


def test_sample_unit_vectors_are_unit():
    xs = sample_unit_vectors(7, 100, np.random.default_rng(0))
    np.testing.assert_allclose(np.linalg.norm(xs, axis=1), 1.0, rtol=1e-14)


def test_projector_binary_round_trip(tmp_path):
    p = sample_projector(12, 3, "orthonormal-rows", seed=2**63 + 5)
    path = tmp_path / "p.bin"
    save_projector(p, path)
    raw = path.read_bytes()
    assert len(raw) == 32 + 8 * 3 * 12
    magic, d, n, tag, seed = struct.unpack_from("<8sIIBQ", raw)
    assert (magic, d, n, tag, seed) == (b"TRSKPROJ", 3, 12, 2, 2**63 + 5)
    assert raw[25:32] == bytes(7)
    assert np.array_equal(np.frombuffer(raw[32:], dtype="<f8").reshape(3, 12), p.entries)
    q = load_projector(path)
    assert np.array_equal(q.entries, p.entries)
    assert (q.d, q.n, q.convention, q.seed) == (3, 12, p.convention, p.seed)


def test_projector_binary_rejects_corruption(tmp_path):
    p = sample_projector(12, 3, seed=1)
    path = tmp_path / "p.bin"
    save_projector(p, path)
    raw = path.read_bytes()
    (tmp_path / "short.bin").write_bytes(raw[:-8])
    (tmp_path / "magic.bin").write_bytes(b"XXXXXXXX" + raw[8:])
    (tmp_path / "tiny.bin").write_bytes(raw[:10])
    for name in ("short.bin", "magic.bin", "tiny.bin"):
        with pytest.raises(ValueError):
            load_projector(tmp_path / name)
