import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affval import generators
from affval.errors import DegenerateDomain, EmptyDomain, NotConvex, OutsideDomain
from affval.funcs import (
    AffineFn,
    PAFn,
    PLQFn,
    QuadFn,
    QuadraticFn,
    certify_plq,
    join,
    lipschitz_constant,
    make_cylinder,
    meet,
    subdifferential,
)
from affval.geometry import box, cube, point, segment


def abs_on_interval():
    return PAFn([AffineFn([1.0], 0.0), AffineFn([-1.0], 0.0)], box([-1], [1]))


def l1_on_square():
    return PAFn([AffineFn([sx, sy], 0.0) for sx in (1.0, -1.0) for sy in (1.0, -1.0)],
                cube(2))


# -- evaluation ---------------------------------------------------------------


def test_eval_pa_inside_and_outside():
    u = abs_on_interval()
    assert u.evaluate([0.5]) == pytest.approx(0.5)
    assert u.evaluate([2.0]) == np.inf


def test_eval_plq_at_boundary_point():
    q = QuadraticFn(np.eye(2), np.zeros(2), 0.0)
    u = PLQFn([(cube(2), q)])
    assert u.evaluate([1.0, 1.0]) == pytest.approx(1.0)


def test_eval_convexity_along_segments():
    rng = np.random.default_rng(0)
    for u in (abs_on_interval(), l1_on_square(), generators.random_plq(rng, 2)):
        dom = u.domain
        for _ in range(50):
            x = dom.barycenter + rng.uniform(-0.3, 0.3, dom.dim)
            z = dom.barycenter + rng.uniform(-0.3, 0.3, dom.dim)
            if not (dom.contains(x) and dom.contains(z)):
                continue
            lam = rng.uniform()
            mid = lam * x + (1 - lam) * z
            assert u.evaluate(mid) <= lam * u.evaluate(x) + (1 - lam) * u.evaluate(z) + 1e-9


# -- subdifferential ----------------------------------------------------------


def test_subdifferential_indicator_endpoint():
    sd = subdifferential(PAFn.indicator(box([0], [1])), [1.0])
    assert np.allclose(sd.bounded_part.vertices, [[0.0]])
    assert np.allclose(sd.cone_generators, [[1.0]])


def test_subdifferential_abs_at_kink():
    sd = subdifferential(abs_on_interval(), [0.0])
    assert np.allclose(sd.bounded_part.vertices.ravel(), [-1.0, 1.0])
    assert sd.is_at_interior_point


def test_subdifferential_l1_at_origin():
    sd = subdifferential(l1_on_square(), [0.0, 0.0])
    assert sd.bounded_part.volume == pytest.approx(4.0)


def test_subdifferential_outside_domain_raises():
    with pytest.raises(OutsideDomain):
        subdifferential(abs_on_interval(), [2.0])


def test_subgradient_inequality_sampled():
    rng = np.random.default_rng(7)
    for u in (l1_on_square(), generators.random_pa(rng, 2), generators.random_plq(rng, 2)):
        dom = u.domain
        zs = dom.grid_points(11)
        for _ in range(10):
            x = zs[rng.integers(len(zs))]
            sd = subdifferential(u, x)
            ux = u.evaluate(x)
            for g in sd.bounded_part.vertices:
                vals = u.eval_many(zs)
                assert np.all(vals >= ux + (zs - x) @ g - 1e-9)


# -- Lipschitz ----------------------------------------------------------------


def test_lipschitz_examples():
    u = PAFn([AffineFn([2.0], 0.0), AffineFn([-1.0], 0.0)], box([-1], [1]))
    assert lipschitz_constant(u) == pytest.approx(2.0)
    q = QuadFn(QuadraticFn(np.eye(2), np.zeros(2), 0.0), cube(2))
    assert lipschitz_constant(q) == pytest.approx(np.sqrt(2.0))
    assert lipschitz_constant(abs_on_interval()) == pytest.approx(1.0)


def test_lipschitz_degenerate_domain_raises():
    u = PAFn([AffineFn([1.0, 0.0], 0.0)], segment([0, 0], [1, 1]))
    with pytest.raises(DegenerateDomain):
        lipschitz_constant(u)


def test_lipschitz_dominates_sampled_subgradients():
    rng = np.random.default_rng(5)
    u = generators.random_plq(rng, 2)
    L = lipschitz_constant(u)
    for x in u.domain.shrink(0.9).grid_points(7):
        sd = subdifferential(u, x)
        norms = np.linalg.norm(sd.bounded_part.vertices, axis=1)
        assert norms.max() <= L + 1e-9


# -- meet / join --------------------------------------------------------------


def test_meet_indicators_merges_intervals():
    m = meet(PAFn.indicator(box([0], [2])), PAFn.indicator(box([1], [3])))
    assert np.allclose(m.domain.vertices.ravel(), [0, 3])
    assert m.evaluate([2.5]) == pytest.approx(0.0)


def test_meet_rejects_nonconvex_min():
    u = PAFn([AffineFn([1.0], 0.0)], box([-1], [1]))
    v = PAFn([AffineFn([-1.0], 0.0)], box([-1], [1]))
    with pytest.raises(NotConvex):
        meet(u, v)


def test_meet_shared_quadratic_on_overlapping_intervals():
    q = QuadraticFn([[1.0]], [0.0], 0.0)
    m = meet(QuadFn(q, box([0], [2])), QuadFn(q, box([1], [3])))
    assert np.allclose(m.domain.vertices.ravel(), [0, 3])
    assert m.evaluate([2.5]) == pytest.approx(0.5 * 2.5 ** 2)


def test_join_indicators_intersects():
    j = join(PAFn.indicator(box([0], [2])), PAFn.indicator(box([1], [3])))
    assert np.allclose(j.domain.vertices.ravel(), [1, 2])


def test_join_two_affines_gives_abs():
    j = join(PAFn([AffineFn([1.0], 0.0)], box([-1], [1])),
             PAFn([AffineFn([-1.0], 0.0)], box([-1], [1])))
    xs = np.linspace(-1, 1, 21)[:, None]
    assert np.allclose(j.eval_many(xs), np.abs(xs[:, 0]))


def test_join_shared_quadratic():
    q = QuadraticFn([[1.0]], [0.0], 0.0)
    j = join(QuadFn(q, box([0], [2])), QuadFn(q, box([1], [3])))
    assert np.allclose(j.domain.vertices.ravel(), [1, 2])
    assert j.evaluate([1.5]) == pytest.approx(0.5 * 1.5 ** 2)


def test_join_splits_equal_hessian_cells_exactly():
    q1 = QuadraticFn(np.eye(2), np.array([1.0, 0.0]), 0.0)
    q2 = QuadraticFn(np.eye(2), np.array([-1.0, 0.0]), 0.3)
    u, v = QuadFn(q1, cube(2)), QuadFn(q2, cube(2))
    j = join(u, v)
    assert len(j.cells) == 2  # one cut along the affine-difference hyperplane
    pts = cube(2).grid_points(21)
    assert np.abs(j.eval_many(pts)
                  - np.maximum(u.eval_many(pts), v.eval_many(pts))).max() == 0.0
    with pytest.raises(NotConvex):
        meet(u, v)  # the pointwise min has a concave kink along the cut


def test_join_empty_intersection_raises():
    with pytest.raises(EmptyDomain):
        join(PAFn.indicator(box([0], [1])), PAFn.indicator(box([2], [3])))


def test_meet_join_agree_with_pointwise_on_grid():
    rng = np.random.default_rng(21)
    for n in (1, 2):
        u, v = generators.meet_pair_pa(rng, n)
        m = meet(u, v)
        j = join(u, v)
        pts = m.domain.grid_points(9)
        mv = np.minimum(u.eval_many(pts), v.eval_many(pts))
        both = np.isfinite(mv)
        assert np.allclose(m.eval_many(pts)[both], mv[both], atol=1e-9)
        pts_j = j.domain.grid_points(9)
        jv = np.maximum(u.eval_many(pts_j), v.eval_many(pts_j))
        ok = np.isfinite(jv)
        assert np.allclose(j.eval_many(pts_j)[ok], jv[ok], atol=1e-9)


# -- certification ------------------------------------------------------------


def test_certify_rejects_value_jump():
    qa = QuadraticFn([[2.0]], [0.0], 0.0)
    qb = QuadraticFn([[2.0]], [0.0], 1.0)
    with pytest.raises(NotConvex):
        certify_plq([(box([0], [1]), qa), (box([1], [2]), qb)])


def test_certify_rejects_indefinite_cell():
    with pytest.raises(NotConvex):
        certify_plq([(cube(2), QuadraticFn(np.diag([1.0, -1.0]), np.zeros(2), 0.0))])


def test_certify_rejects_concave_kink():
    up = QuadraticFn([[0.0]], [1.0], 0.0)
    down = QuadraticFn([[0.0]], [-1.0], 2.0)
    with pytest.raises(NotConvex):
        certify_plq([(box([0], [1]), up), (box([1], [2]), down)])


def test_certify_accepts_tangent_matched_cells():
    core = QuadraticFn([[1.0]], [0.0], 0.0)
    collar = QuadraticFn([[0.0]], [1.0], -0.5)
    u = certify_plq([(box([-1], [1]), core), (box([1], [2]), collar)])
    assert len(u.cells) == 2
    assert u.certificate


# -- cylinders ----------------------------------------------------------------


def test_cylinder_point_base_gives_indicator():
    u = make_cylinder(PAFn.indicator(point([0.0])), AffineFn([0.0], 0.0), box([0], [1]))
    assert u.is_cylinder
    assert u.evaluate([0.5]) == pytest.approx(0.0)
    assert u.evaluate([-0.5]) == np.inf


def test_cylinder_affine_rail():
    u = make_cylinder(PAFn.indicator(point([0.0])), AffineFn([1.0], 0.0), box([0], [1]))
    xs = np.linspace(0, 1, 11)[:, None]
    assert np.allclose(u.eval_many(xs), xs[:, 0], atol=1e-12)


def test_cylinder_quadratic_trough():
    base = QuadFn(QuadraticFn(np.eye(2), np.zeros(2), 0.0), segment([0, -1], [0, 1]))
    u = make_cylinder(base, AffineFn([0.0, 0.0], 0.0), segment([0, 0], [1, 0]))
    # flat along x1, quadratic along x2; brute-force the reduction at samples
    assert u.evaluate([0.5, 0.5]) == pytest.approx(0.125)
    assert u.evaluate([0.9, -0.4]) == pytest.approx(0.08)
    assert u.evaluate([2.0, 0.0]) == np.inf


def test_cylinder_needs_segment():
    from affval.errors import BadSegment

    with pytest.raises(BadSegment):
        make_cylinder(PAFn.indicator(point([0.0, 0.0])), AffineFn([0.0, 0.0], 0.0), cube(2))


# -- quadratic conveniences ---------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_quadratic_compose_affine_matches_pointwise(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    q = QuadraticFn(generators.random_psd(rng, n), rng.uniform(-1, 1, n),
                    float(rng.uniform(-1, 1)))
    M = rng.uniform(-1, 1, (n, n)) + np.eye(n)
    s = rng.uniform(-1, 1, n)
    comp = q.compose_affine(M, s)
    for _ in range(5):
        x = rng.uniform(-1, 1, n)
        assert comp(x) == pytest.approx(q(M @ x + s), rel=1e-10, abs=1e-10)
