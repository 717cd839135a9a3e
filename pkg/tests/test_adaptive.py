import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amisc.adaptive import (
    AdaptiveMisc,
    AdaptiveSparseGrid,
    FidelitySpace,
    RefinementRecord,
    SurrogateState,
    adaptive_sparse_grid,
    allocation_profile,
    amisc_run,
    _normalization,
    build_component,
    coefficient_increments,
    check_admissible,
    delta_error_indicators,
    delta_work,
    indicator_gamma,
    multilevel_model_set,
    refine_neighbors,
    trace_to_csv,
    update_coefficients,
)
from amisc.combi import backward_neighbors, combination_coefficients, is_downward_closed
from amisc.errors import IndexSetError, ModelEvaluationError
from amisc.models import ModelEnsemble, cosine_2d, cosine_ladder, single_model
from amisc.tensorgrid import TensorComponent, tensor_eval
from oracles import chi_coefficients, gauss_grid


def random_insertions(rng, dim, count):
    accepted, order = set(), [(0,) * dim]
    accepted.add(order[0])
    while len(order) < count:
        candidates = sorted(
            {
                fwd
                for idx in accepted
                for fwd in refine_neighbors(accepted, idx, (40,) * dim)
            }
        )
        pick = candidates[rng.integers(len(candidates))]
        accepted.add(pick)
        order.append(pick)
    return order


def test_incremental_coefficients_small_cases():
    assert update_coefficients({}, set(), (0, 0)) == {(0, 0): 1}
    assert update_coefficients({(0, 0): 1}, {(0, 0)}, (1, 0)) == {(0, 0): 0, (1, 0): 1}


def test_incremental_equals_batch_on_random_sequences():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        dim = int(rng.integers(1, 6))
        order = random_insertions(rng, dim, int(rng.integers(1, 31)))
        coeffs, accepted = {}, set()
        for idx in order:
            coeffs = update_coefficients(coeffs, accepted, idx)
            accepted.add(idx)
            assert coeffs == chi_coefficients(accepted)


def test_admissibility_checks():
    with pytest.raises(IndexSetError):
        check_admissible({(0, 0)}, (1, 1))
    with pytest.raises(IndexSetError):
        check_admissible({(0, 0)}, (0, 0))


def test_refine_neighbors_examples():
    assert refine_neighbors({(0, 0)}, (0, 0), (5, 5)) == [(1, 0), (0, 1)]
    # (1, 1) is still only active when (0, 2) is refined
    accepted = {(0, 0), (0, 1), (0, 2), (1, 0)}
    assert refine_neighbors(accepted, (0, 2), (5, 5)) == [(0, 3)]
    assert refine_neighbors(accepted | {(1, 1)}, (0, 2), (5, 5)) == [(1, 2), (0, 3)]
    assert refine_neighbors({(0, 0), (1, 0)}, (1, 0), (1, 5)) == []


def test_multilevel_set():
    assert multilevel_model_set(1, 3) == [(0, 0, 0)]
    assert multilevel_model_set(5, 3) == [(j, j, j) for j in range(5)]
    with pytest.raises(ValueError):
        multilevel_model_set(0, 3)


def test_fidelity_space():
    space = FidelitySpace.box((1, 0), (3, 2))
    assert space.upper == (2, 2) and space.to_model((0, 1)) == (1, 1)
    with pytest.raises(ValueError):
        FidelitySpace.box((2,), (1,))
    chain = FidelitySpace.chain([(0, 0), (1, 1), (2, 2)])
    assert chain.upper == (2,) and chain.to_model((1,)) == (1, 1)


def test_gamma():
    rec = RefinementRecord((0,), np.array([0.2]), np.array([0.4]), delta_w=2.0)
    assert indicator_gamma(rec, 1.0) == 0.1
    assert abs(indicator_gamma(rec, 0.5) - 0.15) < 1e-16
    rec = RefinementRecord((0,), np.array([1, 2, 3, 4]) * 1e-3, np.zeros(4), delta_w=1.0)
    assert indicator_gamma(rec, 1.0) == 4e-3
    with pytest.raises(ValueError):
        indicator_gamma(rec, 1.5)


def _ladder_state(ens):
    return SurrogateState(n_qoi=1, split=lambda k: ((k[0],), k[1:]))


def test_delta_work_examples():
    ens = cosine_ladder()
    state = _ladder_state(ens)
    assert delta_work(ens, state, (0, 0)) == 1.0
    state.components[(0, 0)], _ = build_component(ens, state, (0, 0))
    assert delta_work(ens, state, (0, 1)) == 2.0
    assert delta_work(ens, state, (1, 0)) == 2.0
    assert delta_work(ens, state, (2, 0)) == 4.0
    _, dw = build_component(ens, state, (0, 1))
    assert dw == 2.0 and state.work_total == 3.0
    assert delta_work(ens, state, (0, 1)) == 0.0


def test_indicators_zero_component():
    zero = single_model("zero", lambda z: np.zeros(1), n_z=2)
    driver = AdaptiveMisc(zero, w_max=10)
    driver._score_pending()
    rec = driver.state.active[(0, 0, 0)]
    assert rec.delta_e_var[0] == 0.0 and rec.delta_e_mean[0] == 0.0


def test_constant_model_stops_at_root():
    const = single_model("const", lambda z: np.array([3.0]), n_z=2)
    state, trace = amisc_run(const, kappa=0.5, tau=1e-12, max_level=4)
    assert (0, 0, 0) in state.accepted
    assert all(r.gamma < 1e-14 for r in state.active.values())
    z = np.random.default_rng(0).uniform(-1, 1, size=(10, 2))
    np.testing.assert_allclose(state.evaluate(z), 3.0)
    assert len(trace) == 1


def test_kappa_zero_initialization():
    ens = cosine_ladder()
    driver = AdaptiveMisc(ens, kappa=0.0, max_iter=1)
    driver._score_pending()
    assert driver.state.active[(0, 0)].gamma == 0.0


def dense_moments(ens, alpha_beta_set, coeffs):
    mesh, w = gauss_grid(1, 60)
    z = mesh[0].ravel()[:, None]
    comps = {}
    for key in alpha_beta_set:
        comp = TensorComponent(alpha=(key[0],), beta=key[1:])
        comp.set_values(ens.evaluate_many((key[0],), comp.points))
        comps[key] = comp
    values = sum(c * tensor_eval(comps[k], z)[:, 0] for k, c in coeffs.items() if c)
    mean = w @ values
    return mean, w @ (values - mean) ** 2


def _accept(state, key):
    comp, _ = build_component(state.ensemble, state, key)
    state.components[key] = comp
    if state.normalization is None:
        state.normalization = _normalization(comp.values[0])
    for k, inc in coefficient_increments(state.accepted, key).items():
        state.pce.add(state.component_pce(k), inc)
    state.coefficients = update_coefficients(state.coefficients, state.accepted, key)
    state.accepted.add(key)


def _indicator(state, key):
    comp, _ = build_component(state.ensemble, state, key)
    return delta_error_indicators(state, key, comp)


def test_indicators_against_dense_quadrature():
    ens = cosine_ladder()
    state = _ladder_state(ens)
    state.ensemble = ens
    for key in [(0, 0), (0, 1), (0, 2)]:
        _accept(state, key)
    m0, v0 = dense_moments(ens, state.accepted, state.coefficients)
    norm = state.normalization[0]
    for key in [(1, 0), (0, 3)]:
        de_mean, de_var = _indicator(state, key)
        new = update_coefficients(state.coefficients, state.accepted, key)
        m1, v1 = dense_moments(ens, state.accepted | {key}, new)
        assert abs(de_mean[0] - abs(m1 - m0) / norm) < 1e-12
        assert abs(de_var[0] - abs(v1 - v0) / norm**2) < 1e-12


def test_fidelity_indicators_shrink():
    ens = cosine_ladder()
    state = _ladder_state(ens)
    state.ensemble = ens
    for key in [(0, 0), (0, 1), (0, 2)]:
        _accept(state, key)
    first = _indicator(state, (1, 0))
    _accept(state, (1, 0))
    second = _indicator(state, (2, 0))
    # beta = 0 components are constant, so only the mean moves
    assert second[0][0] < first[0][0]
    assert first[1][0] == second[1][0] == 0.0


def _check_invariants(state, row):
    assert is_downward_closed(state.accepted)
    assert not (state.accepted & set(state.active))
    for key in state.active:
        assert all(nb in state.accepted for nb in backward_neighbors(key))
    assert state.coefficients == combination_coefficients(state.accepted)


def test_invariants_during_run():
    rows = []

    def callback(state, row):
        _check_invariants(state, row)
        rows.append(row.work)

    amisc_run(cosine_ladder(), kappa=0.5, w_max=60, max_level=6, callback=callback)
    assert rows == sorted(rows) and len(rows) > 5


def test_work_counts_every_distinct_evaluation():
    ens = cosine_ladder()
    state, trace = amisc_run(ens, kappa=0.5, w_max=40, max_level=6)
    expected = sum(ens.cost(a) * len(cache) for a, cache in state.evaluations.items())
    assert state.work_total == expected == trace[-1].work


def test_cosine_ladder_beats_constituents():
    ens = cosine_ladder()
    state, _ = amisc_run(ens, kappa=0.5, w_max=20, max_level=6)
    z = np.random.default_rng(7).uniform(-1, 1, size=(1000, 1))
    truth = np.array([ens.reference(p) for p in z])[:, 0]
    err = np.max(np.abs(state.evaluate(z)[:, 0] - truth))
    for key in state.accepted:
        single = np.max(np.abs(tensor_eval(state.components[key], z)[:, 0] - truth))
        assert err < single
    counts = [c for c, _ in allocation_profile(state, ens).values()]
    assert counts == sorted(counts, reverse=True) and len(set(counts)) == len(counts)
    fractions = [f for _, f in allocation_profile(state, ens).values()]
    assert abs(sum(fractions) - 1) < 1e-12


def test_allocation_single_index():
    ens = cosine_2d()
    state, _ = amisc_run(ens, kappa=0.5, max_iter=1, max_level=3)
    assert allocation_profile(state, ens) == {(0,): (1, 1.0)}


def test_single_model_reduction():
    ens = cosine_2d()
    s1, t1 = amisc_run(ens, kappa=0.5, w_max=150, max_level=6)
    s2, t2 = adaptive_sparse_grid(ens, (0,), kappa=0.5, w_max=150, max_level=6)
    assert trace_to_csv(t1, 1) == trace_to_csv(t2, 1)
    assert {k[1:] for k in s1.accepted} == s2.accepted


class Flaky:
    """Fails once at a chosen call, then behaves."""

    def __init__(self, fail_at):
        self.calls = 0
        self.fail_at = fail_at

    def __call__(self, alpha, z):
        self.calls += 1
        if self.calls == self.fail_at:
            raise RuntimeError("transient solver failure")
        return np.array([np.cos(0.5 * np.pi * (z[0] + 0.8 + 0.2 / 2 ** alpha[0]))])


def _flaky_ensemble(fail_at):
    return ModelEnsemble(name="flaky", n_alpha=1, n_z=1, n_qoi=1, bounds=(2,),
                         evaluate=Flaky(fail_at), cost=lambda a: 2.0 ** a[0])


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=1, max_value=25))
def test_resume_after_failure(fail_at):
    clean_state, clean_trace = AdaptiveMisc(_flaky_ensemble(0), w_max=30, max_level=5).run()
    driver = AdaptiveMisc(_flaky_ensemble(fail_at), w_max=30, max_level=5)
    try:
        driver.run()
    except ModelEvaluationError as exc:
        assert len(exc.alpha) == 1 and len(exc.z) == 1
        assert is_downward_closed(driver.state.accepted)
    state, trace = driver.run()
    assert trace_to_csv(trace, 1) == trace_to_csv(clean_trace, 1)
    assert state.accepted == clean_state.accepted


def test_driver_argument_checks():
    with pytest.raises(ValueError):
        AdaptiveMisc(cosine_ladder())
    with pytest.raises(ValueError):
        AdaptiveMisc(cosine_ladder(), kappa=2.0, w_max=1)
    with pytest.raises(ValueError):
        AdaptiveSparseGrid(cosine_2d(), (0,), max_level=(1, 2, 3), w_max=1)


def test_vector_qoi_uses_worst_case():
    two = single_model("two", lambda z: np.array([z[0], 100 * z[1] ** 2]), n_z=2, n_qoi=2)
    state, trace = amisc_run(two, kappa=1.0, max_iter=3, max_level=3)
    assert trace[-1].mean.shape == (2,)
    for rec in state.active.values():
        per = rec.delta_e_mean / rec.delta_w
        assert rec.gamma == pytest.approx(per.max())
