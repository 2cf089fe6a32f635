import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from egarmijo.errors import SolverError
from egarmijo.geometry import DensityMatrix, diagonal_density, maximally_mixed, relative_entropy
from egarmijo.instances import LOSS_KINDS, random_density, random_hermitian, random_loss
from egarmijo.losses import LogLikelihoodLoss, simplex_log_loss
from egarmijo.solver import (
    TRACE_COLUMNS,
    ArmijoConfig,
    PhiContext,
    StopRule,
    armijo_search,
    bkm_inner,
    eg_step,
    local_pb_exponent,
    optimality_gap,
    phi_eval,
    phi_second,
    solve_eg,
    step_divergences,
)
from egarmijo.tomography import PauliRecord, dataset_from_records

from oracles import bloch_density, bloch_grid_minimum, simplex_grid_minimum

F1 = simplex_log_loss([[1, 0], [0, 1]], weights=[1, 1])

seeds = st.integers(0, 2**32 - 1)
dims = st.sampled_from([2, 3, 4, 8])
kinds = st.sampled_from(LOSS_KINDS)


def _context(seed, d, kind):
    rng = np.random.default_rng(seed)
    loss = random_loss(rng, d, kind)
    rho = random_density(rng, d)
    return loss, rho, PhiContext.from_loss(loss, rho)


def test_config_validation():
    for bad in (dict(alpha0=0), dict(r=1.0), dict(tau=0.0), dict(max_backtracks=0)):
        with pytest.raises(ValueError):
            ArmijoConfig(**bad)


# --- eg_step ---------------------------------------------------------------

@pytest.mark.parametrize("kappa", [-3.0, 0.0, 2.5])
def test_eg_step_identity_shift_is_noop(rng, kappa):
    rho = random_density(rng, 4)
    new, phi = eg_step(rho, kappa * np.eye(4), 0.7)
    assert np.allclose(new.matrix, rho.matrix, atol=1e-13)
    assert phi == pytest.approx(-0.7 * kappa, abs=1e-12)


def test_eg_step_scalar_oracle():
    new, _ = eg_step(diagonal_density([0.25, 0.75]), np.diag([-4.0, -4 / 3]), 0.5)
    a = 0.25 * math.e ** 2
    b = 0.75 * math.exp(2 / 3)
    assert np.allclose(np.diag(new.matrix).real, [a / (a + b), b / (a + b)], atol=1e-14)
    assert new.matrix[0, 0].real == pytest.approx(0.558412, abs=1e-6)


def test_eg_step_continuous_at_zero(rng):
    rho = random_density(rng, 5)
    g = random_hermitian(rng, 5)
    alphas = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    dist = [np.linalg.norm(eg_step(rho, g, a).rho.matrix - rho.matrix) for a in alphas]
    assert np.all(np.array(dist) <= 5 * np.linalg.norm(g) * alphas)


def test_eg_step_stays_strict_for_huge_steps(rng):
    rho = random_density(rng, 4)
    new, _ = eg_step(rho, random_hermitian(rng, 4), 1e3)
    assert np.all(np.isfinite(new.log_eigenvalues))
    assert np.trace(new.matrix).real == pytest.approx(1.0, abs=1e-12)


# --- armijo_search ----------------------------------------------------------

def test_armijo_fixed_point_accepts_alpha0():
    res = armijo_search(maximally_mixed(2), F1, ArmijoConfig())
    assert res.alpha == 10.0 and res.backtracks == 0
    assert np.allclose(res.rho.matrix, np.eye(2) / 2, atol=1e-15)


def _scalar_armijo(x, alpha0, r, tau):
    # replay of the backtracking loop for f(x) = -log x1 - log x2
    f = lambda v: -math.log(v[0]) - math.log(v[1])
    g = [-1 / x[0], -1 / x[1]]
    alpha, j = alpha0, 0
    while True:
        w = [x[i] * math.exp(-alpha * g[i]) for i in range(2)]
        s = sum(w)
        y = [wi / s for wi in w]
        if not f(y) > f(x) + tau * sum(g[i] * (y[i] - x[i]) for i in range(2)):
            return alpha, j, y
        alpha *= r
        j += 1


@pytest.mark.parametrize("x0", [0.25, 0.05, 0.9])
def test_armijo_matches_scalar_replay(x0):
    alpha, j, y = _scalar_armijo([x0, 1 - x0], 10.0, 0.5, 0.5)
    res = armijo_search(diagonal_density([x0, 1 - x0]), F1, ArmijoConfig(10, 0.5, 0.5))
    assert res.alpha == alpha and res.backtracks == j
    assert np.allclose(np.diag(res.rho.matrix).real, y, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(seeds, dims, kinds)
def test_armijo_tiny_tau(seed, d, kind):
    loss, rho, _ = _context(seed, d, kind)
    f, g = loss.evaluate(rho)
    res = armijo_search(rho, loss, ArmijoConfig(tau=1e-12), f, g)
    slope = float(np.real(np.vdot(g, res.rho.matrix - rho.matrix)))
    assert res.f_value <= f + 1e-12 * slope
    assert res.alpha == 10.0 * 0.5 ** res.backtracks


# --- solve_eg ---------------------------------------------------------------

def test_solve_f1():
    rho, trace = solve_eg(F1, diagonal_density([0.9, 0.1]), stop=StopRule(500, 1e-8))
    assert trace.status == "tolerance-reached"
    assert np.allclose(rho.matrix, np.eye(2) / 2, atol=1e-6)
    assert trace.f_values[-1] == pytest.approx(2 * math.log(2), abs=1e-10)


def test_solve_commuting_counts():
    loss = LogLikelihoodLoss(effects=[np.diag([1.0, 0.0])] * 3 + [np.diag([0.0, 1.0])])
    rho, _ = solve_eg(loss, stop=StopRule(500, 1e-10))
    assert np.allclose(rho.matrix, np.diag([0.75, 0.25]), atol=1e-6)


def _pauli_dataset(seed, n=400):
    rng = np.random.default_rng(seed)
    state = bloch_density([0.3, -0.4, 0.5])
    records = []
    for setting, shots in zip("XYZ", (134, 133, 133)):
        ds = dataset_from_records([PauliRecord(setting, "0"), PauliRecord(setting, "1")])
        p = np.real(np.einsum("mij,ji->m", ds.effects, state))
        for b, c in zip("01", rng.multinomial(shots, p / p.sum())):
            if c:
                records.append(PauliRecord(setting, b, int(c)))
    return dataset_from_records(records)


def test_solve_matches_bloch_grid():
    ds = _pauli_dataset(7)
    loss = LogLikelihoodLoss.from_dataset(ds)
    _, trace = solve_eg(loss, stop=StopRule(500, 1e-10))
    best, _ = bloch_grid_minimum(ds.effects, ds.weights, resolution=1e-3)
    assert trace.f_values[-1] <= best + 1e-5


@settings(max_examples=25, deadline=None)
@given(seeds, dims, kinds)
def test_solve_trace_invariants(seed, d, kind):
    rng = np.random.default_rng(seed)
    loss = random_loss(rng, d, kind)
    seen = []
    rho, trace = solve_eg(loss, stop=StopRule(60, 1e-9), callback=lambda k, r: seen.append(r))
    f = trace.f_values
    assert np.all(np.diff(f) <= 0)
    assert all(r.is_strict and abs(np.trace(r.matrix) - 1) < 1e-12 for r in seen)
    for rec in trace.records[1:]:
        assert rec.alpha == 10.0 * 0.5 ** rec.backtracks
        assert rec.backtracks < 100
        assert rec.step_divergence >= -1e-10
    assert np.all(trace.psi_gaps <= 1e-10)


def test_solve_diagonal_matches_vector_update():
    rng = np.random.default_rng(3)
    b = rng.uniform(0.05, 1.0, size=(6, 4))
    w = rng.integers(1, 10, size=6) / 1.0
    w /= w.sum()
    loss = simplex_log_loss(b, weights=w)
    iterates = []
    _, trace = solve_eg(loss, stop=StopRule(40, None), callback=lambda k, r: iterates.append(r))
    x = np.full(4, 0.25)
    for rec, rho in zip(trace.records[1:], iterates):
        grad = -(w / (b @ x)) @ b
        x = x * np.exp(-rec.alpha * (grad - grad.min()))
        x /= x.sum()
        assert np.max(np.abs(np.diag(rho.matrix).real - x)) <= 1e-12
        assert np.max(np.abs(rho.matrix - np.diag(np.diag(rho.matrix)))) == 0.0


def test_solver_error_carries_trace():
    loss = random_loss(np.random.default_rng(0), 4, "f3")
    with pytest.raises(SolverError) as info:
        solve_eg(loss, cfg=ArmijoConfig(alpha0=1e4, max_backtracks=1), stop=StopRule(50, 0.0))
    assert info.value.trace.status == "numerical-failure"
    assert len(info.value.trace) >= 1


def test_trace_csv(tmp_path):
    _, trace = solve_eg(F1, diagonal_density([0.9, 0.1]), stop=StopRule(5, None))
    text = trace.to_csv(tmp_path / "t.csv", timing=False)
    lines = text.splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert lines[1].split(",")[:4] == ["0", "", lines[1].split(",")[2], "nan"]
    assert len(lines) == len(trace) + 1
    assert (tmp_path / "t.csv").read_text() == text


# --- phi machinery ----------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(seeds, dims, kinds, st.floats(0.0, 10.0))
def test_phi_values_and_derivative(seed, d, kind, alpha):
    _, _, ctx = _context(seed, d, kind)
    assert abs(phi_eval(ctx, 0.0)[0]) <= 1e-12
    h = 1e-5
    fd = (phi_eval(ctx, alpha + h)[0] - phi_eval(ctx, alpha - h)[0]) / (2 * h)
    assert abs(phi_eval(ctx, alpha)[1] - fd) <= 1e-7 * max(1.0, abs(fd))


def test_phi_identity_shift(rng):
    ctx = PhiContext(random_density(rng, 3), 1.5 * np.eye(3))
    for a in (0.1, 1.0, 7.0):
        phi, dphi = phi_eval(ctx, a)
        assert phi == pytest.approx(-1.5 * a, abs=1e-12)
        assert dphi == pytest.approx(-1.5, abs=1e-12)
        assert abs(phi_second(ctx, a)) <= 1e-8
        assert abs(phi_second(ctx, a, "finite-diff")) <= 1e-8
    assert local_pb_exponent(ctx, 10.0) == 2.0
    assert step_divergences(ctx, 2.0) == pytest.approx((0.0, 0.0), abs=1e-12)


def test_phi_second_scalar_case():
    ctx = PhiContext(DensityMatrix(np.eye(1, dtype=complex)), np.array([[3.0]]))
    assert phi_second(ctx, 0.5) == 0.0
    assert phi_second(ctx, 0.5, "finite-diff") == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, dims, kinds, st.floats(0.0, 10.0))
def test_phi_second_methods_agree(seed, d, kind, alpha):
    _, _, ctx = _context(seed, d, kind)
    exact = phi_second(ctx, alpha)
    fd = phi_second(ctx, alpha, "finite-diff")
    assert exact >= -1e-8
    assert abs(exact - fd) <= max(1e-5, 1e-4 * abs(exact))


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([1, 2, 3, 5]), st.floats(0.01, 5.0))
def test_bkm_closed_form_vs_quadrature(seed, d, scale):
    rng = np.random.default_rng(seed)
    H = random_hermitian(rng, d, scale)
    X, Y = random_hermitian(rng, d), random_hermitian(rng, d)
    closed = bkm_inner(H, X, Y)
    quad = bkm_inner(H, X, Y, method="quadrature")
    assert abs(closed - quad) <= 1e-8 * max(1.0, abs(quad))


def test_bkm_special_cases(rng):
    H = random_hermitian(rng, 4)
    I = np.eye(4)
    assert bkm_inner(H, I, I) == pytest.approx(np.sum(np.exp(np.linalg.eigvalsh(H))), rel=1e-13)
    X, Y = random_hermitian(rng, 4), random_hermitian(rng, 4)
    assert bkm_inner(np.zeros((4, 4)), X, Y) == pytest.approx(np.real(np.trace(X @ Y)), abs=1e-12)
    # degenerate spectrum takes the limit branch
    D = np.diag([0.3, 0.3, 0.3 + 1e-12, -1.0])
    assert bkm_inner(D, X, Y) == pytest.approx(bkm_inner(D, X, Y, method="quadrature"), rel=1e-9)


def test_phi_second_matches_bkm_variance(rng):
    loss = random_loss(rng, 3, "f3")
    ctx = PhiContext.from_loss(loss, random_density(rng, 3))
    a = 0.8
    H = ctx.log_rho - a * ctx.g
    B = -ctx.g
    I = np.eye(3)
    Z = bkm_inner(H, I, I)
    expected = (bkm_inner(H, B, B) * Z - bkm_inner(H, I, B) ** 2) / Z**2
    assert phi_second(ctx, a) == pytest.approx(expected, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(seeds, dims, kinds, st.floats(1e-3, 10.0))
def test_step_divergences_match_relative_entropy(seed, d, kind, alpha):
    _, rho, ctx = _context(seed, d, kind)
    new = eg_step(rho, ctx.g, alpha).rho
    fwd, bwd = step_divergences(ctx, alpha)
    assert fwd >= -1e-10 and bwd >= -1e-10
    assert abs(fwd - relative_entropy(new, rho)) <= 1e-8
    assert abs(bwd - relative_entropy(rho, new)) <= 1e-8


def test_step_divergences_quadratic_near_zero(rng):
    _, _, ctx = _context(11, 4, "f3")
    alphas = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    vals = np.array([step_divergences(ctx, a) for a in alphas])
    for col in vals.T:
        slope = np.polyfit(np.log(alphas), np.log(col), 1)[0]
        assert slope >= 1.9


# --- optimality gap and inequalities ----------------------------------------

def test_optimality_gap_examples():
    assert optimality_gap(F1, maximally_mixed(2)) == pytest.approx(0.0, abs=1e-15)
    assert optimality_gap(F1, diagonal_density([0.25, 0.75])) == pytest.approx(-2.0)
    lin = LogLikelihoodLoss(effects=[np.eye(3)])
    assert optimality_gap(lin, random_density(np.random.default_rng(0), 3)) == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(seeds, dims, kinds, st.floats(1e-3, 10.0))
def test_descent_and_sandwich_inequalities(seed, d, kind, alpha):
    loss, rho, ctx = _context(seed, d, kind)
    new = eg_step(rho, ctx.g, alpha).rho
    div = relative_entropy(new, rho)
    inner = float(np.real(np.vdot(ctx.g, new.matrix - rho.matrix)))
    assert inner <= -div / alpha + 1e-9
    psi = optimality_gap(loss, rho, ctx.g)
    assert psi <= 1e-10
    # what the lower-bound argument actually yields: D(rho(b), rho) >= b psi
    assert div >= alpha * psi - 1e-9


def test_gap_is_not_bounded_by_divergence_over_step():
    # -D(rho(b), rho) / b <= psi fails for small b, where D = O(b^2) but psi < 0 is fixed
    x = diagonal_density([0.25, 0.75])
    g = F1.gradient(x)
    psi = optimality_gap(F1, x, g)
    b = 1e-3
    div = relative_entropy(eg_step(x, g, b).rho, x)
    assert psi == pytest.approx(-2.0)
    assert -div / b > psi + 1.0


@settings(max_examples=30, deadline=None)
@given(seeds, dims, kinds)
def test_moving_step_iff_not_optimal(seed, d, kind):
    loss, rho, ctx = _context(seed, d, kind)
    psi = optimality_gap(loss, rho, ctx.g)
    new = eg_step(rho, ctx.g, 1.0).rho
    if np.max(np.abs(new.matrix - rho.matrix)) <= 1e-10:
        assert psi >= -1e-6


def test_fixed_point_has_zero_gap():
    loss = LogLikelihoodLoss(effects=[np.diag([1.0, 0.0])] * 3 + [np.diag([0.0, 1.0])])
    rho = diagonal_density([0.75, 0.25])
    g = loss.gradient(rho)
    assert np.max(np.abs(eg_step(rho, g, 2.0).rho.matrix - rho.matrix)) <= 1e-10
    assert optimality_gap(loss, rho, g) >= -1e-6


@pytest.mark.parametrize("x0,alpha", [(0.25, 0.5), (0.6, 2.0), (0.1, 0.05)])
def test_step_solves_proximal_problem(x0, alpha):
    # eg_step minimizes <g, s - x> + D(s, x) / alpha over the simplex
    x = np.array([x0, 1 - x0])
    _, g = F1.evaluate(np.diag(x))
    gd = np.diag(g).real

    def objective(s):
        s = np.clip(s, 0, None)
        kl = np.sum(np.where(s > 0, s * np.log(np.where(s > 0, s, 1) / x), 0.0))
        return float(gd @ (s - x) + kl / alpha)

    best, _ = simplex_grid_minimum(objective, 1e-4)
    new = np.diag(eg_step(diagonal_density(x), g, alpha).rho.matrix).real
    assert objective(new) <= best + 1e-6
    assert objective(new) >= best - 1e-6 or objective(new) < best


@settings(max_examples=20, deadline=None)
@given(seeds, st.sampled_from([2, 3, 4]), kinds)
def test_pb_exponent_makes_ratio_monotone(seed, d, kind):
    _, _, ctx = _context(seed, d, kind)
    gamma = local_pb_exponent(ctx, 10.0, grid=100)
    assert gamma >= 2.0
    alphas = np.linspace(0.0, 10.0, 101)[1:]
    logs = np.array([math.log(step_divergences(ctx, a)[0]) - gamma * math.log(a) for a in alphas])
    assert np.all(np.diff(logs) <= 1e-10 * np.maximum(1.0, np.abs(logs[1:])))
