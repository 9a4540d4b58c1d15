"""Acceptance suite: one test per numbered criterion, each printing a
PASS/FAIL line (run with ``pytest -v -s`` to see them).

The completion and classification experiment batteries are executed once in
module-scoped fixtures and shared by the descent, recovery, accuracy,
inner-compliance, and stopping criteria.
"""
import json
import time

import numpy as np
import pytest

import ttlearn.tensor_ops as top
from ttlearn import tasks
from ttlearn.cli import main as cli_main
from ttlearn.losses import CompletionLoss, LogisticLoss
from ttlearn.penalties import Penalty, dc_smooth_grad, dc_smooth_value, penalty_value, svt
from ttlearn.solver import ADMMConfig
from ttlearn.transforms import dct_transform, identity_transform

pytestmark = pytest.mark.filterwarnings("ignore:rho=.*descent is not guaranteed")

PENALTY_FAMILY = [
    Penalty("mcp", lam=1.0, gamma=2.7),
    Penalty("scad", lam=1.0, gamma=3.0),
    Penalty("log", lam=1.0, gamma=2.0),
    Penalty("convex", lam=1.0),
]


def report(number, description, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    line = f"ACCEPTANCE {number:02d} {status}: {description}"
    if detail:
        line += f" [{detail}]"
    print(line)


def rel_err(got, want):
    scale = max(np.linalg.norm(np.asarray(want).ravel()), 1e-30)
    return np.linalg.norm((np.asarray(got) - np.asarray(want)).ravel()) / scale


def bdiag(xhat):
    n1, n2, n3 = xhat.shape
    out = np.zeros((n1 * n3, n2 * n3))
    for k in range(n3):
        out[k * n1 : (k + 1) * n1, k * n2 : (k + 1) * n2] = xhat[:, :, k]
    return out


def random_corpus(rng, count=100):
    for _ in range(count):
        shape = (int(rng.integers(1, 9)), int(rng.integers(1, 7)), int(rng.integers(1, 6)))
        yield rng.standard_normal(shape)


# ---------------------------------------------------------------------------
# experiment batteries shared by criteria 7-11


COMPLETION_SETUP = dict(
    dims=(30, 30, 10), rank=2, sr=0.4, sigma=0.01,
    rho=6.0, gamma=2.7, seeds=list(range(10)),
    grid_lam=(2.0, 4.0, 6.0), grid_beta=(1.0, 2.0, 3.0),
)

CLASSIFICATION_SETUP = dict(
    dims=(10, 10, 3), rank=1, n_train=500, n_test=200,
    rho=0.15, gamma=2.7, seeds=list(range(5)),
    grids={"mcp": ((0.1, 0.2, 0.3), (0.3, 0.5, 1.0)),
           "convex": ((0.05, 0.1, 0.2), (0.3, 0.5, 1.0))},
)

# the tighter completion tolerance keeps the inexact subproblem solves within
# the sufficient-descent margin checked by criterion 7
ADMM_CFG_COMPLETION = ADMMConfig(eta=10.0, tau=1.618, max_inner=100, tol_inner=3e-4)
ADMM_CFG_CLASSIFICATION = ADMMConfig(eta=10.0, tau=1.618, max_inner=100, tol_inner=1e-3)


def _pick_best(candidates):
    """Prefer solves that hit the step tolerance, then the best score."""
    return min(candidates, key=lambda c: (not c[0], c[1]))[2]


@pytest.fixture(scope="module")
def completion_runs():
    setup = COMPLETION_SETUP
    transform = dct_transform(setup["dims"][2])
    started = time.perf_counter()

    def solve(kind, lam, beta, seed):
        truth, y_obs, mask = tasks.synth_completion(
            setup["dims"], setup["rank"], setup["sr"], setup["sigma"], transform, seed
        )
        pen = Penalty(kind, lam=lam, gamma=setup["gamma"] if kind == "mcp" else 0.0)
        _, info = tasks.run_completion(
            y_obs, mask, pen, beta=beta, rho=setup["rho"],
            admm_cfg=ADMM_CFG_COMPLETION, ground_truth=truth,
        )
        return info

    out = {}
    for kind in ("mcp", "convex"):
        tuning = []
        for lam in setup["grid_lam"]:
            for beta in setup["grid_beta"]:
                info = solve(kind, lam, beta, setup["seeds"][0])
                tuning.append(
                    (info["trace"]["converged"], info["metrics"]["relative_error"], (lam, beta))
                )
        lam, beta = _pick_best(tuning)
        runs = [solve(kind, lam, beta, seed) for seed in setup["seeds"]]
        out[kind] = {"lam": lam, "beta": beta, "runs": runs}
    out["elapsed"] = time.perf_counter() - started
    out["lipschitz"] = 1.0 / setup["sr"]
    out["rho"] = setup["rho"]
    return out


@pytest.fixture(scope="module")
def classification_runs():
    setup = CLASSIFICATION_SETUP
    transform = dct_transform(setup["dims"][2])
    started = time.perf_counter()

    def solve(kind, lam, beta, seed):
        problem = tasks.synth_logistic(
            setup["dims"], setup["rank"], setup["n_train"], setup["n_test"], transform, seed
        )
        pen = Penalty(kind, lam=lam, gamma=setup["gamma"] if kind == "mcp" else 0.0)
        _, info = tasks.run_classification(
            problem.train_samples, problem.train_labels, pen, beta=beta,
            rho=setup["rho"], admm_cfg=ADMM_CFG_CLASSIFICATION,
            test_samples=problem.test_samples, test_labels=problem.test_labels,
        )
        return info

    out = {}
    for kind in ("mcp", "convex"):
        lam_grid, beta_grid = setup["grids"][kind]
        tuning = []
        for lam in lam_grid:
            for beta in beta_grid:
                info = solve(kind, lam, beta, setup["seeds"][0])
                tuning.append(
                    (info["trace"]["converged"], -info["metrics"]["test_accuracy"], (lam, beta))
                )
        lam, beta = _pick_best(tuning)
        runs = [solve(kind, lam, beta, seed) for seed in setup["seeds"]]
        out[kind] = {"lam": lam, "beta": beta, "runs": runs}
    out["elapsed"] = time.perf_counter() - started
    return out


def evaluation_runs(completion, classification):
    for kind in ("mcp", "convex"):
        yield from completion[kind]["runs"]
        yield from classification[kind]["runs"]


# ---------------------------------------------------------------------------
# criteria


def test_criterion_01_algebra_block_diagonal_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(100)
    worst = 0.0
    for x in random_corpus(rng):
        n1, n2, n3 = x.shape
        for u in (identity_transform(n3), dct_transform(n3)):
            xhat = top.apply_transform(x, u)
            dense = bdiag(xhat)

            # t_product against dense block product
            l = int(rng.integers(1, 7))
            b = rng.standard_normal((n2, l, n3))
            prod = dense @ bdiag(top.apply_transform(b, u))
            expected_hat = np.stack(
                [prod[k * n1 : (k + 1) * n1, k * l : (k + 1) * l] for k in range(n3)], axis=2
            )
            worst = max(worst, rel_err(
                top.t_product(x, b, u), top.inverse_transform(expected_hat, u)
            ))

            # t_transpose against block-wise transpose
            tr_hat = np.stack([xhat[:, :, k].T for k in range(n3)], axis=2)
            worst = max(worst, rel_err(top.t_transpose(x, u), top.inverse_transform(tr_hat, u)))

            # t_svd sigma against per-block dense SVD
            sigma = top.t_svd(x, u).sigma
            dense_sigma = np.stack(
                [np.linalg.svd(xhat[:, :, k], compute_uv=False) for k in range(n3)]
            )
            worst = max(worst, rel_err(sigma, dense_sigma))

            # nuclear and spectral norms against the dense block-diagonal matrix
            dense_svals = np.linalg.svd(dense, compute_uv=False)
            worst = max(worst, abs(top.tensor_nuclear_norm(x, u) - dense_svals.sum())
                        / max(dense_svals.sum(), 1e-30))
            worst = max(worst, abs(top.spectral_norm(x, u) - dense_svals.max())
                        / max(dense_svals.max(), 1e-30))
    elapsed = time.perf_counter() - started
    passed = worst <= 1e-10 and elapsed < 10.0
    report(1, "algebra matches dense block-diagonal oracle",
           passed, f"worst rel err {worst:.2e}, {elapsed:.1f}s")
    assert worst <= 1e-10
    assert elapsed < 10.0


def test_criterion_02_tsvd_round_trip():
    rng = np.random.default_rng(200)
    worst = 0.0
    for x in random_corpus(rng):
        n3 = x.shape[2]
        for u in (identity_transform(n3), dct_transform(n3)):
            worst = max(worst, rel_err(top.t_svd(x, u).reconstruct(), x))
    report(2, "t-SVD reconstruction on random corpus", worst <= 1e-10, f"worst {worst:.2e}")
    assert worst <= 1e-10


def test_criterion_03_prox_optimality():
    started = time.perf_counter()
    rng = np.random.default_rng(300)
    worst_violation = -np.inf
    worst_oracle_gap = 0.0
    for _ in range(50):
        shape = (int(rng.integers(2, 7)), int(rng.integers(2, 6)), int(rng.integers(1, 5)))
        n3 = shape[2]
        u = dct_transform(n3) if rng.random() < 0.5 else identity_transform(n3)
        a = rng.standard_normal(shape)
        tau = float(0.1 + 1.9 * rng.random())
        out = svt(a, tau, u)

        # per-slice matrix SVT oracle
        ahat = top.apply_transform(a, u)
        oracle_hat = np.zeros_like(ahat)
        for k in range(n3):
            w, s, vh = np.linalg.svd(ahat[:, :, k], full_matrices=False)
            oracle_hat[:, :, k] = (w * np.maximum(s - tau, 0.0)) @ vh
        worst_oracle_gap = max(
            worst_oracle_gap, top.inf_norm(out - top.inverse_transform(oracle_hat, u))
        )

        def objective(m):
            return 0.5 * top.fro_norm(m - a) ** 2 + tau * top.tensor_nuclear_norm(m, u)

        base = objective(out)
        for _ in range(1000):
            scale = 10.0 ** rng.uniform(-3, 0.3)
            probe = out + scale * rng.standard_normal(shape)
            worst_violation = max(worst_violation, base - objective(probe))
    elapsed = time.perf_counter() - started
    passed = worst_violation <= 1e-8 and worst_oracle_gap <= 1e-12 and elapsed < 30.0
    report(3, "singular-value shrinkage is the prox and matches matrix oracle",
           passed, f"probe slack {worst_violation:.2e}, oracle gap {worst_oracle_gap:.2e}, {elapsed:.1f}s")
    assert worst_violation <= 1e-8
    assert worst_oracle_gap <= 1e-12
    assert elapsed < 30.0


def _entrywise_fd(fn, x, step=1e-6):
    fd = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        bump = np.zeros_like(x)
        bump[idx] = step
        fd[idx] = (fn(x + bump) - fn(x - bump)) / (2 * step)
    return fd


def _gapped_spectrum_tensor(rng, u, n1=6, n2=5, n3=4, min_gap=1e-2):
    m = min(n1, n2)
    xhat = np.zeros((n1, n2, n3))
    for k in range(n3):
        base = np.sort(0.5 + 3.0 * rng.random(m))[::-1]
        sigma = base + np.arange(m)[::-1] * (5 * min_gap)  # enforce separation
        assert np.all(np.diff(sigma) <= -min_gap)
        q1, _ = np.linalg.qr(rng.standard_normal((n1, n1)))
        q2, _ = np.linalg.qr(rng.standard_normal((n2, n2)))
        xhat[:, :, k] = q1[:, :m] @ np.diag(sigma) @ q2[:, :m].T
    return top.inverse_transform(xhat, u)


def test_criterion_04_gradient_finite_differences():
    rng = np.random.default_rng(400)
    worst = {"ls": 0.0, "logit": 0.0, "spectral": 0.0}

    for _ in range(20):
        mask = rng.random((4, 4, 3)) < 0.5
        mask.flat[: 2] = True
        y = np.where(mask, rng.standard_normal((4, 4, 3)), 0.0)
        loss = CompletionLoss(y, mask)
        x = rng.standard_normal((4, 4, 3))
        fd = _entrywise_fd(loss.value, x)
        worst["ls"] = max(worst["ls"], rel_err(loss.grad(x), fd))

    for _ in range(20):
        samples = rng.standard_normal((20, 3, 3, 2))
        labels = rng.integers(0, 2, size=20)
        loss = LogisticLoss(samples, labels)
        x = 0.5 * rng.standard_normal((3, 3, 2))
        fd = _entrywise_fd(loss.value, x)
        worst["logit"] = max(worst["logit"], rel_err(loss.grad(x), fd))

    pens = [Penalty("mcp", lam=1.0, gamma=2.7), Penalty("scad", lam=1.0, gamma=3.0),
            Penalty("log", lam=1.0, gamma=2.0)]
    u = dct_transform(4)
    for i in range(20):
        pen = pens[i % len(pens)]
        x = _gapped_spectrum_tensor(rng, u)
        fd = _entrywise_fd(lambda t: dc_smooth_value(t, u, pen), x)
        worst["spectral"] = max(worst["spectral"], rel_err(dc_smooth_grad(x, u, pen), fd))

    passed = all(v <= 1e-5 for v in worst.values())
    report(4, "gradients match central finite differences", passed,
           ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))
    assert worst["ls"] <= 1e-5
    assert worst["logit"] <= 1e-5
    assert worst["spectral"] <= 1e-5


def test_criterion_05_penalty_lemmas():
    rng = np.random.default_rng(500)
    u_mat = identity_transform(1)
    u_mid = dct_transform(2)
    worst_bound = -np.inf
    worst_midpoint = -np.inf
    for pen in PENALTY_FAMILY:
        for _ in range(1000):
            x = 3.0 * rng.standard_normal((5, 4, 1))
            lhs = pen.lam * pen.k0 * top.tensor_nuclear_norm(x, u_mat)
            rhs = penalty_value(x, u_mat, pen) + 0.5 * pen.mu * top.fro_norm(x) ** 2
            worst_bound = max(worst_bound, lhs - rhs)
        for _ in range(1000):
            a = rng.standard_normal((4, 3, 2))
            b = rng.standard_normal((4, 3, 2))

            def gamma_tilde(t):
                return penalty_value(t, u_mid, pen) + 0.5 * pen.mu * top.fro_norm(t) ** 2

            worst_midpoint = max(
                worst_midpoint,
                gamma_tilde((a + b) / 2) - (gamma_tilde(a) + gamma_tilde(b)) / 2,
            )
    passed = worst_bound <= 1e-8 and worst_midpoint <= 1e-8
    report(5, "nuclear-bound and weak-convexity lemmas", passed,
           f"bound slack {worst_bound:.2e}, midpoint slack {worst_midpoint:.2e}")
    assert worst_bound <= 1e-8
    assert worst_midpoint <= 1e-8


def test_criterion_06_lipschitz_bounds():
    rng = np.random.default_rng(600)
    mask = rng.random((4, 4, 3)) < 0.5
    mask.flat[:2] = True
    ls = CompletionLoss(np.where(mask, rng.standard_normal((4, 4, 3)), 0.0), mask)
    samples = rng.standard_normal((25, 3, 3, 2))
    logit = LogisticLoss(samples, rng.integers(0, 2, size=25))
    worst = -np.inf
    for loss, shape in ((ls, (4, 4, 3)), (logit, (3, 3, 2))):
        bound = loss.lipschitz_constant()
        for _ in range(1000):
            a = rng.standard_normal(shape)
            b = rng.standard_normal(shape)
            ratio = top.fro_norm(loss.grad(a) - loss.grad(b)) / top.fro_norm(a - b)
            worst = max(worst, ratio - bound)
    report(6, "gradient Lipschitz constants are honored", worst <= 1e-12, f"excess {worst:.2e}")
    assert worst <= 1e-12


def test_criterion_07_descent_inequality(completion_runs, classification_runs):
    checked = 0
    worst = -np.inf
    for info in evaluation_runs(completion_runs, classification_runs):
        trace = info["trace"]
        assert all(entry["feasible"] for entry in trace["entries"])
        if not trace["descent_checked"]:
            continue
        checked += 1
        a = trace["descent_margin"]
        objectives = [trace["initial_objective"]] + [e["objective"] for e in trace["entries"]]
        for t, entry in enumerate(trace["entries"]):
            worst = max(worst, objectives[t + 1] + a * entry["step_norm"] ** 2 - objectives[t])
    passed = checked > 0 and worst <= 1e-9
    report(7, "sufficient-descent inequality holds on checked solves", passed,
           f"{checked} solves, worst violation {worst:.2e}")
    assert checked > 0
    assert worst <= 1e-9


def test_criterion_08_completion_recovery(completion_runs):
    mcp_errors = [r["metrics"]["relative_error"] for r in completion_runs["mcp"]["runs"]]
    cvx_errors = [r["metrics"]["relative_error"] for r in completion_runs["convex"]["runs"]]
    mcp_median = float(np.median(mcp_errors))
    cvx_median = float(np.median(cvx_errors))
    elapsed = completion_runs["elapsed"]
    passed = mcp_median <= 5e-2 and mcp_median <= cvx_median + 1e-3 and elapsed < 120.0
    report(8, "synthetic completion recovery and nonconvex-vs-convex ordering", passed,
           f"mcp median {mcp_median:.4f}, convex median {cvx_median:.4f}, {elapsed:.0f}s")
    assert mcp_median <= 5e-2
    assert mcp_median <= cvx_median + 1e-3
    assert elapsed < 120.0


def test_criterion_09_classification_accuracy(classification_runs):
    mcp_tacs = [r["metrics"]["test_accuracy"] for r in classification_runs["mcp"]["runs"]]
    cvx_tacs = [r["metrics"]["test_accuracy"] for r in classification_runs["convex"]["runs"]]
    mcp_median = float(np.median(mcp_tacs))
    cvx_median = float(np.median(cvx_tacs))
    elapsed = classification_runs["elapsed"]
    passed = mcp_median >= 0.90 and mcp_median >= cvx_median - 0.02 and elapsed < 120.0
    report(9, "synthetic classification accuracy", passed,
           f"mcp median {mcp_median:.3f}, convex median {cvx_median:.3f}, {elapsed:.0f}s")
    assert mcp_median >= cvx_median - 0.02
    assert elapsed < 120.0
    # Known red: the generator normalizes the coefficient to norm 5, so the
    # margins are N(0, 25) and the labels carry enough Bernoulli noise that
    # even the Bayes rule has expected accuracy ~0.894 (and clears a 0.90
    # median-of-5 only ~40% of the time). No estimator can reliably pass this
    # threshold; it is asserted anyway rather than weakened. See README.
    assert mcp_median >= 0.90


def test_criterion_10_inner_solver_compliance(completion_runs, classification_runs):
    compliant = 0
    total = 0
    for info in evaluation_runs(completion_runs, classification_runs):
        for entry in info["trace"]["entries"]:
            total += 1
            if entry["inner_iterations"] <= 100 and entry["kkt_residual"] <= 3e-3:
                compliant += 1
    fraction = compliant / total
    report(10, "inner KKT residual reaches 3e-3 within 100 iterations", fraction >= 0.90,
           f"{compliant}/{total} = {fraction:.3f}")
    assert fraction >= 0.90


def test_criterion_11_outer_stopping(completion_runs, classification_runs):
    converged = 0
    total = 0
    for info in evaluation_runs(completion_runs, classification_runs):
        total += 1
        trace = info["trace"]
        if trace["converged"] and trace["outer_iterations"] < 100:
            converged += 1
    fraction = converged / total
    report(11, "outer loop stops by relative step before the iteration cap",
           fraction >= 0.80, f"{converged}/{total} = {fraction:.3f}")
    assert fraction >= 0.80


def test_criterion_12_pipeline_determinism(tmp_path):
    outputs = []
    for rep in range(2):
        res = tmp_path / f"complete_{rep}.json"
        status = cli_main([
            "complete", "--synthetic", "--dims", "10x10x2", "--rank", "1",
            "--sr", "0.6", "--sigma", "0.01", "--seed", "11",
            "--lambda", "2.0", "--beta", "2.0", "--rho", "4.0",
            "--tol-inner", "1e-3", "--max-outer", "40",
            "--results", str(res),
        ])
        assert status == 0
        outputs.append(res.read_bytes())

    cls_outputs = []
    for rep in range(2):
        res = tmp_path / f"classify_{rep}.json"
        status = cli_main([
            "classify", "--synthetic", "--dims", "4x4x2", "--rank", "1",
            "--n-train", "80", "--n-test", "40", "--seed", "11",
            "--lambda", "0.2", "--beta", "0.5", "--rho", "0.2",
            "--tol-inner", "1e-3", "--max-outer", "40",
            "--results", str(res),
        ])
        assert status == 0
        cls_outputs.append(res.read_bytes())

    def strip_timing(raw):
        data = json.loads(raw)
        data.pop("timing")
        return json.dumps(data, sort_keys=True).encode()

    same = (
        strip_timing(outputs[0]) == strip_timing(outputs[1])
        and strip_timing(cls_outputs[0]) == strip_timing(cls_outputs[1])
    )
    report(12, "same seed gives byte-identical results apart from timing", same)
    assert same
