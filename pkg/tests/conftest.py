import numpy as np
import pytest

from ludrec import (
    EdgeFraction,
    HlvParams,
    generate_instance,
    solve_lud,
    solve_reference,
    solve_shapefit,
    SolverParams,
)


@pytest.fixture(scope="session", autouse=True)
def _jit_warmup():
    # Compile the numba cores once, up front, so per-test runtime budgets
    # measure the algorithms rather than LLVM.
    inst = generate_instance(HlvParams(n=5, p=1.0, corruption=EdgeFraction(0.2), seed=0))
    fast = SolverParams(max_iters=50)
    solve_lud(inst.graph, fast)
    solve_shapefit(inst.graph, fast)
    solve_reference(inst.graph, 50, "lud")
    solve_reference(inst.graph, 50, "shapefit")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tiny_instance(seed=0, n=5, p=1.0, q=0.2, sigma=0.0):
    return generate_instance(
        HlvParams(n=n, p=p, corruption=EdgeFraction(q), noise_sigma=sigma, seed=seed)
    )


@pytest.fixture
def k4_text():
    from pathlib import Path

    return (Path(__file__).parent / "data" / "k4_one_bad_edge.txt").read_text()
