"""Three optimizers meet one bilinear saddle.

The payoff g(pi, delta) = delta^T (A pi - f) has its equilibrium exactly at
the linear solve A pi = f with delta = 0.  Plain gradient descent-ascent
rotates around that point and never converges; the extragradient correction
contracts, slowly; a competitive step that solves for the other player's
response snaps in within a few hundred iterations.

A is the 50-point second-difference matrix, so this is a miniature of the
full PDE game with every network detail stripped away.

Run from the repository root:

    python demos/bilinear_game.py
"""

import numpy as np

from cpinn.autodiff.api import payoff_grads
from cpinn.conditioning import fd_laplacian_1d
from cpinn.game import bilinear_payoff, vector_params
from cpinn.optim import (
    AcgdState,
    ExtragradientState,
    SgdState,
    acgd_step,
    extragradient_step,
)

N = 50
STEPS = 2000
REPORT_EVERY = 250


def fresh_players():
    return vector_params(np.zeros(N), "pi"), vector_params(np.zeros(N), "delta")


def run_gda(payoff, A, f, eta):
    x, y = fresh_players()
    trace = []
    for step in range(1, STEPS + 1):
        _, gx, gy = payoff_grads(payoff, x, y)
        x = x.with_values(x.values - eta * gx.values)
        y = y.with_values(y.values + eta * gy.values)
        if step % REPORT_EVERY == 0:
            trace.append((step, rel_residual(A, f, x.values)))
    return trace


def run_extragradient(payoff, A, f, eta):
    x, y = fresh_players()
    state = ExtragradientState(SgdState(lr=eta), SgdState(lr=eta))
    trace = []
    for step in range(1, STEPS + 1):
        rep = extragradient_step(state, payoff, x, y)
        x, y = rep.x, rep.y
        if step % REPORT_EVERY == 0:
            trace.append((step, rel_residual(A, f, x.values)))
    return trace


def run_acgd(payoff, A, f):
    x, y = fresh_players()
    state = AcgdState(lr_x=1.0, lr_y=1.0)
    trace = []
    for step in range(1, STEPS + 1):
        rep = acgd_step(state, payoff, x, y)
        x, y = rep.x, rep.y
        if step % REPORT_EVERY == 0:
            trace.append((step, rel_residual(A, f, x.values)))
        if trace and trace[-1][1] < 1e-12:
            break
    return trace


def rel_residual(A, f, pi):
    return np.linalg.norm(A @ pi - f) / np.linalg.norm(f)


def show(label, trace):
    cells = "  ".join(f"{step:>5}:{res:.1e}" for step, res in trace)
    print(f"{label:<22} {cells}")


def main() -> None:
    A = fd_laplacian_1d(N)
    f = np.random.default_rng(0).standard_normal(N)
    payoff = bilinear_payoff(A, f)

    print(f"relative residual |A pi - f| / |f| every {REPORT_EVERY} steps")
    print()
    for eta in (1e-1, 1e-2):
        show(f"gda, eta = {eta:g}", run_gda(payoff, A, f, eta))
    show("extragradient, 1e-1", run_extragradient(payoff, A, f, 1e-1))
    show("acgd, lr = 1", run_acgd(payoff, A, f))
    print()
    print(
        "Descent-ascent never converges here: the larger step spirals outward\n"
        "and the smaller one orbits the saddle indefinitely.  Extragradient\n"
        "damps the rotation but gains little ground at this conditioning.  The\n"
        "competitive step anticipates the opponent's counter-move, so each\n"
        "iteration performs a damped implicit solve and the residual collapses."
    )


if __name__ == "__main__":
    main()
