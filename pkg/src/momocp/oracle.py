"""Independent numerical cross-checks for the relaxation bounds.

Two tools: quadrature of the running cost along an explicit piecewise-linear
trajectory (an upper bound on the optimal value), and a brute-force dynamic
program over a state grid that searches for a good such trajectory.  Neither
touches the moment machinery, which is what makes them useful as oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .poly import Polynomial
from .problems import OcpProblem, RawMeasureLpProblem, UnknownLabel, builtin_problem

TRANSITION_BUDGET = 10_000_000

# windows per dyadic cascade toward an endpoint where the integrand blows up;
# the untouched tail has relative mass 2^(-35), far below quadrature error
DYADIC_LEVELS = 70

EDGE_PANELS = 4


class BudgetExceeded(RuntimeError):
    """The requested grid search needs more transitions than allowed."""


class SingularIntegrand(ValueError):
    """The cost integral diverges (or is undefined) on a trajectory segment."""


@dataclass(frozen=True)
class SampledTrajectory:
    """Piecewise-linear state trajectory; the control is the slope per segment."""

    nodes: tuple
    states: tuple

    def __post_init__(self):
        nodes = tuple(float(t) for t in self.nodes)
        states = tuple(float(x) for x in self.states)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "states", states)
        if len(nodes) != len(states):
            raise ValueError("nodes and states must have equal length")
        if len(nodes) < 2:
            raise ValueError("a trajectory needs at least two nodes")
        if any(t1 <= t0 for t0, t1 in zip(nodes, nodes[1:])):
            raise ValueError("nodes must be strictly increasing")

    def controls(self) -> tuple:
        return tuple(
            (x1 - x0) / (t1 - t0)
            for (t0, t1), (x0, x1) in zip(
                zip(self.nodes, self.nodes[1:]), zip(self.states, self.states[1:])
            )
        )


# the time-minimization built-in is posed on the unit box with a cost that is
# not polynomial in the state; the oracle integrates it directly
SQRT_COST_LABEL = "brachistochrone"
_SQRT_PROBLEM = {
    "a": 0.0, "b": 1.0, "x_a": 0.0, "x_b": 1.0,
    "x_lo": 0.0, "x_hi": 1.0, "control_sign": "free",
}


def _simpson_weights(panels: int) -> np.ndarray:
    w = np.ones(2 * panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def _segment_simpson(l: Polynomial, t0, t1, x0, x1, panels: int) -> float:
    tau = np.linspace(t0, t1, 2 * panels + 1)
    u = (x1 - x0) / (t1 - t0)
    x = x0 + u * (tau - t0)
    vals = np.broadcast_to(l.evaluate({"t": tau, "x": x, "u": u}), tau.shape)
    h = (t1 - t0) / (2 * panels)
    return float(h * np.dot(_simpson_weights(panels), vals))


def _sqrt_integrand(x, u):
    return np.sqrt((1.0 + u * u) / x)


def _sqrt_segment(t0, t1, x0, x1, panels: int) -> float:
    """Integral of sqrt((1+u^2)/x) along one linear segment."""
    if x0 < 0 or x1 < 0:
        raise SingularIntegrand("state leaves x >= 0; the integrand is undefined")
    if x0 == 0.0 and x1 == 0.0:
        raise SingularIntegrand("x vanishes on a whole segment; the integral diverges")
    dt = t1 - t0
    u = (x1 - x0) / dt
    if min(x0, x1) > 0.0:
        tau = np.linspace(t0, t1, 2 * panels + 1)
        x = x0 + u * (tau - t0)
        h = dt / (2 * panels)
        return float(h * np.dot(_simpson_weights(panels), _sqrt_integrand(x, u)))
    # integrable endpoint singularity: open midpoint rule on windows that
    # shrink geometrically toward the end where x = 0
    k = np.arange(DYADIC_LEVELS)
    hi = dt / 2.0 ** k
    lo = hi / 2.0
    widths = (hi - lo) / panels
    offsets = lo[:, None] + (np.arange(panels)[None, :] + 0.5) * widths[:, None]
    x = abs(u) * offsets  # distance from the singular end times the slope
    return float(np.sum(_sqrt_integrand(x, u) * widths[:, None]))


def _integrand_kind(problem):
    """Classify into a polynomial Lagrangian or the built-in sqrt cost."""
    if isinstance(problem, OcpProblem):
        return "poly", problem.lagrangian
    label = problem if isinstance(problem, str) else getattr(problem, "label", "")
    if label == SQRT_COST_LABEL:
        return "sqrt", None
    if isinstance(problem, str):
        resolved = builtin_problem(problem)
        if isinstance(resolved, OcpProblem):
            return "poly", resolved.lagrangian
    raise UnknownLabel(f"no trajectory cost known for {problem!r}")


def quadrature_objective(problem, traj: SampledTrajectory, panels: int = 129) -> float:
    """Cost of a piecewise-linear trajectory by per-segment composite Simpson."""
    if panels < 1:
        raise ValueError("panels must be at least 1")
    kind, lagrangian = _integrand_kind(problem)
    total = 0.0
    pieces = zip(zip(traj.nodes, traj.nodes[1:]), zip(traj.states, traj.states[1:]))
    for (t0, t1), (x0, x1) in pieces:
        if kind == "poly":
            total += _segment_simpson(lagrangian, t0, t1, x0, x1, panels)
        else:
            total += _sqrt_segment(t0, t1, x0, x1, panels)
    return total


def _trajectory_space(problem):
    """Endpoint and box data for the grid search, plus the edge-cost kind."""
    if isinstance(problem, str):
        problem = builtin_problem(problem)
    if isinstance(problem, RawMeasureLpProblem):
        if problem.label == SQRT_COST_LABEL:
            return ("sqrt", None, _SQRT_PROBLEM)
        raise UnknownLabel(f"no trajectory oracle for {problem.label!r}")
    if isinstance(problem, OcpProblem):
        data = {
            "a": problem.a, "b": problem.b, "x_a": problem.x_a, "x_b": problem.x_b,
            "x_lo": problem.x_lo, "x_hi": problem.x_hi,
            "control_sign": problem.control_sign,
        }
        return ("poly", problem.lagrangian, data)
    raise TypeError(f"cannot run the oracle on {type(problem).__name__}")


def _sqrt_cost_matrix(grid: np.ndarray, dt: float) -> np.ndarray:
    """Exact per-edge cost for the sqrt integrand; linear segments integrate
    in closed form, so the grid search is immune to quadrature error."""
    xi = grid[:, None]
    xj = grid[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (xj - xi) / dt
        cost = 2.0 * np.sqrt(1.0 + u * u) * (np.sqrt(xj) - np.sqrt(xi)) / u
        flat = dt / np.sqrt(np.broadcast_to(xi, cost.shape))  # u = 0 edges
        cost = np.where(u == 0.0, flat, cost)
    return cost


def _poly_cost_matrix(l: Polynomial, grid: np.ndarray, t0: float, dt: float) -> np.ndarray:
    xi = grid[:, None, None]
    xj = grid[None, :, None]
    frac = np.linspace(0.0, 1.0, 2 * EDGE_PANELS + 1)
    tau = t0 + dt * frac
    x = xi + (xj - xi) * frac
    u = (xj - xi) / dt
    vals = np.broadcast_to(l.evaluate({"t": tau, "x": x, "u": u}), x.shape)
    h = dt / (2 * EDGE_PANELS)
    return h * np.tensordot(vals, _simpson_weights(EDGE_PANELS), axes=([-1], [0]))


def grid_search_upper_bound(problem, N: int, levels: int):
    """Best piecewise-linear trajectory on an equispaced state grid.

    Dynamic program over N time steps; ``levels`` counts grid intervals in
    [x_lo, x_hi], so doubling it refines the grid in place and the value can
    only improve.  Returns (value, trajectory).
    """
    if N < 1 or levels < 1:
        raise ValueError("N and levels must be positive")
    kind, lagrangian, box = _trajectory_space(problem)

    grid = np.union1d(
        np.linspace(box["x_lo"], box["x_hi"], levels + 1), [box["x_a"], box["x_b"]]
    )
    n_states = len(grid)
    if N * n_states * n_states > TRANSITION_BUDGET:
        raise BudgetExceeded(
            f"{N} steps x {n_states}^2 states exceeds {TRANSITION_BUDGET} transitions"
        )

    nodes = np.linspace(box["a"], box["b"], N + 1)
    dt = (box["b"] - box["a"]) / N

    xi = grid[:, None]
    xj = grid[None, :]
    forbidden = np.zeros((n_states, n_states), dtype=bool)
    if box["control_sign"] == "nonnegative":
        forbidden = xj < xi
    elif box["control_sign"] == "nonpositive":
        forbidden = xj > xi

    if kind == "sqrt":
        fixed_cost = _sqrt_cost_matrix(grid, dt)
        fixed_cost[forbidden] = np.inf

    start = int(np.nonzero(grid == box["x_a"])[0][0])
    goal = int(np.nonzero(grid == box["x_b"])[0][0])

    best = np.full(n_states, np.inf)
    best[start] = 0.0
    parents = np.zeros((N, n_states), dtype=int)
    for k in range(N):
        if kind == "sqrt":
            cost = fixed_cost
        else:
            cost = _poly_cost_matrix(lagrangian, grid, float(nodes[k]), dt)
            cost[forbidden] = np.inf
        total = best[:, None] + cost
        parents[k] = np.argmin(total, axis=0)
        best = total[parents[k], np.arange(n_states)]

    value = float(best[goal])
    if not np.isfinite(value):
        raise ValueError("no admissible grid trajectory connects the endpoints")

    path = [goal]
    for k in reversed(range(N)):
        path.append(int(parents[k][path[-1]]))
    path.reverse()
    traj = SampledTrajectory(
        nodes=tuple(float(t) for t in nodes),
        states=tuple(float(grid[i]) for i in path),
    )
    return value, traj
