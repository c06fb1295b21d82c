"""Simultaneous-update inference engine.

Given a Dirichlet prior over the side probabilities theta, the likelihood
of whatever counts an agent can see, and one linear moment target
<f(theta)> = F with f(theta) = sum_i f_i theta_i, the updated belief is

    p(theta)  propto  prior(theta) * view_likelihood(theta) * exp(beta f(theta)),

where the multiplier beta is the unique root of <f>_beta = F.  <f>_beta is
strictly increasing in beta (its derivative is the posterior variance of
f), so a bracketed bisection is the correctness path for the solve.

Everything is normalized on the engine's own nodes: zeta is the engine
expectation, under the flat reference measure, of the unnormalized density,
so every posterior integrates to exactly 1 under the engine that built it
and tilt expectations are ratios of sums sharing one set of nodes.  All
densities are handled in log space; the beta-independent part of the
log-integrand is computed once per (prior, view, engine) and reused across
every beta the solver visits.

With no data the result is the exponentially tilted prior (pure moment
matching); with beta = 0 it is the conjugate Dirichlet update.  The
maximized relative entropy of the update is s_me = log zeta - beta*F under
this sign convention (the posterior carries e^{+beta f}).

Solves are single-threaded at the iteration level (node evaluation is
vectorized); PriorSpec, SolvedConstraint and PosteriorModel values are
immutable and safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln, xlogy

from .multinomial import AgentView, view_log_likelihood_nodes
from .simplex import (
    DEFAULT_NODE_BUDGET,
    SimplexGrid,
    ThetaPoint,
    build_grid,
    sample_dirichlet,
)

DEFAULT_SOLVER_TOL = 1e-9
DEFAULT_MAX_ITER = 200
BETA_CAP = 2.0**16
DEFAULT_MC_SAMPLES = 200_000
MARGINAL_BINS = 100


class InfeasibleConstraintError(ValueError):
    """The moment target lies outside the attainable open interval."""


class ConvergenceError(RuntimeError):
    """The multiplier solve failed to reach the requested residual."""


@dataclass(frozen=True)
class PriorSpec:
    """Dirichlet prior over side probabilities; all ones is the flat prior."""

    dirichlet_params: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.dirichlet_params) < 2:
            raise ValueError("prior needs at least 2 parameters")
        if any(a <= 0.0 for a in self.dirichlet_params):
            raise ValueError(f"Dirichlet parameters must be > 0, got {self.dirichlet_params}")

    @classmethod
    def flat(cls, k: int) -> "PriorSpec":
        return cls(tuple(1.0 for _ in range(k)))

    @classmethod
    def of(cls, values: Sequence[float]) -> "PriorSpec":
        return cls(tuple(float(v) for v in values))

    @property
    def k(self) -> int:
        return len(self.dirichlet_params)

    def log_rel_density(self, nodes: np.ndarray) -> np.ndarray:
        """log density relative to the flat Dirichlet reference, vectorized.

        Boundary points are handled with the xlogy conventions, so a flat
        prior evaluates to 0 everywhere and alpha > 1 gives -inf on faces.
        """
        alpha = np.asarray(self.dirichlet_params)
        const = gammaln(alpha.sum()) - float(np.sum(gammaln(alpha))) - gammaln(self.k)
        return const + xlogy(alpha - 1.0, nodes).sum(axis=1)


@dataclass(frozen=True)
class ConstraintSpec:
    """Linear moment constraint: <sum_i f_i theta_i> must equal F."""

    f: tuple[float, ...]
    F: float

    @classmethod
    def of(cls, f: Sequence[float], F: float) -> "ConstraintSpec":
        return cls(tuple(float(v) for v in f), float(F))

    @classmethod
    def none(cls, k: int) -> "ConstraintSpec":
        """Trivial constraint: satisfied identically, solves to beta = 0."""
        return cls(tuple(0.0 for _ in range(k)), 0.0)

    @property
    def k(self) -> int:
        return len(self.f)

    @property
    def is_constant(self) -> bool:
        return len(set(self.f)) == 1

    def attainable_interval(self) -> tuple[float, float]:
        return (min(self.f), max(self.f))

    def f_values(self, nodes: np.ndarray) -> np.ndarray:
        return nodes @ np.asarray(self.f)


@dataclass(frozen=True)
class SolvedConstraint:
    """A fitted multiplier: beta, the log normalizer, and the residual."""

    spec: ConstraintSpec
    beta: float
    log_zeta: float
    residual: float
    tol: float
    provenance: tuple
    iterations: int = 0

    def __post_init__(self) -> None:
        if not self.residual <= self.tol:
            raise ValueError(
                f"residual {self.residual!r} exceeds solver tolerance {self.tol!r}"
            )


class GridEngine:
    """Deterministic lattice-quadrature backend (k <= 4 recommended)."""

    def __init__(self, k: int, resolution: int | None = None,
                 node_budget: int = DEFAULT_NODE_BUDGET):
        self.k = k
        self.resolution = resolution if resolution is not None else default_resolution(k)
        self.node_budget = node_budget
        self._grid: SimplexGrid | None = None

    @property
    def grid(self) -> SimplexGrid:
        if self._grid is None:
            self._grid = build_grid(self.k, self.resolution, self.node_budget)
        return self._grid

    def basis(self, prior: PriorSpec, view: AgentView) -> tuple[np.ndarray, np.ndarray]:
        """Return (theta nodes, log reference weights)."""
        g = self.grid
        logw = np.full(g.node_count, -np.log(g.node_count))
        return g.nodes, logw

    def descriptor(self) -> dict:
        return {"grid": self.resolution}

    def __repr__(self) -> str:
        return f"GridEngine(k={self.k}, resolution={self.resolution})"


class McEngine:
    """Seeded Dirichlet importance-sampling backend for higher dimensions.

    Samples are drawn from a proposal matched to the no-tilt posterior
    (prior parameters plus visible counts, with the unseen total spread over
    hidden sides in proportion to their prior weights); reference weights
    carry the flat-measure/proposal density ratio.
    """

    def __init__(self, k: int, samples: int = DEFAULT_MC_SAMPLES, seed: int = 0):
        if samples < 2:
            raise ValueError("samples must be >= 2")
        self.k = k
        self.samples = samples
        self.seed = seed

    def proposal_params(self, prior: PriorSpec, view: AgentView) -> np.ndarray:
        alpha = np.asarray(prior.dirichlet_params, dtype=float)
        params = alpha.copy()
        hidden = np.ones(self.k, dtype=bool)
        for side, count in view.visible:
            params[side - 1] += count
            hidden[side - 1] = False
        rest = view.n - view.visible_total
        if rest > 0 and hidden.any():
            params[hidden] += rest * alpha[hidden] / alpha[hidden].sum()
        return params

    def basis(self, prior: PriorSpec, view: AgentView) -> tuple[np.ndarray, np.ndarray]:
        params = self.proposal_params(prior, view)
        theta = sample_dirichlet(params, self.samples, self.seed, stream=0)
        const = gammaln(params.sum()) - float(np.sum(gammaln(params))) - gammaln(self.k)
        log_proposal_rel = const + np.log(theta) @ (params - 1.0)
        logw = -np.log(self.samples) - log_proposal_rel
        return theta, logw

    def descriptor(self) -> dict:
        return {"mc_samples": self.samples, "mc_seed": self.seed}

    def __repr__(self) -> str:
        return f"McEngine(k={self.k}, samples={self.samples}, seed={self.seed})"


def default_resolution(k: int) -> int:
    if k == 2:
        return 960
    if k == 3:
        return 240
    if k == 4:
        return 60
    raise ValueError(f"no default grid resolution for k={k}; use McEngine")


def default_engine(k: int):
    """Grid backend for k <= 4, Monte-Carlo for higher dimensions."""
    if k <= 4:
        return GridEngine(k)
    return McEngine(k)


def _provenance(prior: PriorSpec, view: AgentView, spec: ConstraintSpec, engine) -> tuple:
    return (
        prior.dirichlet_params,
        (view.k, view.n, view.visible),
        (spec.f, spec.F),
        tuple(sorted(engine.descriptor().items())),
    )


class _TiltedFamily:
    """Cached beta-independent node data for one (prior, view, constraint, engine).

    a_j = log w_j + log prior_rel(theta_j) + log view_likelihood(theta_j)
    f_j = f(theta_j)

    log_zeta(beta) = logsumexp_j(a_j + beta f_j); expectations under the
    tilted posterior are softmax-weighted sums over the same nodes.
    """

    def __init__(self, prior: PriorSpec, view: AgentView, spec: ConstraintSpec, engine):
        if prior.k != view.k or spec.k != view.k or engine.k != view.k:
            raise ValueError(
                f"dimension mismatch: prior k={prior.k}, view k={view.k}, "
                f"constraint k={spec.k}, engine k={engine.k}"
            )
        self.prior, self.view, self.spec, self.engine = prior, view, spec, engine
        theta, logw = engine.basis(prior, view)
        self.theta = theta
        self.a = logw + prior.log_rel_density(theta) + view_log_likelihood_nodes(view, theta)
        if not np.all(np.isfinite(self.a)):
            j = int(np.flatnonzero(~np.isfinite(self.a))[0])
            raise ValueError(
                f"log-integrand is not finite at node {j} (theta={tuple(theta[j])}); "
                "the view likelihood vanishes on the whole support"
            )
        self.f = spec.f_values(theta)

    def log_zeta(self, beta: float) -> float:
        t = self.a + beta * self.f
        m = t.max()
        return float(m + np.log(np.sum(np.exp(t - m))))

    def posterior_weights(self, beta: float) -> np.ndarray:
        t = self.a + beta * self.f
        w = np.exp(t - t.max())
        return w / w.sum()

    def expected_f(self, beta: float) -> float:
        return float(self.posterior_weights(beta) @ self.f)

    def log_density(self, beta: float, log_zeta: float, theta: np.ndarray) -> np.ndarray:
        """log posterior density (relative to the flat reference) at arbitrary points."""
        pts = np.atleast_2d(theta)
        out = (
            self.prior.log_rel_density(pts)
            + view_log_likelihood_nodes(self.view, pts)
            + self.spec.f_values(pts) * beta
            - log_zeta
        )
        return out if np.asarray(theta).ndim == 2 else out[0]


def log_zeta(prior: PriorSpec, view: AgentView, constraint: ConstraintSpec,
             beta: float, engine) -> float:
    """log of the engine expectation of prior_rel * view_likelihood * e^{beta f}."""
    return _TiltedFamily(prior, view, constraint, engine).log_zeta(beta)


def expected_f(prior: PriorSpec, view: AgentView, constraint: ConstraintSpec,
               beta: float, engine) -> float:
    """<f(theta)> under the beta-tilted posterior, as a ratio of shared-node sums."""
    return _TiltedFamily(prior, view, constraint, engine).expected_f(beta)


def solve_beta(prior: PriorSpec, view: AgentView, constraint: ConstraintSpec, engine,
               tol: float = DEFAULT_SOLVER_TOL,
               max_iter: int = DEFAULT_MAX_ITER) -> SolvedConstraint:
    """Fit the multiplier so the posterior satisfies the moment constraint.

    Feasible targets are the open interval (min f_i, max f_i); a constant f
    is feasible only at its own value.  If the constraint already holds at
    beta = 0 (within tol) the solve returns beta = 0 exactly.  Otherwise the
    root is bracketed by doubling from [-1, 1] (capped at |beta| = 2^16) and
    bisected until |<f> - F| <= tol or the interval width falls below 1e-12.
    """
    lo_f, hi_f = constraint.attainable_interval()
    if constraint.is_constant:
        if constraint.F != lo_f:
            raise InfeasibleConstraintError(
                f"constant f = {lo_f} cannot satisfy target F = {constraint.F}"
            )
    elif not lo_f < constraint.F < hi_f:
        raise InfeasibleConstraintError(
            f"target F = {constraint.F} lies outside the attainable interval "
            f"({lo_f}, {hi_f})"
        )
    fam = _TiltedFamily(prior, view, constraint, engine)
    prov = _provenance(prior, view, constraint, engine)

    e0 = fam.expected_f(0.0)
    if abs(e0 - constraint.F) <= tol:
        return SolvedConstraint(
            spec=constraint, beta=0.0, log_zeta=fam.log_zeta(0.0),
            residual=abs(e0 - constraint.F), tol=tol, provenance=prov, iterations=0,
        )

    # Bracket the root; expected_f is strictly increasing in beta.
    lo, hi = -1.0, 1.0
    e_lo, e_hi = fam.expected_f(lo), fam.expected_f(hi)
    iters = 2
    while e_lo > constraint.F:
        lo *= 2.0
        if abs(lo) > BETA_CAP:
            raise ConvergenceError(
                f"no bracket: <f>({-BETA_CAP:g}) = {e_lo!r} still above F = {constraint.F}"
            )
        e_lo = fam.expected_f(lo)
        iters += 1
    while e_hi < constraint.F:
        hi *= 2.0
        if hi > BETA_CAP:
            raise ConvergenceError(
                f"no bracket: <f>({BETA_CAP:g}) = {e_hi!r} still below F = {constraint.F}"
            )
        e_hi = fam.expected_f(hi)
        iters += 1

    beta, resid = 0.5 * (lo + hi), np.inf
    for _ in range(max_iter):
        beta = 0.5 * (lo + hi)
        e_mid = fam.expected_f(beta)
        iters += 1
        resid = abs(e_mid - constraint.F)
        if resid <= tol:
            break
        if e_mid < constraint.F:
            lo = beta
        else:
            hi = beta
        if hi - lo <= 1e-12:
            break
    if resid > tol:
        raise ConvergenceError(
            f"bisection stalled: beta = {beta!r}, residual = {resid!r} > tol = {tol!r}, "
            f"interval = [{lo!r}, {hi!r}] after {iters} evaluations"
        )
    return SolvedConstraint(
        spec=constraint, beta=beta, log_zeta=fam.log_zeta(beta),
        residual=resid, tol=tol, provenance=prov, iterations=iters,
    )


@dataclass(frozen=True, eq=False)
class PosteriorModel:
    """Normalized posterior density over theta (relative to the flat reference)."""

    prior: PriorSpec
    view: AgentView
    solved: SolvedConstraint
    engine: object
    _family: _TiltedFamily = field(repr=False)

    @property
    def beta(self) -> float:
        return self.solved.beta

    @property
    def log_norm(self) -> float:
        return self.solved.log_zeta

    def log_density(self, theta) -> float:
        t = theta.as_array() if isinstance(theta, ThetaPoint) else np.asarray(theta, dtype=float)
        return float(self._family.log_density(self.beta, self.log_norm, t))

    def log_density_at(self, points: np.ndarray) -> np.ndarray:
        return self._family.log_density(self.beta, self.log_norm, points)

    def density(self, theta) -> float:
        return float(np.exp(self.log_density(theta)))


def posterior(prior: PriorSpec, view: AgentView, solved: SolvedConstraint,
              engine) -> PosteriorModel:
    """Build the normalized posterior for a fitted multiplier.

    `solved` must have been produced by `solve_beta` for the same prior,
    view, constraint and engine; anything else is a contract error.
    """
    prov = _provenance(prior, view, solved.spec, engine)
    if prov != solved.provenance:
        raise ValueError(
            "solved constraint was produced for different inputs "
            f"(expected {solved.provenance}, got {prov})"
        )
    fam = _TiltedFamily(prior, view, solved.spec, engine)
    return PosteriorModel(prior=prior, view=view, solved=solved, engine=engine, _family=fam)


def posterior_no_constraint(prior: PriorSpec, view: AgentView, engine) -> PosteriorModel:
    """Posterior with the moment constraint omitted (beta fixed at 0)."""
    trivial = ConstraintSpec.none(view.k)
    solved = solve_beta(prior, view, trivial, engine)
    return posterior(prior, view, solved, engine)


@dataclass(frozen=True)
class PosteriorSummary:
    """Cheap-to-serialize summary of a posterior under its engine."""

    means: tuple[float, ...]
    variances: tuple[float, ...]
    expected_f: float
    normalization: float
    marginal_abscissa: tuple[float, ...]
    marginals: tuple[tuple[float, ...], ...]


def posterior_summary(model: PosteriorModel, engine=None) -> PosteriorSummary:
    """Component means/variances, <f>, normalization check, marginal tables.

    Marginals are per-component density estimates on a fixed abscissa grid
    of bin centers over [0, 1] (bin mass divided by bin width), suitable
    for plotting.
    """
    fam = model._family
    w = fam.posterior_weights(model.beta)
    means = fam.theta.T @ w
    second = (fam.theta**2).T @ w
    variances = np.maximum(second - means**2, 0.0)
    ef = float(w @ fam.f)
    # Engine expectation of the normalized density; exactly 1 up to roundoff
    # because the normalizer is the same engine sum.
    log_vals = fam.a + model.beta * fam.f - model.log_norm
    normalization = float(np.sum(np.exp(log_vals)))
    edges = np.linspace(0.0, 1.0, MARGINAL_BINS + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    marginals = []
    for i in range(fam.theta.shape[1]):
        hist, _ = np.histogram(fam.theta[:, i], bins=edges, weights=w)
        marginals.append(tuple(float(v) for v in hist * MARGINAL_BINS))
    return PosteriorSummary(
        means=tuple(float(v) for v in means),
        variances=tuple(float(v) for v in variances),
        expected_f=ef,
        normalization=normalization,
        marginal_abscissa=tuple(float(v) for v in centers),
        marginals=tuple(marginals),
    )


@dataclass(frozen=True)
class EntropyReport:
    """Maximized relative entropy of an update and its ingredients."""

    s_me: float
    log_zeta: float
    beta: float
    F: float

    def __post_init__(self) -> None:
        # Non-positive up to engine roundoff; it is a negated divergence.
        if self.s_me > 1e-9:
            raise ValueError(f"s_me must be <= 0, got {self.s_me!r}")


def me_entropy(model: PosteriorModel, engine=None) -> EntropyReport:
    """Entropy of the update: s_me = log zeta - beta * F.

    The value is checked against a direct node-wise evaluation of
    -E[p * log(p / p_ref)] with p_ref the prior-times-likelihood density;
    disagreement beyond 1e-6 raises, since that indicates a broken solve.
    """
    fam = model._family
    beta, F = model.beta, model.solved.spec.F
    s_me = model.log_norm - beta * F
    log_p_over_ref = beta * fam.f - model.log_norm
    weighted_p = np.exp(fam.a + beta * fam.f - model.log_norm)
    direct = -float(weighted_p @ log_p_over_ref)
    if abs(s_me - direct) > 1e-6:
        raise ConvergenceError(
            f"entropy identity violated: log_zeta - beta*F = {s_me!r} but the "
            f"direct functional evaluates to {direct!r}"
        )
    return EntropyReport(s_me=s_me, log_zeta=model.log_norm, beta=beta, F=F)
