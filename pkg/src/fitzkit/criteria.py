"""Near-convexity criteria as executable checks.

Each check packages its verdict with the numeric witnesses (points,
quotients, separation data) that justify it. "Unbounded" is always a
schedule claim (monotone growth plus a final threshold crossing), never a
symbolic one. Witness search order is deterministic: domain points whose
fibers carry exact rays first (rays scaled analytically to the needed
magnitude), then point-valued fibers, then one round of wider/finer
resampling; ties break lexicographically.
"""

from __future__ import annotations

from typing import Callable, Optional, Union

import numpy as np

from .certificates import Certificate, QuotientTrace, failed, not_applicable, passed
from .errors import (
    NoClosedFormError,
    NotMaximalError,
    NotSeparableError,
    ValidationError,
    ZOnDomainError,
)
from .fitzpatrick import (
    fitz_domain_projection,
    fitz_sampled,
    is_finite,
)
from .operators import (
    DualityMapOp,
    FiniteGraph,
    GraphOp,
    LinearOp,
    OperatorSpec,
    duality_point,
    fiber,
    graph_sample,
    maximality_probe,
    membership,
    perturb,
    relatedness_products,
    resolvent,
    unique_domain_points,
)
from .vecspace import (
    DEFAULT_TOL,
    Grid,
    PairPoint,
    ToleranceConfig,
    Vector,
    as_vector,
    conv_hull,
    dist_to_polytope,
    hausdorff,
    lexsort_rows,
    pair,
    separate,
)

_MARGIN_FACTOR = 1.001


def _default_wgrid(op: OperatorSpec, xgrid: Grid) -> Grid:
    """Sampling grid wide enough that Minty points cover the scan box.

    For linear operators the needed base-point range w = (I+M)x + c over the
    box is exact (corner images); otherwise a 2x-radius heuristic suffices
    for the desk-scale zoo (resolvents are nonexpansive and anchored near
    the origin)."""
    n = xgrid.dim
    if isinstance(op, LinearOp):
        import itertools

        corners = np.array(list(itertools.product(*zip(xgrid.lower, xgrid.upper))))
        images = corners @ (np.eye(n) + op.M).T + op.c
        lo = images.min(axis=0) - xgrid.spacing
        hi = images.max(axis=0) + xgrid.spacing
        return Grid(lo, hi, xgrid.spacing * 2.0, cap=xgrid.cap)
    r = float(max(np.abs(xgrid.lower).max(), np.abs(xgrid.upper).max()))
    half = 2.0 * max(r, 1.0)
    return Grid(-half * np.ones(n), half * np.ones(n), xgrid.spacing * 2.0, cap=xgrid.cap)


def _surrogate_graph(op: OperatorSpec, wgrid: Grid | None, tol: ToleranceConfig) -> FiniteGraph:
    if isinstance(op, GraphOp):
        return op.graph
    if wgrid is None:
        raise ValidationError("sampled operators need a wgrid")
    return graph_sample(op, wgrid, tol)


def _split_candidates(
    op: OperatorSpec, dom: np.ndarray, tol: ToleranceConfig
) -> list[tuple[Vector, "object"]]:
    """Domain points with their fibers: exact-ray fibers first, each group in
    lexicographic order."""
    rayful, plain = [], []
    for a in dom:
        f = fiber(op, a, tol)
        if f.is_empty:
            continue
        (rayful if (f.exact and len(f.rays)) else plain).append((a, f))
    return rayful + plain


def _search_value_witness(
    op: OperatorSpec,
    dom: np.ndarray,
    z: Vector,
    needed: Callable[[Vector], float],
    tol: ToleranceConfig,
) -> Optional[tuple[Vector, Vector, float]]:
    """First (a, a*, <z-a, a*>) over fibers with <z-a, a*> strictly above
    needed(a); exact rays are scaled analytically to reach the target."""
    for a, f in _split_candidates(op, dom, tol):
        d = z - a
        target = needed(a)
        goal = target * _MARGIN_FACTOR + 10.0 * tol.eq_tol
        vals = f.points @ d
        order = lexsort_rows(f.points)
        best_i = max(order.tolist(), key=lambda i: (vals[i],))
        best_val = float(vals[best_i])
        astar = None
        if best_val > goal:
            astar = f.points[best_i]
        elif f.exact and len(f.rays):
            slopes = f.rays @ d
            ray_order = lexsort_rows(f.rays)
            bi = max(ray_order.tolist(), key=lambda i: (slopes[i],))
            if slopes[bi] > tol.eq_tol:
                t = (goal - best_val) / float(slopes[bi])
                astar = f.points[best_i] + max(t, 0.0) * f.rays[bi]
        if astar is None:
            continue
        val = float(np.dot(d, astar))
        if val <= target:
            continue
        if not membership(op, pair(a, astar), tol):
            continue
        return as_vector(a), as_vector(astar), val
    return None


# ---------------------------------------------------------------------------
# sup quotient
# ---------------------------------------------------------------------------

def sup_quotient(
    op: OperatorSpec,
    z: Vector,
    wgrid: Grid,
    tol: ToleranceConfig = DEFAULT_TOL,
    allow_z_in_domain: bool = False,
) -> tuple[float, QuotientTrace]:
    """Estimate sup <z-a, a*> / ||z-a|| over the sampled graph and fiber rays.

    A positively-aligned exact ray certifies divergence: the estimate is the
    quotient at an analytic threshold crossing. Full-domain operators can
    waive the off-domain precondition with allow_z_in_domain.
    """
    g = graph_sample(op, wgrid, tol) if not isinstance(op, GraphOp) else op.graph
    z = as_vector(z, dim=g.dim)
    dists = np.linalg.norm(g.primals - z, axis=1)
    near = dists <= tol.eq_tol
    if np.any(near) and not allow_z_in_domain:
        raise ZOnDomainError("a sampled domain point coincides with z")
    keep = ~near
    if not np.any(keep):
        raise ZOnDomainError("no sampled domain point is separated from z")
    diffs = z - g.primals[keep]
    quots = np.einsum("ij,ij->i", diffs, g.duals[keep]) / dists[keep]
    kept_pairs = [p for p, k in zip(g.pairs, keep) if k]

    entries: list[tuple[float, float, PairPoint]] = []
    best = -np.inf
    ordinal = 0
    for q, p in zip(quots, kept_pairs):
        if q > best:
            ordinal += 1
            best = float(q)
            entries.append((float(ordinal), best, p))
    estimate = best

    # ray divergence: quotient grows along any positively-aligned exact ray
    target_q = tol.inf_threshold * _MARGIN_FACTOR
    dom = unique_domain_points(g, tol)
    dom = dom[np.linalg.norm(dom - z, axis=1) > tol.eq_tol]
    found = _search_value_witness(
        op, dom, z, lambda a: target_q * float(np.linalg.norm(z - a)), tol
    )
    if found is not None:
        a, astar, val = found
        q = val / float(np.linalg.norm(z - a))
        if q > estimate:
            ordinal += 1
            entries.append((float(ordinal), q, pair(a, astar)))
            estimate = q
    return float(estimate), QuotientTrace(tuple(entries))


# ---------------------------------------------------------------------------
# near convexity / conv-domain criteria
# ---------------------------------------------------------------------------

def _quotient_schedule_run(
    op: OperatorSpec,
    z: Vector,
    p: float,
    lambda_schedule,
    dom: np.ndarray,
    tol: ToleranceConfig,
    wgrid: Grid,
):
    """Shared witness loop: for each lambda find (a, a* + lam*b*) violating
    monotone relatedness of (z, 0) to the perturbed graph, with the duality
    selection b* in J_p(a - z) enforced by fiber membership."""
    entries = []
    extra_witnesses = []
    missing = []
    schedule = sorted(float(lam) for lam in lambda_schedule)
    if any(lam <= 0 for lam in schedule):
        raise ValidationError("lambda schedule must be positive")
    search_dom = dom
    for lam in schedule:
        def needed(a, lam=lam):
            return lam * float(np.linalg.norm(a - z)) ** p

        found = _search_value_witness(op, search_dom, z, needed, tol)
        if found is None:
            # one widening/refining retry before giving up
            if not isinstance(op, GraphOp):
                try:
                    wider = wgrid.scaled(2.0, 1.0)
                    g2 = graph_sample(op, wider, tol)
                    search_dom = unique_domain_points(g2, tol)
                    found = _search_value_witness(op, search_dom, z, needed, tol)
                except ValidationError:
                    found = None
        if found is None:
            missing.append(lam)
            continue
        a, astar, val = found
        bstar = duality_point(p, z, a)
        if not membership(DualityMapOp(p, z), pair(a, bstar), tol):
            missing.append(lam)
            continue
        perturbed = perturb(op, lam, p, z)
        total = astar + lam * bstar
        violation = float(np.dot(z - a, total))
        if violation <= tol.eq_tol:
            missing.append(lam)
            continue
        if not membership(perturbed, pair(a, total), tol):
            missing.append(lam)
            continue
        quotient = val / float(np.linalg.norm(z - a))
        entries.append((lam, quotient, pair(a, astar)))
        extra_witnesses.append((f"violation_lambda_{lam:g}", violation))
    return entries, extra_witnesses, missing


def _trend_ok(values: list[float], tol: ToleranceConfig) -> bool:
    if not values:
        return False
    if values[-1] >= np.sqrt(tol.inf_threshold):
        return True
    return all(b > a for a, b in zip(values, values[1:]))


def near_convexity_certificate(
    op: OperatorSpec,
    z: Vector,
    p: float,
    lambda_schedule,
    wgrid: Grid,
    tol: ToleranceConfig = DEFAULT_TOL,
    strict: bool = False,
    probe_grid: Grid | None = None,
) -> Certificate:
    """For z off the sampled domain, certify that (z, 0) fails monotone
    relatedness to the perturbed graph at every scheduled lambda, with each
    quotient <z-a, a*>/||z-a|| exceeding lambda * alpha^(p-1).

    Pass additionally requires the quotient schedule to be unbounded-trending
    (strictly increasing, or final value past sqrt(inf_threshold)); the claim
    is budget-relative to the sampling grid."""
    name = "near_convexity"
    g = _surrogate_graph(op, wgrid, tol)
    z = as_vector(z, dim=g.dim)
    dom = unique_domain_points(g, tol)
    alpha = float(np.linalg.norm(dom - z, axis=1).min())
    if alpha <= tol.eq_tol:
        return not_applicable(
            name,
            "z lies within eq_tol of the sampled domain",
            [("domain_distance", alpha)],
        )
    entries, extras, missing = _quotient_schedule_run(
        op, z, p, lambda_schedule, dom, tol, wgrid
    )
    witnesses = [("alpha", alpha), ("p", float(p))]
    for lam, q, w in entries:
        witnesses.append((f"quotient_lambda_{lam:g}", q))
        witnesses.append((f"witness_lambda_{lam:g}", w))
    witnesses.extend(extras)
    bound_fail = [
        (lam, q) for lam, q, _ in entries if q <= lam * alpha ** (p - 1.0) - tol.eq_tol
    ]
    if strict:
        if probe_grid is None:
            raise ValidationError("strict mode needs a probe grid")
        lam0 = min(float(lam) for lam in lambda_schedule)
        surrogate_pairs = []
        for gp in g.pairs:
            bstar = duality_point(p, z, gp.primal)
            surrogate_pairs.append(pair(gp.primal, gp.dual + lam0 * bstar))
        surrogate = FiniteGraph(tuple(surrogate_pairs))
        evidence = maximality_probe(
            perturb(op, lam0, p, z), probe_grid, tol, surrogate=surrogate
        )
        witnesses.append(("maximality_evidence_count", float(len(evidence))))
    if missing:
        witnesses.insert(0, ("first_missing_lambda", float(missing[0])))
        return failed(name, f"no violation witness found for lambda={missing[0]:g}", witnesses)
    if bound_fail:
        lam, q = bound_fail[0]
        witnesses.insert(0, ("failing_quotient", q))
        return failed(
            name,
            f"quotient {q:.6g} at lambda={lam:g} does not exceed lambda*alpha^(p-1)",
            witnesses,
        )
    values = [q for _, q, _ in entries]
    if not _trend_ok(values, tol):
        witnesses.insert(0, ("final_quotient", values[-1]))
        return failed(name, "quotient schedule is not unbounded-trending", witnesses)
    return passed(
        name,
        "every scheduled lambda yields a non-relatedness witness with quotient "
        "above lambda*alpha^(p-1) (budget-relative)",
        witnesses,
    )


def conv_domain_certificate(
    op: OperatorSpec,
    z: Vector,
    p: float,
    lambda_schedule,
    wgrid: Grid,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> Certificate:
    """Hull-gated variant: z must clear the convex hull of the sampled domain.

    Also verifies the finite-value bound chain on probe duals: any probe
    (z, z*) with a finite sampled fitz value must satisfy
    sup <z-a,a*>/||z-a|| <= ||z*|| - r_emp over the same sample."""
    name = "conv_domain"
    g = _surrogate_graph(op, wgrid, tol)
    z = as_vector(z, dim=g.dim)
    dom = unique_domain_points(g, tol)
    hull = conv_hull(dom)
    hull_dist, _ = dist_to_polytope(z, hull, tol)
    if hull_dist <= tol.eq_tol:
        return not_applicable(
            name,
            "z lies within eq_tol of the sampled domain hull",
            [("hull_distance", hull_dist)],
        )
    entries, extras, missing = _quotient_schedule_run(
        op, z, p, lambda_schedule, dom, tol, wgrid
    )
    witnesses = [("hull_distance", hull_dist), ("p", float(p))]
    for lam, q, w in entries:
        witnesses.append((f"quotient_lambda_{lam:g}", q))
        witnesses.append((f"witness_lambda_{lam:g}", w))
    witnesses.extend(extras)

    # bound chain on finite probes
    diffs = z - g.primals
    dists = np.linalg.norm(diffs, axis=1)
    sup_pairs = float((np.einsum("ij,ij->i", diffs, g.duals) / dists).max())
    probes = [np.zeros(g.dim)]
    order = np.argsort(dists, kind="stable")
    probes.extend(g.duals[order[:3]])
    witnesses.append(("sup_quotient_sampled", sup_pairs))
    finite_probes = 0
    best_r_emp = None
    for zs in probes:
        fv = fitz_sampled(op, pair(z, zs), wgrid, tol, sample=g)
        if not is_finite(fv):
            continue
        r_emp = float((np.einsum("ij,ij->i", diffs, zs - g.duals) / dists).min())
        bound = float(np.linalg.norm(zs)) - r_emp + tol.eq_tol
        witnesses.append((f"probe_{finite_probes}_zstar", as_vector(zs)))
        witnesses.append((f"probe_{finite_probes}_r_emp", r_emp))
        finite_probes += 1
        if best_r_emp is None or r_emp > best_r_emp:
            best_r_emp = r_emp
        if sup_pairs > bound:
            witnesses.insert(0, ("bound_violation", sup_pairs - bound))
            return failed(
                name,
                "finite-probe bound chain violated (sup quotient exceeds ||z*|| - r)",
                witnesses,
            )
    if best_r_emp is not None:
        witnesses.append(("r_emp", best_r_emp))
    witnesses.append(("finite_probe_count", float(finite_probes)))

    if missing:
        witnesses.insert(0, ("first_missing_lambda", float(missing[0])))
        return failed(name, f"no violation witness found for lambda={missing[0]:g}", witnesses)
    bound_fail = [
        (lam, q)
        for lam, q, _ in entries
        if q <= lam * hull_dist ** (p - 1.0) - tol.eq_tol
    ]
    if bound_fail:
        lam, q = bound_fail[0]
        witnesses.insert(0, ("failing_quotient", q))
        return failed(
            name,
            f"quotient {q:.6g} at lambda={lam:g} does not clear the hull-distance bound",
            witnesses,
        )
    values = [q for _, q, _ in entries]
    if not _trend_ok(values, tol):
        witnesses.insert(0, ("final_quotient", values[-1]))
        return failed(name, "quotient schedule is not unbounded-trending", witnesses)
    return passed(
        name,
        "hull-gated witnesses found at every lambda; finite-probe bound chain holds",
        witnesses,
    )


# ---------------------------------------------------------------------------
# lower-bound and (BR) checks
# ---------------------------------------------------------------------------

def simons_lower_bound_check(
    source: Union[OperatorSpec, FiniteGraph],
    zpair: PairPoint,
    tol: ToleranceConfig = DEFAULT_TOL,
    wgrid: Grid | None = None,
) -> Certificate:
    """Empirical lower bound r_emp = min <z-a, z*-a*>/||z-a|| over the graph,
    requiring a finite fitz value at zpair and inf ||z-a|| > 0.

    For sampled operators the bound must be stable under halving the grid
    spacing (relative change at most 10%); finite graphs are exact."""
    name = "simons_lower_bound"
    sampled = not isinstance(source, FiniteGraph)
    if sampled:
        if wgrid is None:
            raise ValidationError("sampled lower-bound check needs a wgrid")
        g = graph_sample(source, wgrid, tol)
        fv = fitz_sampled(source, zpair, wgrid, tol, sample=g)
    else:
        g = source
        fv = None
    if sampled and not is_finite(fv):
        return not_applicable(
            name,
            "fitz value at zpair is infinite-suspected",
            [("crossed_threshold", fv.crossed_threshold), ("witness", fv.witness)],
        )
    z, zs = zpair.primal, zpair.dual
    dists = np.linalg.norm(g.primals - z, axis=1)
    inf_f = float(dists.min())
    if inf_f <= tol.eq_tol:
        return not_applicable(
            name, "inf ||z-a|| is not bounded away from zero", [("inf_f", inf_f)]
        )
    r_vals = np.einsum("ij,ij->i", z - g.primals, zs - g.duals) / dists
    r_emp = float(r_vals.min())
    witnesses = [("r_emp", r_emp), ("inf_f", inf_f)]
    if sampled:
        try:
            refined = Grid(wgrid.lower, wgrid.upper, wgrid.spacing / 2.0, cap=wgrid.cap)
            g2 = graph_sample(source, refined, tol)
            d2 = np.linalg.norm(g2.primals - z, axis=1)
            mask = d2 > tol.eq_tol
            r2 = float(
                (np.einsum("ij,ij->i", z - g2.primals[mask], zs - g2.duals[mask]) / d2[mask]).min()
            )
            change = abs(r_emp - r2) / max(1.0, abs(r_emp))
            witnesses.append(("refined_r_emp", r2))
            witnesses.append(("relative_change", change))
            if change > 0.10:
                return failed(
                    name,
                    f"lower bound unstable under refinement (change {change:.2%})",
                    witnesses,
                )
        except ValidationError:
            witnesses.append(("stability_skipped_budget", 1.0))
    return passed(name, "finite stable lower bound r_emp recorded", witnesses)


def br_check(
    op: OperatorSpec,
    xpair: PairPoint,
    alpha: float,
    beta: float,
    wgrid: Grid | None = None,
    tol: ToleranceConfig = DEFAULT_TOL,
    sample: FiniteGraph | None = None,
) -> Certificate:
    """Approximate-graph-point check: when inf <x-a, x*-a*> > -alpha*beta, a
    graph point within (alpha, beta) of (x, x*) must exist.

    The search tries the sampled graph first, then the step-scaled resolvent
    point at ratio alpha/beta (a true graph point realizing the bound)."""
    name = "br"
    if alpha <= 0 or beta <= 0:
        raise ValidationError("br check needs alpha, beta > 0")
    if isinstance(op, GraphOp):
        g = op.graph
        analytic: list[PairPoint] = []
    else:
        if sample is not None:
            g = sample
        elif wgrid is not None:
            g = graph_sample(op, wgrid, tol)
        else:
            raise ValidationError("sampled br check needs a wgrid or sample")
        analytic = []
        x, xs = xpair.primal, xpair.dual
        for lam in (alpha / beta, 1.0):
            try:
                b = resolvent(op, x + lam * xs, tol, step=lam)
                bs = (x + lam * xs - b) / lam
                analytic.append(pair(b, bs))
            except (NotMaximalError, NoClosedFormError):
                pass
    x, xs = xpair.primal, xpair.dual
    inf_est = float(relatedness_products(xpair, g).min())
    for cand in analytic:
        inf_est = min(
            inf_est, float(np.dot(x - cand.primal, xs - cand.dual))
        )
    witnesses = [("inf_product", inf_est), ("alpha", float(alpha)), ("beta", float(beta))]
    if inf_est <= -alpha * beta + tol.eq_tol:
        return not_applicable(
            name,
            "hypothesis fails: inf <x-a, x*-a*> does not exceed -alpha*beta",
            witnesses,
        )

    def qualifies(cand: PairPoint) -> bool:
        return (
            float(np.linalg.norm(x - cand.primal)) < alpha
            and float(np.linalg.norm(xs - cand.dual)) < beta
        )

    best: Optional[PairPoint] = None
    best_score = np.inf
    for cand in list(g.pairs) + analytic:
        score = max(
            float(np.linalg.norm(x - cand.primal)) / alpha,
            float(np.linalg.norm(xs - cand.dual)) / beta,
        )
        if score < best_score:
            best, best_score = cand, score
    if best is not None and qualifies(best):
        witnesses.insert(0, ("witness_pair", best))
        witnesses.append(("primal_distance", float(np.linalg.norm(x - best.primal))))
        witnesses.append(("dual_distance", float(np.linalg.norm(xs - best.dual))))
        return passed(name, "approximate graph point found within (alpha, beta)", witnesses)
    witnesses.insert(0, ("best_near_miss", best))
    witnesses.append(("near_miss_score", best_score))
    return failed(name, "no graph point within (alpha, beta) of the reference pair", witnesses)


# ---------------------------------------------------------------------------
# blow-up witness sequence
# ---------------------------------------------------------------------------

def blowup_witness_sequence(
    op: OperatorSpec,
    z: Vector,
    n_schedule,
    wgrid: Grid,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> tuple[QuotientTrace, Certificate]:
    """Separation-driven divergence: with (y0*, delta) separating z from the
    sampled-domain hull, each n must admit a graph point (b_n, b_n*) whose
    product <z-b_n, b_n*> exceeds n * <z-b_n, y0*> (hence n*delta)."""
    name = "blowup_witness"
    g = _surrogate_graph(op, wgrid, tol)
    z = as_vector(z, dim=g.dim)
    dom = unique_domain_points(g, tol)
    hull = conv_hull(dom)
    try:
        y0, delta = separate(z, hull, tol)
    except NotSeparableError:
        hull_dist = dist_to_polytope(z, hull, tol)[0]
        return (
            QuotientTrace(()),
            not_applicable(
                name,
                "z is not separable from the sampled-domain hull",
                [("hull_distance", hull_dist)],
            ),
        )
    entries = []
    witnesses = [("delta", float(delta)), ("y0star", y0)]
    missing = []
    for n in sorted(float(v) for v in n_schedule):
        if n <= 0:
            raise ValidationError("n schedule must be positive")

        def needed(b, n=n):
            return n * float(np.dot(z - b, y0))

        found = _search_value_witness(op, dom, z, needed, tol)
        if found is None:
            missing.append(n)
            continue
        b, bstar, val = found
        # non-relatedness to (z, n*y0): <z-b, n*y0 - b*> < 0 by construction
        assert val > n * float(np.dot(z - b, y0))
        if val <= n * delta - tol.eq_tol:
            missing.append(n)
            continue
        entries.append((n, val, pair(b, bstar)))
        witnesses.append((f"product_n_{n:g}", val))
        witnesses.append((f"witness_n_{n:g}", pair(b, bstar)))
    trace = QuotientTrace(tuple(entries))
    if missing:
        witnesses.insert(0, ("first_missing_n", float(missing[0])))
        return trace, failed(
            name, f"no blow-up witness found for n={missing[0]:g}", witnesses
        )
    return trace, passed(
        name,
        "every scheduled n admits a witness with product above n*delta",
        witnesses,
    )


# ---------------------------------------------------------------------------
# domain-projection equality experiment
# ---------------------------------------------------------------------------

def theorem36_experiment(
    op: OperatorSpec,
    xgrid: Grid,
    tol: ToleranceConfig = DEFAULT_TOL,
    wgrid: Grid | None = None,
) -> tuple[float, Certificate]:
    """Compare the projected fitz domain against the sampled-domain hull on a
    grid; pass when the Hausdorff distance is within twice the grid spacing."""
    name = "theorem36"
    if wgrid is None:
        wgrid = _default_wgrid(op, xgrid)
    g = graph_sample(op, wgrid, tol)
    scan = fitz_domain_projection(op, xgrid, tol, wgrid=wgrid, sample=g)
    dom = unique_domain_points(g, tol)
    hull = conv_hull(dom)
    nodes = xgrid.nodes()
    hull_nodes = nodes[hull.contains_batch(nodes, tol.eq_tol)]
    witnesses = [
        ("grid_spacing", xgrid.spacing),
        ("member_count", float(len(scan.member_points))),
        ("hull_node_count", float(len(hull_nodes))),
    ]
    if len(scan.member_points) == 0 or len(hull_nodes) == 0:
        return np.inf, failed(
            name, "domain does not intersect the grid box", witnesses
        )
    dist = hausdorff(scan.member_points, hull_nodes)
    witnesses.insert(0, ("hausdorff_distance", dist))
    limit = 2.0 * xgrid.spacing + tol.eq_tol
    if dist <= limit:
        return dist, passed(
            name,
            "projected fitz domain matches the sampled-domain hull within "
            "twice the grid spacing",
            witnesses,
        )
    return dist, failed(
        name,
        f"hausdorff distance {dist:.3e} exceeds twice the grid spacing",
        witnesses,
    )
