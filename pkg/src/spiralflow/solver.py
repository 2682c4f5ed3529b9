"""Finite-element minimization of the truncated flow energy.

The stream function is split as psi = psi0 + u where psi0 is the radial
background (multivalued angle part plus swirl part) and u is a
single-valued correction, piecewise linear on the triangulation.  The
discrete energy, per triangle of area A with constant total gradient
w = grad(u) + G0,

    I(u) = sum_T A [ F(|w|^2) - F(|G0|^2) - 2 F'(|G0|^2) G0 . grad(u) ]

is normalized so I(0) = 0 and the linearization at u = 0 vanishes for an
exactly radial discrete background.  F is the truncated flux potential,
so I is smooth and uniformly convex on the whole space and Newton
iteration with backtracking converges globally.

Boundary handling: on the body, u takes the (single-valued) negative of
the background swirl stream, which makes the total stream function obey
the porous-inflow condition; on the truncation circle either u = 0 is
pinned ("zero") or all outer nodes share one floating constant ("gauge").
The gauge variant lets the discrete far field pick its own additive
constant and suppresses the spurious logarithmic mode a hard pin
introduces at finite truncation radius.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, InternalConsistencyError, NonConvergenceError


def _shape_gradients(points, triangles, areas):
    """P1 shape-function gradients, (n_tri, 3, 2)."""
    p = points[triangles]
    out = np.empty((triangles.shape[0], 3, 2))
    for k in range(3):
        a = p[:, (k + 1) % 3]
        b = p[:, (k + 2) % 3]
        out[:, k, 0] = a[:, 1] - b[:, 1]
        out[:, k, 1] = b[:, 0] - a[:, 0]
    return out / (2.0 * areas)[:, None, None]


def _rot(w):
    """Rotate planar vectors (a, b) -> (b, -a); maps grad(psi) to rho*velocity."""
    return np.stack([w[..., 1], -w[..., 0]], axis=-1)


def _project_outside_unit_circle(points):
    """Push sample points that dip inside r = 1 back onto the circle.

    Chord midpoints of a body ring at radius one sit O(h^2) inside the
    circle, where the background refuses to evaluate; radial projection
    perturbs the sample by that same order, so no rule loses accuracy.
    """
    r = np.linalg.norm(points, axis=-1, keepdims=True)
    return np.where(r < 1.0, points / np.maximum(r, 1e-300), points)


def _check_finite(contrib, what):
    """Reject NaN/inf element contributions, naming the first bad triangle."""
    flat = np.isfinite(contrib.reshape(contrib.shape[0], -1)).all(axis=1)
    if not flat.all():
        t = int(np.argmin(flat))
        raise InternalConsistencyError(
            f"non-finite {what} contribution on triangle {t}"
        )


class FlowProblem:
    """Discretized energy for one gas model, background, and mesh."""

    def __init__(
        self,
        gas,
        background,
        mesh,
        far_field="gauge",
        newton_tol=1e-9,
        max_iterations=50,
    ):
        if far_field not in ("gauge", "zero"):
            raise ConfigError("far_field", f"unknown far-field policy {far_field!r}")
        if not (newton_tol > 0.0):
            raise ConfigError("newton_tol", "tolerance must be positive")
        if max_iterations < 1:
            raise ConfigError("max_iterations", "need at least one iteration")
        self.gas = gas
        self.background = background
        self.mesh = mesh
        self.far_field = far_field
        self.newton_tol = float(newton_tol)
        self.max_iterations = int(max_iterations)

        self.areas = mesh.areas
        self.shape_grads = _shape_gradients(mesh.points, mesh.triangles, self.areas)
        self.centroids = mesh.centroids
        self.g0 = background.stream_gradient(self.centroids)
        self.s0 = np.sum(self.g0**2, axis=-1)
        f0, fp0, _ = gas.flux_eval(self.s0)
        self._f_s0 = f0
        self._fp_s0 = fp0

        n = mesh.n_points
        body = mesh.body_nodes
        outer = mesh.outer_nodes
        self.dirichlet = np.zeros(n)
        r_body = np.hypot(*mesh.points[body].T)
        self.dirichlet[body] = -background.swirl_stream(r_body)
        fixed = np.zeros(n, dtype=bool)
        fixed[body] = True
        interior = np.arange(n)[~fixed]
        interior = interior[~np.isin(interior, outer)]
        self.interior_nodes = interior
        if far_field == "zero":
            self.n_reduced = interior.size
            rows = interior
            cols = np.arange(interior.size)
            vals = np.ones(interior.size)
        else:
            self.n_reduced = interior.size + 1
            rows = np.concatenate([interior, outer])
            cols = np.concatenate(
                [np.arange(interior.size), np.full(outer.size, interior.size)]
            )
            vals = np.ones(rows.size)
        self.restriction = sp.csr_matrix(
            (vals, (rows, cols)), shape=(n, self.n_reduced)
        )
        lap = self._assemble_matrix(np.broadcast_to(np.eye(2), (len(self.areas), 2, 2)))
        lap_red = (self.restriction.T @ lap @ self.restriction).tocsr()
        self.laplacian_reduced = lap_red
        self.test_norms = np.sqrt(np.maximum(lap_red.diagonal(), 1e-300))
        self.ellipticity = gas.ellipticity_bounds()

    # ------------------------------------------------------------------

    def full_vector(self, u_red):
        return self.restriction @ u_red + self.dirichlet

    def u_gradients(self, u_full):
        """Per-triangle gradient of the P1 field, (n_tri, 2)."""
        vals = u_full[self.mesh.triangles]
        return np.einsum("ti,tia->ta", vals, self.shape_grads)

    def total_gradients(self, u_full):
        return self.u_gradients(u_full) + self.g0

    def energy(self, u_red):
        u = self.full_vector(u_red)
        du = self.u_gradients(u)
        w = du + self.g0
        s = np.sum(w**2, axis=-1)
        f, _, _ = self.gas.flux_eval(s)
        dens = f - self._f_s0 - 2.0 * self._fp_s0 * np.sum(self.g0 * du, axis=-1)
        contrib = self.areas * dens
        _check_finite(contrib, "energy")
        return float(np.sum(contrib))

    def gradient_full(self, u_full, include_background_correction=True):
        """Nodal energy gradient in the full space.

        With the correction switched off this is the plain weak form of
        the flow equation tested against every hat function, background
        term included; the difference is the discrete radial defect.
        """
        w = self.total_gradients(u_full)
        s = np.sum(w**2, axis=-1)
        _, fp, _ = self.gas.flux_eval(s)
        flux = fp[:, None] * w
        if include_background_correction:
            flux = flux - self._fp_s0[:, None] * self.g0
        contrib = 2.0 * self.areas[:, None] * np.einsum(
            "ta,tia->ti", flux, self.shape_grads
        )
        _check_finite(contrib, "gradient")
        return np.bincount(
            self.mesh.triangles.ravel(),
            weights=contrib.ravel(),
            minlength=self.mesh.n_points,
        )

    def gradient(self, u_red):
        return self.restriction.T @ self.gradient_full(self.full_vector(u_red))

    def _assemble_matrix(self, coef):
        B = self.shape_grads
        cb = np.einsum("tab,tjb->tja", coef, B)
        k_loc = np.einsum("tia,tja->tij", B, cb) * self.areas[:, None, None]
        _check_finite(k_loc, "stiffness")
        t = self.mesh.triangles
        rows = np.repeat(t, 3, axis=1).ravel()
        cols = np.tile(t, 3).ravel()
        n = self.mesh.n_points
        return sp.coo_matrix((k_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    def hessian(self, u_red):
        u = self.full_vector(u_red)
        w = self.total_gradients(u)
        coef = self.gas.coefficient_matrix(w)
        full = self._assemble_matrix(2.0 * coef)
        return (self.restriction.T @ full @ self.restriction).tocsc()

    def dirichlet_seminorm_sq(self, u_full):
        du = self.u_gradients(u_full)
        return float(np.sum(self.areas * np.sum(du**2, axis=-1)))


def make_setup(
    gas, background, mesh, far_field="gauge", newton_tol=1e-9, max_iterations=50
):
    """Bind gas model, background, and mesh into a solvable problem."""
    return FlowProblem(
        gas,
        background,
        mesh,
        far_field=far_field,
        newton_tol=newton_tol,
        max_iterations=max_iterations,
    )


@dataclass
class FlowSolution:
    """Converged minimizer plus the iteration record."""

    problem: FlowProblem
    u_reduced: np.ndarray
    u_full: np.ndarray
    newton_iterations: int
    gradient_norm: float
    energy: float
    residual_history: list = field(default_factory=list)
    energy_history: list = field(default_factory=list)

    @property
    def total_gradient(self):
        return self.problem.total_gradients(self.u_full)

    @property
    def mass_flux_sq(self):
        return np.sum(self.total_gradient**2, axis=-1)

    def reconstructed_density(self):
        return self.problem.gas.truncated_density(self.mass_flux_sq)

    def reconstructed_speed(self):
        return np.sqrt(self.mass_flux_sq) / self.reconstructed_density()

    def max_mass_flux_sq(self):
        return float(np.max(self.mass_flux_sq))

    def truncation_active(self):
        """True when some triangle reaches the blended part of the flux law."""
        return self.max_mass_flux_sq() >= self.problem.gas.s_blend_lo


def solve(problem, newton_tol=None, max_iterations=None, initial=None):
    """Damped Newton minimization of the discrete energy.

    Stops when the euclidean norm of the reduced gradient falls below
    newton_tol * (1 + |I(u)|); tolerance and iteration budget default to
    the values carried by the problem.  The convexity of the truncated
    energy makes the iteration globally convergent, so exhausting the
    budget raises.
    """
    if newton_tol is None:
        newton_tol = problem.newton_tol
    if max_iterations is None:
        max_iterations = problem.max_iterations
    u = np.zeros(problem.n_reduced) if initial is None else np.asarray(initial, float).copy()
    if u.shape != (problem.n_reduced,):
        raise ConfigError("initial", "initial iterate has the wrong size")
    history = []
    energies = []
    for it in range(max_iterations + 1):
        g = problem.gradient(u)
        gnorm = float(np.linalg.norm(g))
        energy = problem.energy(u)
        history.append(gnorm)
        energies.append(energy)
        if gnorm <= newton_tol * (1.0 + abs(energy)):
            return FlowSolution(
                problem=problem,
                u_reduced=u,
                u_full=problem.full_vector(u),
                newton_iterations=it,
                gradient_norm=gnorm,
                energy=energy,
                residual_history=history,
                energy_history=energies,
            )
        if it == max_iterations:
            break
        h = problem.hessian(u)
        try:
            step = spla.splu(h).solve(-g)
        except RuntimeError as exc:  # pragma: no cover - SPD by construction
            raise NonConvergenceError(f"linear solve failed: {exc}", iterate=u)
        slope = float(g @ step)
        t = 1.0
        while t >= 2.0**-30:
            if problem.energy(u + t * step) <= energy + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            raise NonConvergenceError(
                "line search failed to reduce the energy",
                iterate=u,
                history=history,
            )
        u = u + t * step
    raise NonConvergenceError(
        f"Newton did not reach tol {newton_tol:g} in {max_iterations} iterations",
        iterate=u,
        history=history,
    )


# ----------------------------------------------------------------------
# post-solve diagnostics


@dataclass
class FlowFields:
    """Per-triangle physical fields reconstructed from the stream function."""

    density: np.ndarray
    velocity: np.ndarray  # (n_tri, 2)
    speed: np.ndarray
    mach: np.ndarray
    supersonic: np.ndarray  # bool, speed >= sound speed


def recover_fields(sol):
    """Density, velocity, speed, and Mach number on each triangle.

    The momentum rho*u is the rotated stream gradient, so |grad psi| must
    equal rho*q exactly; that identity is asserted here as an internal
    check before dividing out the density.
    """
    w = sol.total_gradient
    flux = np.sqrt(np.sum(w**2, axis=-1))
    rho = sol.problem.gas.truncated_density(flux**2)
    vel = _rot(w) / rho[:, None]
    speed = flux / rho
    if not np.allclose(rho * speed, flux, rtol=1e-12, atol=1e-14):
        raise InternalConsistencyError("density * speed != |grad psi|")
    gamma = sol.problem.gas.gamma
    mach = speed / rho ** (0.5 * (gamma - 1.0))
    return FlowFields(
        density=rho,
        velocity=vel,
        speed=speed,
        mach=mach,
        supersonic=speed >= 1.0,
    )


def weak_residuals(sol, include_background=False):
    """Normalized irrotationality and mass weak residuals.

    Each is max_v |form(v)| / |v|_H1 over interior hat test functions.
    By default the radial background term is subtracted from both forms;
    it cancels analytically, and subtracting it discretely isolates the
    solver error from the quadrature defect of the background.  With
    include_background=True the raw forms are reported instead (the
    far-field gauge function is excluded either way: against it the raw
    form measures the physical source flux, not an error).
    """
    pr = sol.problem
    ni = pr.interior_nodes.size
    g_irr = pr.gradient_full(
        sol.u_full, include_background_correction=not include_background
    )
    irr = (pr.restriction.T @ g_irr)[:ni]
    irrot = float(np.max(np.abs(irr) / (2.0 * pr.test_norms[:ni])))

    w = pr.u_gradients(sol.u_full)
    if include_background:
        w = w + pr.g0
    flow = _rot(w)
    contrib = pr.areas[:, None] * np.einsum("ta,tia->ti", flow, pr.shape_grads)
    m_full = np.bincount(
        pr.mesh.triangles.ravel(), weights=contrib.ravel(), minlength=pr.mesh.n_points
    )
    m = (pr.restriction.T @ m_full)[:ni]
    mass = float(np.max(np.abs(m) / pr.test_norms[:ni]))
    return irrot, mass


def boundary_flux(sol):
    """Mass flux out through the body boundary, by edge-midpoint quadrature.

    The correction gradient is taken from the adjacent triangle (exact
    for a P1 field) and the background gradient is evaluated at the edge
    midpoint, so the rule is second order along the polygonal boundary.
    The continuum value is 2 pi rho0 kappa1 regardless of the body shape.
    """
    pr = sol.problem
    mesh = pr.mesh
    body_edges = mesh.body_edge_list()
    edge_sets = {frozenset(e): None for e in map(tuple, body_edges)}
    for t_idx, tri in enumerate(mesh.triangles):
        for k in range(3):
            key = frozenset((int(tri[k]), int(tri[(k + 1) % 3])))
            if key in edge_sets and edge_sets[key] is None:
                edge_sets[key] = t_idx
    du = pr.u_gradients(sol.u_full)
    flux = 0.0
    for a, b in body_edges:
        t_idx = edge_sets[frozenset((int(a), int(b)))]
        mid = _project_outside_unit_circle(0.5 * (mesh.points[a] + mesh.points[b]))
        e = mesh.points[b] - mesh.points[a]
        rho_u = _rot(du[t_idx] + pr.background.stream_gradient(mid))
        flux += rho_u[0] * e[1] - rho_u[1] * e[0]
    return float(flux)


@dataclass
class DecayReport:
    """Far-field decay of the correction gradient, ring by ring."""

    exact_match: bool
    slope: float | None
    ring_radii: np.ndarray
    ring_maxima: np.ndarray


def decay_report(sol, floor=1e-13):
    """Log-log decay rate of max |grad u| over geometric radius rings.

    Rings double in radius from twice the body size to half the
    truncation radius.  If every ring maximum sits below floor the
    correction vanishes identically and no rate is fitted.
    """
    pr = sol.problem
    mesh = pr.mesh
    body_r = np.max(np.hypot(*mesh.points[mesh.body_nodes].T))
    outer_r = np.max(np.hypot(*mesh.points[mesh.outer_nodes].T))
    lo = 2.0 * body_r
    hi = outer_r / 2.0
    edges = [lo]
    while edges[-1] * 2.0 < hi:
        edges.append(edges[-1] * 2.0)
    edges.append(hi)
    edges = np.array(edges)
    r_c = np.hypot(*pr.centroids.T)
    mag = np.linalg.norm(pr.u_gradients(sol.u_full), axis=-1)
    mids, maxima = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (r_c >= a) & (r_c < b)
        if np.any(sel):
            mids.append(np.sqrt(a * b))
            maxima.append(float(np.max(mag[sel])))
    mids = np.array(mids)
    maxima = np.array(maxima)
    if np.all(maxima <= floor):
        return DecayReport(True, None, mids, maxima)
    slope = float(np.polyfit(np.log(mids), np.log(np.maximum(maxima, 1e-300)), 1)[0])
    return DecayReport(False, slope, mids, maxima)


def background_gradient_error(sol):
    """Relative L2 distance between the discrete and radial gradients.

    The radial gradient is sampled with the 3-point edge-midpoint rule,
    which is exact for quadratics, so for a circular body (where the
    radial flow solves the problem exactly) this measures pure
    interpolation error and decays like h.
    """
    pr = sol.problem
    mesh = pr.mesh
    p = mesh.corners
    mids = _project_outside_unit_circle(0.5 * (p + np.roll(p, -1, axis=1)))
    exact = pr.background.stream_gradient(mids.reshape(-1, 2)).reshape(mids.shape)
    wh = sol.total_gradient[:, None, :]
    werr = np.sum((wh - exact) ** 2, axis=-1)
    wref = np.sum(exact**2, axis=-1)
    err = np.sum(pr.areas / 3.0 * np.sum(werr, axis=-1))
    ref = np.sum(pr.areas / 3.0 * np.sum(wref, axis=-1))
    return float(np.sqrt(err / ref))


def convexity_gap(problem, u_a, u_b):
    """Energy convexity margin for two reduced iterates.

    Returns (gap, bound): gap = I(a) + I(b) - 2 I(mid) and the uniform
    convexity prediction bound = (lam/2) |grad(a - b)|^2; gap >= bound up
    to roundoff for the truncated energy.
    """
    mid = 0.5 * (u_a + u_b)
    gap = problem.energy(u_a) + problem.energy(u_b) - 2.0 * problem.energy(mid)
    diff = problem.restriction @ (u_a - u_b)
    bound = 0.5 * problem.ellipticity.lam * problem.dirichlet_seminorm_sq(diff)
    return float(gap), float(bound)
