from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from .balls import dirichlet_lower_bound
from .config import Settings
from .mesh import (
    DomainSpec,
    InvalidDomain,
    Mesh,
    SolverError,
    build_cylinder,
    grid_for,
    owner_groups,
)
from .targets import Loop, TargetModel
from .topology import (
    BoundaryTopology,
    ClassId,
    TopologyError,
    is_topological_resolution,
    singular_energy_of_boundary,
)

LOGGER = logging.getLogger(__name__)

DEFAULT_RHO_SCHEDULE = tuple(0.2 * 2.0**-j for j in range(5))
DEFAULT_TIMES = (0.5, 1.0, 2.0, 4.0, 8.0)
SLOPE_WARNING = 0.05
FLUX_QUADRATURE = 256


class IncompatibleTopology(SolverError):
    pass


class NonConvergence(SolverError):
    pass


class MonotonicityViolation(SolverError):
    pass


class CircleOutOfDomain(SolverError):
    pass


class NonHomotopicLoops(SolverError):
    pass


class InvalidSchedule(SolverError):
    pass


class HolonomyMismatch(SolverError):
    pass


@dataclass(slots=True)
class RelaxConfig:
    tol: float = 1e-10
    max_sweeps: int = 20000
    restarts: int = 3
    omega: Optional[float] = None
    seed: int = 0
    threads: int = 1
    phase_samples: int = 32
    check_holonomy: bool = True
    perturbation: float = 0.3
    monotonicity_slack: float = 1e-10

    @classmethod
    def from_settings(cls, settings: Settings, **overrides) -> "RelaxConfig":
        base = cls(
            tol=settings.tol,
            max_sweeps=settings.max_sweeps,
            restarts=settings.restarts,
            omega=settings.omega,
            seed=settings.seed,
            threads=settings.threads,
            phase_samples=settings.phase_samples,
            check_holonomy=settings.check_holonomy,
        )
        return replace(base, **{k: v for k, v in overrides.items() if v is not None})


@dataclass(eq=False)
class FieldState:
    """Discrete map on a mesh: one representative per vertex, boundary loops by owner."""

    mesh: Mesh
    target: TargetModel
    values: np.ndarray
    loops: Dict[int, Loop]
    expected: Tuple[Optional[ClassId], ...] = ()
    energy: float = math.nan
    history: List[float] = field(default_factory=list)
    sweeps: int = 0
    converged: bool = False

    @property
    def gauges(self) -> Optional[np.ndarray]:
        edges = self.mesh.edges
        return self.target.refresh_gauges(self.values[edges[:, 0]], self.values[edges[:, 1]])

    def apply_boundary(self) -> None:
        for owner, nodes in owner_groups(self.mesh):
            self.values[nodes] = self.loops[owner](self.mesh.angles[nodes])

    def copy(self) -> "FieldState":
        return replace(self, values=self.values.copy(), history=list(self.history))


@dataclass(frozen=True)
class _ColourBlock:
    nodes: np.ndarray
    neighbours: np.ndarray
    edges: np.ndarray
    reversed: np.ndarray
    gather: sparse.csr_matrix


def _colour_blocks(mesh: Mesh) -> Tuple[_ColourBlock, ...]:
    cached = mesh.cache.get("blocks")
    if cached is not None:
        return cached
    count = len(mesh.edges)
    p, q = mesh.edges[:, 0], mesh.edges[:, 1]
    src = np.r_[p, q]
    nbr = np.r_[q, p]
    eid = np.r_[np.arange(count), np.arange(count)]
    rev = np.r_[np.zeros(count, dtype=bool), np.ones(count, dtype=bool)]
    weight = np.r_[mesh.weights, mesh.weights]
    position = np.full(mesh.size, -1, dtype=np.int64)
    blocks = []
    for nodes in mesh.colors:
        position[:] = -1
        position[nodes] = np.arange(len(nodes))
        sel = position[src] >= 0
        width = int(np.count_nonzero(sel))
        gather = sparse.csr_matrix(
            (weight[sel], (position[src[sel]], np.arange(width))), shape=(len(nodes), width)
        )
        blocks.append(_ColourBlock(nodes, nbr[sel], eid[sel], rev[sel], gather))
    mesh.cache["blocks"] = tuple(blocks)
    return mesh.cache["blocks"]


def auto_omega(mesh: Mesh) -> float:
    return float(np.clip(2.0 / (1.0 + math.pi * mesh.h / mesh.diameter), 1.0, 1.95))


def _edge_energy(mesh: Mesh, target: TargetModel, values: np.ndarray, gauges: Optional[np.ndarray]) -> float:
    up = values[mesh.edges[:, 0]]
    uq = values[mesh.edges[:, 1]]
    return 0.5 * float(np.dot(mesh.weights, target.edge_distance2(up, uq, gauges)))


def discrete_energy(state: FieldState) -> float:
    """½ Σ_e w_e · min_γ d(u_p, u_q·γ)², gauges refreshed to the minimum."""
    return _edge_energy(state.mesh, state.target, state.values, state.gauges)


def _sweep(blocks: Sequence[_ColourBlock], target: TargetModel, values: np.ndarray, gauges: Optional[np.ndarray], omega: float) -> None:
    for block in blocks:
        neighbours = values[block.neighbours]
        local_gauges = None
        if gauges is not None:
            local_gauges = gauges[block.edges]
            local_gauges = np.where(block.reversed, target.inverse_gauges(local_gauges), local_gauges)
        aggregate = block.gather @ target.features(neighbours, local_gauges)
        values[block.nodes] = target.local_update(aggregate, values[block.nodes], omega)


def check_holonomy(state: FieldState) -> None:
    for idx, (ring, expected) in enumerate(zip(state.mesh.rings, state.expected)):
        if ring is None or expected is None:
            continue
        found = state.target.loop_class(state.values[ring])
        if found != expected:
            raise HolonomyMismatch(
                f"Field around singularity {idx} has class {found!r}, expected {expected!r}"
            )


def relax(state: FieldState, config: RelaxConfig) -> FieldState:
    """Nonlinear Gauss–Seidel with over-relaxation along geodesics, one colour at a time."""
    mesh, target = state.mesh, state.target
    result = state.copy()
    values = result.values
    omega = config.omega if config.omega is not None else auto_omega(mesh)
    blocks = _colour_blocks(mesh)
    edges = mesh.edges

    gauges = target.refresh_gauges(values[edges[:, 0]], values[edges[:, 1]])
    energy = _edge_energy(mesh, target, values, gauges)
    history = [energy]
    decrease = math.inf
    converged = False
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        _sweep(blocks, target, values, gauges, omega)
        gauges = target.refresh_gauges(values[edges[:, 0]], values[edges[:, 1]])
        current = _edge_energy(mesh, target, values, gauges)
        if current > energy + config.monotonicity_slack * max(1.0, abs(energy)):
            raise MonotonicityViolation(f"Energy rose from {energy:.15g} to {current:.15g} at sweep {sweeps}")
        decrease = (energy - current) / energy if energy > 0 else 0.0
        history.append(current)
        energy = current
        if sweeps % 100 == 0:
            LOGGER.debug("Sweep %s: energy=%.12g decrease=%.3g", sweeps, energy, decrease)
        if decrease < config.tol:
            converged = True
            break
    if not converged and decrease > 100.0 * config.tol:
        raise NonConvergence(
            f"No convergence after {config.max_sweeps} sweeps (last relative decrease {decrease:.3g})"
        )
    result.energy = energy
    result.history = history
    result.sweeps = sweeps
    result.converged = converged
    if config.check_holonomy:
        check_holonomy(result)
    return result


def loop_class_id(loop: Loop, samples: int = 256) -> ClassId:
    if loop.function is None:
        return loop.homotopy_class.class_id
    return loop.target.loop_class(loop.sample(samples))


def initial_state(domain: DomainSpec, mesh: Mesh, outer: Loop, loops: Sequence[Loop]) -> FieldState:
    """Boundary data set exactly; free vertices blend the boundary loops transported along rays."""
    target = outer.target
    owners: Dict[int, Loop] = {0: outer}
    owners.update({idx + 1: loop for idx, loop in enumerate(loops)})
    values = np.zeros((mesh.size, target.rep_dim))
    state = FieldState(
        mesh=mesh,
        target=target,
        values=values,
        loops=owners,
        expected=tuple(loop_class_id(loop) for loop in loops),
    )
    state.apply_boundary()
    free = mesh.free
    points = mesh.points[free]
    origin = domain.origin
    stacks = [outer(np.arctan2(points[:, 1] - origin[1], points[:, 0] - origin[0]))]
    weights = [1.0 / (domain.boundary_distance(points) + mesh.h) ** 2]
    for center, loop in zip(domain.centers, loops):
        offset = points - center
        stacks.append(loop(np.arctan2(offset[:, 1], offset[:, 0])))
        gap = np.maximum(np.linalg.norm(offset, axis=1) - domain.rho, mesh.h)
        weights.append(1.0 / gap**2)
    values[free] = target.blend(stacks, np.stack(weights, axis=1))
    return state


def _perturbed(state: FieldState, seed: int, start: int, amplitude: float) -> FieldState:
    if start == 0:
        return state.copy()
    rng = np.random.default_rng([seed, start])
    result = state.copy()
    free = state.mesh.free
    noise = amplitude * rng.standard_normal((len(free), state.target.rep_dim))
    result.values[free] = state.target.project(result.values[free] + noise)
    return result


def minimise(state: FieldState, config: RelaxConfig) -> FieldState:
    """Multi-start relaxation; start 0 is the given state, later starts add seeded noise."""
    starts = [_perturbed(state, config.seed, k, config.perturbation) for k in range(config.restarts)]

    def run(start: FieldState) -> Optional[FieldState]:
        try:
            return relax(start, config)
        except (NonConvergence, MonotonicityViolation, HolonomyMismatch) as exc:
            LOGGER.warning("Relaxation start discarded: %s", exc)
            return None

    if config.threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(start) for start in starts]
    for idx, result in enumerate(results):
        if result is not None:
            LOGGER.debug("Start %s: energy=%.12g after %s sweeps", idx, result.energy, result.sweeps)
    finished = [r for r in results if r is not None]
    if not finished:
        raise NonConvergence(f"All {len(starts)} relaxation starts failed")
    return min(finished, key=lambda r: r.energy)


def _resolve_loops(domain: DomainSpec, outer: Loop, loops: Optional[Sequence[Loop]]) -> List[Loop]:
    target = outer.target
    if loops is None:
        loops = [s.loop if s.loop is not None else target.geodesic(s.charge) for s in domain.singularities]
    loops = list(loops)
    if len(loops) != len(domain.singularities):
        raise InvalidDomain("One boundary loop per singularity is required")
    classes = []
    for spec, loop in zip(domain.singularities, loops):
        if spec.charge.is_trivial:
            raise InvalidDomain(f"Singularity at {spec.center} has the trivial charge {spec.charge.name}")
        found = loop_class_id(loop)
        if found != spec.charge.class_id:
            raise IncompatibleTopology(
                f"Loop at {spec.center} lies in {found!r}, not in {spec.charge.name}"
            )
        classes.append(spec.charge)
    boundary = BoundaryTopology(outer=outer.target.class_of(loop_class_id(outer)))
    try:
        compatible = is_topological_resolution(boundary, classes)
    except TopologyError as exc:
        raise IncompatibleTopology(str(exc)) from exc
    if not compatible:
        names = ", ".join(c.name for c in classes)
        raise IncompatibleTopology(f"Charges ({names}) do not resolve the boundary class {boundary.outer.name}")
    return loops


@dataclass(frozen=True)
class EnergySample:
    rho: float
    energy: float
    loops: Tuple[Loop, ...] = field(compare=False)
    state: FieldState = field(compare=False, repr=False)


def geometric_energy_at(
    domain: DomainSpec,
    outer: Loop,
    loops: Optional[Sequence[Loop]] = None,
    rho: Optional[float] = None,
    config: Optional[RelaxConfig] = None,
    warm: Optional[FieldState] = None,
) -> EnergySample:
    """Minimal discrete energy on Ω minus the ρ-disks with the given boundary loops."""
    config = config or RelaxConfig()
    if rho is not None:
        domain = domain.with_rho(rho)
    loops = _resolve_loops(domain, outer, loops)
    mesh = grid_for(domain)
    state = initial_state(domain, mesh, outer, loops)
    if warm is not None and warm.mesh is mesh:
        state.values = warm.values.copy()
        state.apply_boundary()
    best = minimise(state, config)
    return EnergySample(domain.rho, best.energy, tuple(loops), best)


def topological_energy_at(
    domain: DomainSpec,
    outer: Loop,
    rho: Optional[float] = None,
    config: Optional[RelaxConfig] = None,
) -> EnergySample:
    """Geometric energy minimised over the minimising geodesics of each charge.

    Candidates are the distinct conjugates of the designated geodesic times a
    grid of rotation offsets, refined once at half steps. The default geodesics
    are always among the candidates, so the result never exceeds the geometric
    energy.
    """
    config = config or RelaxConfig()
    if rho is not None:
        domain = domain.with_rho(rho)
    target = outer.target
    best = geometric_energy_at(domain, outer, None, None, config)
    loops = list(best.loops)
    candidate_config = replace(config, restarts=1)
    step = 2.0 * math.pi / config.phase_samples

    def attempt(idx: int, conjugator: int, phase: float) -> bool:
        nonlocal best, loops
        trial = list(loops)
        trial[idx] = target.geodesic(domain.singularities[idx].charge, phase, conjugator)
        try:
            sample = geometric_energy_at(domain, outer, trial, None, candidate_config, warm=best.state)
        except (NonConvergence, HolonomyMismatch) as exc:
            LOGGER.warning("Skipping geodesic candidate %s/%.4f: %s", conjugator, phase, exc)
            return False
        if sample.energy < best.energy:
            best, loops = sample, trial
            return True
        return False

    for idx, spec in enumerate(domain.singularities):
        for conjugator in target.conjugators(spec.charge.class_id):
            for j in range(config.phase_samples):
                if (conjugator, j * step) == (loops[idx].conjugator, loops[idx].phase):
                    continue
                attempt(idx, conjugator, j * step)
        centre = loops[idx]
        for offset in (-0.5 * step, 0.5 * step):
            attempt(idx, centre.conjugator, centre.phase + offset)
        LOGGER.debug(
            "Singularity %s: conjugator=%s phase=%.4f energy=%.12g",
            idx, loops[idx].conjugator, loops[idx].phase, best.energy,
        )
    return best


@dataclass(frozen=True)
class EnergyReport:
    samples: Tuple[Tuple[float, float], ...]
    slope: float
    renormalised: float
    residual: float
    theory_slope: float
    fluxes: Tuple[Optional[Tuple[float, float]], ...]
    mode: str = "geom"
    singular_energy: float = 0.0
    lower_bounds: Tuple[float, ...] = ()

    @property
    def slope_deviation(self) -> float:
        if self.theory_slope == 0:
            return abs(self.slope)
        return abs(self.slope - self.theory_slope) / self.theory_slope

    @property
    def renormalised_samples(self) -> Tuple[float, ...]:
        """E(ρ_j) − Σλ²/4π · log(1/ρ_j), in schedule order."""
        return tuple(e - self.theory_slope * math.log(1.0 / rho) for rho, e in self.samples)

    @property
    def gradient(self) -> Tuple[Optional[Tuple[float, float]], ...]:
        """∇_{a_i}W estimated as minus the stress flux."""
        return tuple(None if f is None else (-f[0], -f[1]) for f in self.fluxes)


def _schedule(domain: DomainSpec, rho_schedule: Optional[Sequence[float]]) -> List[float]:
    schedule = sorted(set(float(r) for r in (rho_schedule or DEFAULT_RHO_SCHEDULE)), reverse=True)
    rho_bar = domain.rho_bar()
    kept = []
    for rho in schedule:
        if rho < 3.0 * domain.h or rho >= rho_bar:
            LOGGER.warning("Dropping rho=%.6g: outside [3h, rho_bar) = [%.6g, %.6g)", rho, 3.0 * domain.h, rho_bar)
            continue
        kept.append(rho)
    if len(kept) < 2:
        raise InvalidSchedule(f"Need at least two admissible rho values, got {kept}")
    return kept


def renormalised_energy(
    domain: DomainSpec,
    outer: Loop,
    rho_schedule: Optional[Sequence[float]] = None,
    mode: str = "geom",
    config: Optional[RelaxConfig] = None,
    with_flux: bool = True,
) -> EnergyReport:
    """Fit E(ρ) = A·log(1/ρ) + W over the schedule; W is the renormalised energy."""
    if mode not in ("geom", "top"):
        raise SolverError(f"Unknown mode {mode!r}")
    config = config or RelaxConfig()
    schedule = _schedule(domain, rho_schedule)
    runs: List[EnergySample] = []
    for rho in schedule:
        if mode == "geom":
            sample = geometric_energy_at(domain, outer, None, rho, config)
        else:
            sample = topological_energy_at(domain, outer, rho, config)
        LOGGER.info("rho=%.6g E=%.10g (%s)", rho, sample.energy, mode)
        runs.append(sample)

    x = np.log(1.0 / np.array(schedule))
    energies = np.array([r.energy for r in runs])
    slope, intercept = np.polyfit(x, energies, 1)
    residual = float(np.sqrt(np.mean((energies - (slope * x + intercept)) ** 2)))
    theory = math.fsum(s.charge.energy for s in domain.singularities)
    if theory > 0 and abs(slope - theory) > SLOPE_WARNING * theory:
        LOGGER.warning("Fitted slope %.6g deviates from %.6g by more than 5%%", slope, theory)

    fluxes: List[Optional[Tuple[float, float]]] = []
    finest = runs[-1]
    if with_flux:
        radius = min(max(5.0 * domain.h, 2.0 * finest.rho), 0.9 * domain.rho_bar())
        for center in domain.centers:
            if radius <= finest.rho + 2.0 * domain.h:
                LOGGER.warning("No admissible flux circle around %s", tuple(center))
                fluxes.append(None)
                continue
            try:
                fluxes.append(stress_flux(finest.state, tuple(center), radius))
            except CircleOutOfDomain as exc:
                LOGGER.warning("Flux skipped around %s: %s", tuple(center), exc)
                fluxes.append(None)

    outer_class = outer.target.class_of(loop_class_id(outer))
    esg = singular_energy_of_boundary(BoundaryTopology(outer=outer_class))
    bounds = []
    k = len(domain.singularities)
    for rho in schedule:
        dist = domain.with_rho(rho).dist_to_boundary()
        bounds.append(dirichlet_lower_bound(esg, dist, 2.0 * rho * k) if k and dist > 0 else 0.0)
    return EnergyReport(
        samples=tuple(zip(schedule, energies.tolist())),
        slope=float(slope),
        renormalised=float(intercept),
        residual=residual,
        theory_slope=theory,
        fluxes=tuple(fluxes),
        mode=mode,
        singular_energy=esg,
        lower_bounds=tuple(bounds),
    )


def stress_flux(
    state: FieldState,
    center: Tuple[float, float],
    radius: float,
    quadrature: int = FLUX_QUADRATURE,
) -> Tuple[float, float]:
    """∫ T·ν over the circle, T = ½|Du|² I − Duᵀ Du, from the P1 interpolant."""
    mesh = state.mesh
    if mesh.delaunay is None or mesh.kept is None:
        raise CircleOutOfDomain("Stress flux needs a triangulated planar mesh")
    h = mesh.h
    if radius < 5.0 * h:
        raise CircleOutOfDomain(f"Radius {radius:.6g} is below 5h={5.0 * h:.6g}")
    theta = 2.0 * math.pi * np.arange(quadrature) / quadrature
    normals = np.stack((np.cos(theta), np.sin(theta)), axis=1)
    base = np.asarray(center, dtype=float) + radius * normals
    offsets = h * np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    points = (base[:, None, :] + offsets[None, :, :]).reshape(-1, 2)

    delaunay = mesh.delaunay
    simplex = delaunay.find_simplex(points)
    if np.any(simplex < 0) or not np.all(mesh.kept[simplex]):
        raise CircleOutOfDomain(f"Circle of radius {radius:.6g} around {tuple(center)} leaves the domain")
    transform = delaunay.transform[simplex]
    local = np.einsum("nij,nj->ni", transform[:, :2, :], points - transform[:, 2, :])
    bary = np.c_[local, 1.0 - local.sum(axis=1)]
    vertices = delaunay.simplices[simplex]
    dim = state.target.rep_dim
    vals = state.values[vertices]

    # one reference representative per quadrature point keeps the four stencil samples in one gauge
    first = np.arange(quadrature) * 4
    ref_vertex = vertices[first, np.argmax(bary[first], axis=1)]
    reference = np.repeat(state.values[ref_vertex], 12, axis=0)
    aligned = state.target.align(vals.reshape(-1, dim), reference).reshape(-1, 3, dim)
    u = np.einsum("mk,mkd->md", bary, aligned).reshape(quadrature, 4, dim)
    du = np.stack(((u[:, 0] - u[:, 1]) / (2.0 * h), (u[:, 2] - u[:, 3]) / (2.0 * h)), axis=2)
    gram = np.einsum("nda,ndb->nab", du, du)
    trace = gram[:, 0, 0] + gram[:, 1, 1]
    stress = state.target.density_scale * (0.5 * trace[:, None, None] * np.eye(2) - gram)
    flux = np.einsum("nab,nb->a", stress, normals) * (2.0 * math.pi * radius / quadrature)
    return float(flux[0]), float(flux[1])


@dataclass(frozen=True)
class SynharmonyResult:
    estimate: float
    per_time: Tuple[Tuple[float, float], ...]


def _cylinder_state(target: TargetModel, mesh: Mesh, gamma: Loop, beta: Loop) -> FieldState:
    state = FieldState(mesh=mesh, target=target, values=np.zeros((mesh.size, target.rep_dim)), loops={0: gamma, 1: beta})
    state.apply_boundary()
    free = mesh.free
    length = mesh.diameter
    t = mesh.points[free, 1] / length
    theta = mesh.angles[free]
    state.values[free] = target.blend([gamma(theta), beta(theta)], np.stack((1.0 - t, t), axis=1))
    return state


def synharmony_estimate(
    gamma: Loop,
    beta: Loop,
    times: Sequence[float] = DEFAULT_TIMES,
    n_theta: int = 64,
    config: Optional[RelaxConfig] = None,
) -> SynharmonyResult:
    """Cylinder energy between γ and β minus T times the energy rate of the cheaper end loop."""
    config = replace(config or RelaxConfig(), check_holonomy=False)
    target = gamma.target
    if beta.target is not target:
        raise NonHomotopicLoops("Loops live on different targets")
    first = target.loop_class(gamma.sample(4 * n_theta))
    second = target.loop_class(beta.sample(4 * n_theta))
    if first != second:
        raise NonHomotopicLoops(f"Loops are not homotopic: {first!r} vs {second!r}")
    per_time = []
    for length in times:
        mesh = build_cylinder(n_theta, float(length))
        d_theta = mesh.cache["d_theta"]
        rate = min(target.loop_energy(gamma.sample(n_theta)), target.loop_energy(beta.sample(n_theta))) / d_theta
        best = minimise(_cylinder_state(target, mesh, gamma, beta), config)
        excess = best.energy - float(length) * rate
        LOGGER.info("T=%.4g: cylinder energy %.10g, excess %.6g", length, best.energy, excess)
        per_time.append((float(length), excess))
    return SynharmonyResult(min(e for _, e in per_time), tuple(per_time))


@dataclass(frozen=True)
class PositionSample:
    a_x: float
    a_y: float
    renormalised: float


def sweep_positions(
    domain: DomainSpec,
    outer: Loop,
    index: int,
    axis: int,
    positions: Sequence[float],
    mode: str = "geom",
    rho_schedule: Optional[Sequence[float]] = None,
    config: Optional[RelaxConfig] = None,
) -> List[PositionSample]:
    """W as singularity `index` moves along coordinate `axis` (0 = x, 1 = y)."""
    config = config or RelaxConfig()
    if not 0 <= index < len(domain.singularities):
        raise InvalidDomain(f"No singularity with index {index}")
    if axis not in (0, 1):
        raise InvalidDomain("Axis must be 0 (x) or 1 (y)")

    def evaluate(value: float) -> PositionSample:
        centers = [list(c) for c in domain.centers]
        centers[index][axis] = float(value)
        moved = domain.with_centers([tuple(c) for c in centers])
        report = renormalised_energy(moved, outer, rho_schedule, mode, config, with_flux=False)
        x, y = centers[index]
        return PositionSample(x, y, report.renormalised)

    if config.threads > 1:
        workers = config.threads
        config = replace(config, threads=1)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(evaluate, positions))
    return [evaluate(v) for v in positions]
