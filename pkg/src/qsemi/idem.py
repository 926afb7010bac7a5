"""Finding and verifying idempotent states.

Three sources feed :func:`find_idempotents`: Gauss-Newton on the quadratic
system omega * omega = omega, omega(1) = 1 from random starting states,
Cesaro averages of convolution powers, and whatever exact oracle the
quantum semigroup carries.  Every candidate is polished, projected back to
the state space, re-verified and deduplicated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fdalg import (
    BlockStructure,
    Element,
    Functional,
    NotAStateError,
    nearest_state,
    random_element,
    random_state,
)
from .qsg import QuantumSemigroup, act, conv_state_elt, convolve

log = logging.getLogger(__name__)


class NotIdempotentError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    starts: int = 64
    max_iter: int = 1000
    eps_idem: float = 1e-9
    dedup_radius: float = 1e-6
    rng_seed: int = 42
    newton_iter: int = 60
    use_oracle: bool = True

    def __post_init__(self):
        if self.starts < 0 or self.max_iter <= 0 or self.newton_iter <= 0:
            raise ValueError("iteration counts must be positive")
        if self.eps_idem <= 0 or self.dedup_radius <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True, eq=False)
class IdempotentCandidate:
    state: Functional
    residual: float
    provenance: str  # "cesaro" | "newton" | "oracle"
    found_by: tuple = ()
    label: str = ""

    def sort_key(self) -> tuple:
        flat = np.concatenate([r.ravel() for r in self.state.density])
        return tuple(np.round(np.column_stack([flat.real, flat.imag]).ravel(), 8))


def idempotency_residual(qs: QuantumSemigroup, omega: Functional, tol: float = 1e-8) -> float:
    """||omega * omega - omega|| in the Frobenius norm of the density blocks."""
    if not omega.is_state(tol):
        raise NotAStateError("idempotency residual is defined for states")
    return convolve(qs, omega, omega).distance(omega)


def _raw_residual(qs: QuantumSemigroup, w: np.ndarray) -> np.ndarray:
    return np.einsum("i,j,ijc->c", w, w, qs.delta.cube) - w


# --- Newton ---------------------------------------------------------------------


def hermitian_parametrization(algebra: BlockStructure, frames: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    """Complex (d, P) matrix T with covector = T @ theta for real theta.

    Without frames theta runs over all Hermitian density blocks (P = d);
    with frames V_b it runs over densities V_b s V_b^* with s Hermitian.
    """
    cols = []
    for b, n in enumerate(algebra.blocks):
        v = np.eye(n) if frames is None else frames[b]
        r = v.shape[1]
        for i in range(r):
            for j in range(i, r):
                gens = [np.zeros((r, r), dtype=complex)]
                gens[0][i, j] = gens[0][j, i] = 1.0
                if i != j:
                    g = np.zeros((r, r), dtype=complex)
                    g[i, j], g[j, i] = 1j, -1j
                    gens.append(g)
                for s in gens:
                    rho = v @ s @ v.conj().T
                    dens = [np.zeros((m, m), dtype=complex) for m in algebra.blocks]
                    dens[b] = rho
                    cols.append(Functional(algebra, tuple(dens)).covector)
    if not cols:
        return np.zeros((algebra.dim, 0), dtype=complex)
    return np.stack(cols, axis=1)


def _jacobian(qs: QuantumSemigroup, w: np.ndarray) -> np.ndarray:
    C = qs.delta.cube
    return np.einsum("kjc,j->ck", C, w) + np.einsum("ikc,i->ck", C, w) - np.eye(qs.dim)


def newton_solve(
    qs: QuantumSemigroup,
    start: Functional,
    frames: Optional[Sequence[np.ndarray]] = None,
    project: bool = True,
    max_iter: int = 60,
    tol: float = 1e-14,
) -> tuple[Functional, float]:
    """Gauss-Newton on {omega * omega - omega = 0, omega(1) = 1}.

    Steps are minimum-norm least-squares solutions, so singular Jacobians
    (continuous families of idempotent functionals) are handled.  With
    ``project`` every iterate is pushed back onto the state space.
    """
    T = hermitian_parametrization(qs.algebra, frames)
    unit = qs.algebra.unit_coeffs()
    theta = np.linalg.lstsq(T, start.covector, rcond=None)[0].real
    w = T @ theta
    best = (np.inf, w)
    for _ in range(max_iter):
        R = _raw_residual(qs, w)
        res = float(np.linalg.norm(R))
        if res < best[0]:
            best = (res, w)
        if res <= tol:
            break
        J = _jacobian(qs, w) @ T
        F = np.concatenate([R.real, R.imag, [(unit @ w).real - 1.0]])
        Jr = np.vstack([J.real, J.imag, (unit @ T).real[None, :]])
        step = np.linalg.lstsq(Jr, -F, rcond=None)[0]
        theta = theta + step
        w = T @ theta
        if project:
            try:
                phi = nearest_state(Functional.from_covector(qs.algebra, w))
            except NotAStateError:
                break
            theta = np.linalg.lstsq(T, phi.covector, rcond=None)[0].real
            w = T @ theta
    res, w = best
    return Functional.from_covector(qs.algebra, w), res


def _support_frames(phi: Functional, cut: float) -> list[np.ndarray]:
    frames = []
    for r in phi.density:
        lam, v = np.linalg.eigh((r + r.conj().T) / 2)
        frames.append(v[:, lam > cut])
    return frames


def _gap_cutoffs(phi: Functional) -> list[float]:
    """Candidate support cutoffs, best (largest relative spectral gap) first."""
    lam = np.sort(np.concatenate([np.linalg.eigvalsh((r + r.conj().T) / 2) for r in phi.density]))[::-1]
    lam = np.clip(lam, 1e-300, None)
    cuts = []
    for k in range(len(lam) - 1):
        if lam[k] > 1e-12:
            cuts.append((np.log(lam[k]) - np.log(lam[k + 1]), np.sqrt(lam[k] * max(lam[k + 1], 1e-300))))
    cuts.sort(key=lambda c: -c[0])
    out = [c for _, c in cuts[:3]]
    return out or [0.0]


def polish(
    qs: QuantumSemigroup, start: Functional, config: SolverConfig
) -> Optional[tuple[Functional, float]]:
    """Drive ``start`` to a nearby idempotent state, or give up (None).

    First an unrestricted projected Newton run, then Newton restricted to
    the numerical support of the result; the restriction makes the root
    isolated so convergence is quadratic down to rounding level.
    """
    try:
        phi, _ = newton_solve(qs, nearest_state(start), project=True, max_iter=config.newton_iter)
        phi = nearest_state(phi)
    except NotAStateError:
        return None
    best = None
    for cut in _gap_cutoffs(phi):
        frames = _support_frames(phi, cut)
        if sum(f.shape[1] for f in frames) == 0:
            continue
        try:
            cand, _ = newton_solve(qs, phi, frames=frames, project=False, max_iter=30)
            cand = _clean(cand)
        except NotAStateError:
            continue
        res = convolve(qs, cand, cand).distance(cand)
        if best is None or res < best[1]:
            best = (cand, res)
        if res <= config.eps_idem * 1e-2:
            break
    try:
        plain = _clean(phi)
        res = convolve(qs, plain, plain).distance(plain)
        if best is None or res < best[1]:
            best = (plain, res)
    except NotAStateError:
        pass
    if best is None or best[1] > config.eps_idem:
        return None
    return best


def _clean(phi: Functional) -> Functional:
    """Hermitize and zero out eigenvalues at rounding level."""
    out = []
    for r in phi.density:
        lam, v = np.linalg.eigh((r + r.conj().T) / 2)
        lam = np.where(np.abs(lam) < 1e-13, 0.0, lam)
        out.append((v * lam) @ v.conj().T)
    phi = Functional(phi.structure, tuple(out))
    if phi.min_eigenvalue() < -1e-10:
        raise NotAStateError("polished functional is not positive")
    tr = phi.trace().real
    return Functional(phi.structure, tuple(r / tr for r in phi.density))


# --- Cesaro ---------------------------------------------------------------------


def _checkpoints(max_iter: int) -> set[int]:
    pts, n = set(), 4
    while n <= max_iter:
        pts.add(n)
        n = int(np.ceil(n * 1.5))
    pts.add(max_iter)
    return pts


def cesaro_limit(
    qs: QuantumSemigroup, mu: Functional, config: SolverConfig = SolverConfig()
) -> Optional[IdempotentCandidate]:
    """Cesaro means sigma_N = (1/N) sum_{n<=N} mu^{*n}, polished by Newton.

    Returns the first sigma_N (after polishing) whose idempotency residual is
    at most ``eps_idem``; None if that never happens within ``max_iter``.
    """
    mu.check_state(1e-8)
    power = mu
    total = mu
    checkpoints = _checkpoints(config.max_iter)
    for n in range(1, config.max_iter + 1):
        if n > 1:
            power = convolve(qs, power, mu)
            total = total + power
        sigma = total * (1.0 / n)
        raw = convolve(qs, sigma, sigma).distance(sigma)
        if raw <= config.eps_idem:
            return IdempotentCandidate(sigma, raw, "cesaro", ("cesaro",))
        if n in checkpoints and raw < 0.05:
            out = polish(qs, sigma, config)
            if out is not None and out[0].distance(sigma) < 0.1:
                return IdempotentCandidate(out[0], out[1], "cesaro", ("cesaro",))
    return None


def cesaro_limit_spectral(qs: QuantumSemigroup, mu: Functional, tol: float = 1e-9) -> Functional:
    """Exact Cesaro limit: spectral projection of nu -> mu * nu onto eigenvalue 1.

    Used as an independent check of :func:`cesaro_limit`.
    """
    d = qs.dim
    M = np.einsum("i,ijc->cj", mu.covector, qs.delta.cube)  # nu -> mu * nu on covectors
    A = M - np.eye(d)
    u, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    K = vh[rank:].conj().T  # right kernel
    L = u[:, rank:]  # left kernel (of A^H)
    P = K @ np.linalg.solve(L.conj().T @ K, L.conj().T)
    return Functional.from_covector(qs.algebra, P @ mu.covector)


# --- enumeration ----------------------------------------------------------------


def _extreme_starts(algebra: BlockStructure, rng: np.random.Generator, count: int) -> list[Functional]:
    """Diagonal pure states, their pairwise mixtures, then random few-pure mixtures."""
    pures = []
    for b, n in enumerate(algebra.blocks):
        for i in range(n):
            dens = [np.zeros((m, m), dtype=complex) for m in algebra.blocks]
            dens[b][i, i] = 1.0
            pures.append(Functional(algebra, tuple(dens)))
    starts = list(pures)
    for i in range(len(pures)):
        for j in range(i + 1, len(pures)):
            starts.append((pures[i] + pures[j]) * 0.5)
    for k in range(count):
        starts.append(random_state(algebra, rng, "pure" if k % 2 else "few"))
    return starts


def _newton_starts(algebra: BlockStructure, rng: np.random.Generator, count: int) -> list[Functional]:
    kinds = ("pure", "few", "mixed")
    return [random_state(algebra, rng, kinds[k % 3]) for k in range(count)]


def dedup(cands: Sequence[IdempotentCandidate], radius: float) -> list[IdempotentCandidate]:
    """Merge candidates closer than ``radius``; keep the smallest residual of each cluster."""
    ordered = sorted(cands, key=lambda c: c.sort_key())
    clusters: list[list[IdempotentCandidate]] = []
    for c in ordered:
        for cl in clusters:
            if cl[0].state.distance(c.state) <= radius:
                cl.append(c)
                break
        else:
            clusters.append([c])
    out = []
    priority = {"oracle": 0, "newton": 1, "cesaro": 2}
    for cl in clusters:
        best = min(cl, key=lambda c: (c.residual, priority.get(c.provenance, 3)))
        found_by = tuple(sorted({s for c in cl for s in (c.found_by or (c.provenance,))}))
        label = next((c.label for c in cl if c.label), "")
        out.append(IdempotentCandidate(best.state, best.residual, best.provenance, found_by, label))
    return sorted(out, key=lambda c: c.sort_key())


def find_idempotents(
    qs: QuantumSemigroup,
    config: SolverConfig = SolverConfig(),
    sources: Sequence[str] = ("newton", "cesaro", "oracle"),
) -> list[IdempotentCandidate]:
    """Best-effort enumeration of idempotent states; completeness is not guaranteed."""
    rng = np.random.default_rng(config.rng_seed)
    newton_starts = _newton_starts(qs.algebra, rng, config.starts)
    cesaro_starts = _extreme_starts(qs.algebra, rng, max(4, config.starts // 4))
    cands: list[IdempotentCandidate] = []

    if "newton" in sources:
        for s in newton_starts:
            out = polish(qs, s, config)
            if out is not None:
                cands.append(IdempotentCandidate(out[0], out[1], "newton", ("newton",)))
    if "cesaro" in sources:
        for s in cesaro_starts:
            c = cesaro_limit(qs, s, config)
            if c is not None:
                cands.append(c)
    if "oracle" in sources and config.use_oracle and qs.oracle is not None:
        for label, phi in qs.oracle():
            res = convolve(qs, phi, phi).distance(phi)
            if res <= config.eps_idem and phi.is_state(1e-9):
                cands.append(IdempotentCandidate(phi, res, "oracle", ("oracle",), label))
            else:
                log.warning("oracle state %s rejected (residual %.3g)", label, res)

    accepted = []
    for c in cands:
        if c.residual <= config.eps_idem and c.state.min_eigenvalue() >= -1e-9 and c.state.is_state(1e-8):
            accepted.append(c)
    return dedup(accepted, config.dedup_radius)


# --- multiplicative domain ------------------------------------------------------


@dataclass(frozen=True)
class MultDomainReport:
    left_domain: float  # omega * a in the multiplicative domain
    right_domain: float  # a * omega in the multiplicative domain
    left_identity: float  # || omega * (omega . c) - omega(c) omega ||
    right_identity: float  # || (omega . c) * omega - omega(c) omega ||
    samples: int
    tol: float = 1e-8

    @property
    def max_residual(self) -> float:
        return max(self.left_domain, self.right_domain, self.left_identity, self.right_identity)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def as_dict(self) -> dict:
        return {
            "left_domain": self.left_domain,
            "right_domain": self.right_domain,
            "left_identity": self.left_identity,
            "right_identity": self.right_identity,
            "max_residual": self.max_residual,
            "samples": self.samples,
            "passed": self.passed,
        }


def mult_domain_verify(
    qs: QuantumSemigroup,
    omega: Functional,
    samples: int = 50,
    seed: int = 0,
    eps_idem: float = 1e-8,
    tol: float = 1e-8,
) -> MultDomainReport:
    """Residuals of the multiplicative-domain property of omega * a and a * omega."""
    r = idempotency_residual(qs, omega)
    if r > eps_idem:
        raise NotIdempotentError(f"idempotency residual {r:.3e} exceeds {eps_idem:.1e}")
    rng = np.random.default_rng(seed)
    xs = [random_element(qs.algebra, rng) for _ in range(samples)]
    xs = [x * (1.0 / x.norm()) for x in xs]
    ld = rd = li = ri = 0.0
    for k in range(qs.dim):
        a = Element.basis(qs.algebra, k)
        for side in ("left", "right"):
            y = conv_state_elt(qs, omega, a, side)
            wy = omega(y)
            worst = 0.0
            for x in xs:
                wx = omega(x)
                worst = max(worst, abs(omega(y * x) - wy * wx), abs(omega(x * y) - wx * wy))
            if side == "left":
                ld = max(ld, worst)
            else:
                rd = max(rd, worst)
        wc = omega(a)
        oc = act(a, omega, "right")  # omega . c
        li = max(li, (convolve(qs, omega, oc) - omega * wc).norm())
        ri = max(ri, (convolve(qs, oc, omega) - omega * wc).norm())
    return MultDomainReport(ld, rd, li, ri, samples, tol)
