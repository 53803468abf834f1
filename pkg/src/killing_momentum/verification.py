"""The verification suite behind ``killing-momentum verify``.

Every check returns a :class:`CheckResult` with its worst residual and the
tolerance it is held to.  Random samples are drawn from generators seeded
by ``(seed, check index)``, and checks share no mutable state, so reports
are byte-identical for any worker count.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .circle import Arc, arc_uncertainty_check, circle_spectrum
from .errors import ConfigError
from .fields import (
    Frame,
    divergence,
    euclidean_plane_fields,
    killing_frame_s1,
    killing_frame_s3,
    killing_residuals,
    levi_civita,
    lie_bracket,
    structure_constants,
)
from .geometry import MANIFOLDS, ChartPoint, Sphere3
from .operators import (
    PhysicalConstants,
    commutator,
    frame_momenta,
    hamiltonian,
    identity,
    ladder,
    laplacian,
    momentum,
    multiplication_operator,
)
from .position import NormalChart, canonical_commutator_check, duality_matrix
from .quadrature import bandwidth_violation, build_grid_s3, gram_matrix, hermiticity_defect, integrate, norm
from .spectra import EigenState, build_eigenbasis, momentum_spacing, psi_n0
from .testfields import analytic_fields, band_limited_fields

NORMALIZATION_N_MAX = 6


@dataclass
class RunConfig:
    manifold: str = "sphere3"
    radius: float = 1.0
    hbar: float = 1.0
    mass: float = 1.0
    grid: tuple[int, int, int] = (32, 32, 32)
    n_max: int = 4
    format: str = "json"
    out: str | None = None
    seed: int = 42
    workers: int = 1
    perturb_x3: float = 1.0  # fault-injection hook: scales X_3

    def validate(self) -> None:
        if self.manifold not in MANIFOLDS:
            raise ConfigError(f"manifold must be one of {sorted(MANIFOLDS)}, got {self.manifold!r}")
        if not self.radius > 0:
            raise ConfigError(f"radius must be positive, got {self.radius}")
        if not (self.hbar > 0 and self.mass > 0):
            raise ConfigError("hbar and mass must be positive")
        if self.n_max < 0:
            raise ConfigError(f"n_max must be nonnegative, got {self.n_max}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        grid = build_grid_s3(*self.grid, R=self.radius)
        why = bandwidth_violation(grid, self.n_max)
        if why:
            raise ConfigError(why)

    @property
    def constants(self) -> PhysicalConstants:
        return PhysicalConstants(self.hbar, self.mass)

    def echo(self) -> dict:
        """Settings that determine the results; worker count and output path do not."""
        d = asdict(self)
        d["grid"] = list(self.grid)
        del d["workers"], d["out"]
        return d


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_residual: float
    tolerance: float
    passed: bool


def _check(name: str, residual: float, tol: float) -> CheckResult:
    residual = float(residual)
    return CheckResult(name, residual, tol, bool(np.isfinite(residual) and residual < tol))


@dataclass
class VerificationReport:
    checks: list[CheckResult]
    config: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]


def _rel(actual, expected, scale) -> float:
    return float(np.max(np.abs(actual - expected)) / scale)


class _Suite:
    """Checks for one configuration; each ``check_*`` method is independent."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.R = cfg.radius
        self.hbar = cfg.hbar
        self.consts = cfg.constants
        frame = killing_frame_s3(self.R)
        if cfg.perturb_x3 != 1.0:
            frame = frame.with_field(2, frame[2] * cfg.perturb_x3)
        self.frame: Frame = frame
        self.M = Sphere3(self.R)
        self.grid = build_grid_s3(*cfg.grid, R=self.R)
        self.bases: dict[tuple[int, str], list[EigenState]] = {}

    def rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng([self.cfg.seed, index])

    def points(self, index: int, n: int) -> np.ndarray:
        return self.M.random_points(n, self.rng(index))

    def build_bases(self, pool) -> None:
        keys = [(n, b) for n in range(self.cfg.n_max + 1) for b in "+-"]
        built = pool.map(lambda key: build_eigenbasis(key[0], key[1], self.R, self.consts, self.grid, self.frame), keys)
        self.bases = dict(zip(keys, built))

    # -- frame geometry ---------------------------------------------------------
    def check_orthonormality(self):
        pts = self.points(1, 1000)
        G = self.frame.gram(pts)
        return [_check("orthonormality", np.max(np.abs(G - np.eye(3))), 1e-10)]

    def check_killing(self):
        pts = self.points(2, 1000)
        kill = max(np.max(np.abs(killing_residuals(X, pts))) for X in self.frame)
        div = max(np.max(np.abs(divergence(X, pts))) for X in self.frame)
        return [_check("killing_residual", kill, 1e-10), _check("divergence", div, 1e-10)]

    def check_structure_constants(self):
        pts = self.points(3, 100)
        sc = structure_constants(self.frame, pts, strict=False)
        # c^k_ij = -(2/R) eps_ijk, stored as c[k, i, j]
        expected = -(2.0 / self.R) * np.einsum("ijk->kij", levi_civita())
        off = np.max(np.abs(sc.c - expected))
        brackets = []
        eps = levi_civita()
        for i in range(3):
            for j in range(3):
                br = lie_bracket(self.frame[i], self.frame[j]).values(pts)
                rhs = sum(-(2.0 / self.R) * eps[i, j, k] * self.frame[k].values(pts) for k in range(3))
                brackets.append(np.max(np.abs(br - rhs)))
        return [
            _check("structure_constants", max(off, sc.deviation), 1e-9),
            _check("bracket_closure", max(brackets), 1e-9),
        ]

    # -- operators ------------------------------------------------------------------
    def check_casimir(self):
        pts = self.points(4, 100)
        lap = laplacian(self.M)
        worst = 0.0
        for f in analytic_fields():
            f = f.cached()
            total = self.frame[0].apply(self.frame[0].apply(f))
            for X in self.frame.fields[1:]:
                total = total + X.apply(X.apply(f))
            lf = lap(f)(pts)
            worst = max(worst, float(np.max(np.abs(total(pts) - lf) / (1.0 + np.abs(lf)))))
        return [_check("casimir_decomposition", worst, 1e-8)]

    def check_momentum_algebra(self):
        pts = self.points(5, 100)
        P = frame_momenta(self.frame, self.hbar)
        eps = levi_civita()
        unit = self.hbar / self.R
        worst = 0.0
        for f in analytic_fields():
            f = f.cached()
            Pf = [Pk(f)(pts) for Pk in P]
            scale = max(np.max(np.abs(v)) for v in Pf) * unit + unit
            for i in range(3):
                for j in range(i + 1, 3):
                    lhs = commutator(P[i], P[j])(f)(pts)
                    rhs = sum((2j * self.hbar / self.R) * eps[i, j, k] * Pf[k] for k in range(3))
                    worst = max(worst, _rel(lhs, rhs, scale))
        return [_check("momentum_commutators", worst, 1e-8)]

    def check_ladder(self):
        pts = self.points(6, 60)
        Pp, Pm = ladder(1, self.frame, self.hbar), ladder(-1, self.frame, self.hbar)
        P3 = momentum(self.frame[2], self.hbar)
        H = hamiltonian(self.frame, self.consts)
        unit = self.hbar / self.R
        worst_pm = worst_k = worst_h = 0.0
        for f in band_limited_fields()[:2] + analytic_fields()[2:3]:
            f = f.cached()
            p3f = P3(f)(pts)
            lhs = commutator(Pp, Pm)(f)(pts)
            worst_pm = max(worst_pm, _rel(lhs, 4 * unit * p3f, np.max(np.abs(p3f)) * 4 * unit + unit))
            for sign, L in ((1, Pp), (-1, Pm)):
                for k in range(1, 5):
                    Lk = L**k
                    lkf = Lk(f)(pts)
                    lhs = commutator(P3, Lk)(f)(pts)
                    worst_k = max(worst_k, _rel(lhs, sign * 2 * k * unit * lkf, np.max(np.abs(lkf)) * 2 * k * unit + unit))
                    hk = commutator(H, Lk)(f)(pts)
                    ref = np.max(np.abs(H(Lk(f))(pts))) + unit**2
                    worst_h = max(worst_h, float(np.max(np.abs(hk)) / ref))
        annihil = 0.0
        for n in range(1, self.cfg.n_max + 1):
            for branch, lower in (("+", Pm), ("-", Pp)):
                annihil = max(annihil, norm(lower(psi_n0(n, branch, self.R)), self.grid, self.cfg.workers) / unit)
        return [
            _check("ladder_commutator", worst_pm, 1e-7),
            _check("ladder_shift", worst_k, 1e-7),
            _check("hamiltonian_ladder_commute", worst_h, 1e-7),
            _check("ladder_annihilation", annihil, 1e-8),
        ]

    def check_hamiltonian_forms(self):
        pts = self.points(7, 100)
        Hc = hamiltonian(self.frame, self.consts, "casimir")
        Hl = hamiltonian(self.frame, self.consts, "laplacian")
        worst = 0.0
        for f in analytic_fields():
            f = f.cached()
            a, b = Hc(f)(pts), Hl(f)(pts)
            worst = max(worst, float(np.max(np.abs(a - b) / (1.0 + np.abs(b)))))
        return [_check("hamiltonian_forms", worst, 1e-8)]

    # -- spectra ----------------------------------------------------------------------
    def check_eigenvalues(self):
        pts = self.points(8, 100)
        lap = laplacian(self.M)
        H = hamiltonian(self.frame, self.consts)
        P3 = momentum(self.frame[2], self.hbar)
        worst_lap = worst_h = worst_p = 0.0
        for (n, _), states in sorted(self.bases.items()):
            lam = -n * (n + 2) / self.R**2
            for s in states:
                psi = s.field(pts)
                amp = np.max(np.abs(psi))
                worst_lap = max(worst_lap, _rel(lap(s.field)(pts), lam * psi, amp * max(abs(lam), 1.0 / self.R**2)))
                worst_h = max(worst_h, _rel(H(s.field)(pts), s.energy * psi, amp * max(abs(s.energy), self.hbar**2 / (self.cfg.mass * self.R**2))))
                worst_p = max(worst_p, _rel(P3(s.field)(pts), s.momentum * psi, amp * max(abs(s.momentum), self.hbar / self.R)))
        spacing = 0.0
        for (n, b), states in self.bases.items():
            for a, c in zip(states, states[1:]):
                spacing = max(spacing, abs(abs(c.momentum - a.momentum) - momentum_spacing(self.R, self.hbar)))
        two_pi_hbar = 2 * np.pi * self.hbar
        # h / (pi R) with h = 2 pi hbar
        spacing = max(spacing, abs(momentum_spacing(self.R, self.hbar) - two_pi_hbar / (np.pi * self.R)))
        return [
            _check("laplacian_eigenvalues", worst_lap, 1e-7),
            _check("energy_eigenvalues", worst_h, 1e-7),
            _check("momentum_spectrum", worst_p, 1e-7),
            _check("momentum_spacing", spacing, 1e-12),
        ]

    def check_normalization(self):
        w = self.cfg.workers
        worst = 0.0
        # as high as the grid resolves, up to NORMALIZATION_N_MAX
        top = max(n for n in range(NORMALIZATION_N_MAX + 1) if n == 0 or bandwidth_violation(self.grid, n) is None)
        for n in range(top + 1):
            for b in "+-":
                worst = max(worst, abs(norm(psi_n0(n, b, self.R), self.grid, w) - 1.0))
        vol = abs(integrate(1.0, self.grid, w).real / (2 * np.pi**2 * self.R**3) - 1.0)
        return [_check("normalization", worst, 1e-8), _check("volume", vol, 1e-10)]

    def check_gram(self):
        worst = 0.0
        for key, states in sorted(self.bases.items()):
            G = gram_matrix([s.field for s in states], self.grid, self.cfg.workers)
            worst = max(worst, float(np.max(np.abs(G - np.eye(len(states))))))
        return [_check("gram_identity", worst, 1e-8)]

    def check_hermiticity(self):
        fs = band_limited_fields()
        worst = 0.0
        for P in frame_momenta(self.frame, self.hbar) + [identity()]:
            for f, g in zip(fs, fs[1:] + fs[:1]):
                worst = max(worst, abs(hermiticity_defect(P, f, g, self.grid, self.cfg.workers)))
        return [_check("hermiticity", worst, 1e-9)]

    # -- position sector ----------------------------------------------------------
    def check_position(self):
        centers = self.points(9, 20)
        f = analytic_fields()[2]
        worst_dual = worst_comm = 0.0
        for c in centers:
            chart = NormalChart.at(ChartPoint(*c), self.frame)
            worst_dual = max(worst_dual, float(np.max(np.abs(duality_matrix(chart) - np.eye(3)))))
            for j in range(3):
                for k in range(3):
                    val = canonical_commutator_check(chart, j, k, f, self.hbar)
                    worst_comm = max(worst_comm, abs(val - (1.0 if j == k else 0.0)))
        pts = self.points(10, 100)
        worst_pq = 0.0
        fields = analytic_fields()
        for f, h in zip(fields, fields[1:] + fields[:1]):
            Q = multiplication_operator(f)
            for X in self.frame:
                lhs = commutator(Q, momentum(X, self.hbar))(h)(pts)
                rhs = 1j * self.hbar * X.apply(f)(pts) * h(pts)
                worst_pq = max(worst_pq, float(np.max(np.abs(lhs - rhs) / (np.abs(rhs) + self.hbar))))
        return [
            _check("normal_coordinate_duality", worst_dual, 1e-7),
            _check("canonical_commutator", worst_comm, 1e-7),
            _check("position_momentum_commutator", worst_pq, 1e-8),
        ]

    # -- circle ------------------------------------------------------------------------
    def check_circle(self):
        return circle_checks(self.R, self.hbar, self.rng(11))

    def all_checks(self):
        return [
            self.check_orthonormality,
            self.check_killing,
            self.check_structure_constants,
            self.check_casimir,
            self.check_momentum_algebra,
            self.check_hamiltonian_forms,
            self.check_ladder,
            self.check_eigenvalues,
            self.check_normalization,
            self.check_gram,
            self.check_hermiticity,
            self.check_position,
            self.check_circle,
        ]


def circle_checks(rho: float, hbar: float, rng: np.random.Generator) -> list[CheckResult]:
    ms = list(range(-5, 6))
    levels = circle_spectrum(rho, ms, hbar)
    worst = max(abs(val - m * hbar / rho) for m, val in levels)
    arc = Arc(center=float(rng.uniform(0, 2 * np.pi)), width=float(rng.uniform(0.5, 2 * np.pi)), rho=rho)
    results = [arc_uncertainty_check(arc, m, hbar) for m in range(1, 6)]
    bound = np.pi * hbar
    saturation = abs(results[0].product - bound) / bound
    violated = [r for r in results if not r.satisfied]
    monotone = all(a.product < b.product for a, b in zip(results, results[1:]))
    frame = killing_frame_s1(rho)
    unit = abs(frame.gram(np.array([[0.3]]))[0, 0, 0] - 1.0)
    return [
        _check("circle_spectrum", worst, 1e-12),
        _check("circle_frame_unit", unit, 1e-12),
        _check("arc_uncertainty_saturation", saturation, 1e-8),
        _check("arc_uncertainty_bound", 0.0 if (not violated and monotone) else 1.0, 0.5),
    ]


def plane_checks(rng: np.random.Generator) -> list[CheckResult]:
    X1, X2, X3 = euclidean_plane_fields()
    M = X1.manifold
    pts = M.random_points(200, rng)
    unit = max(np.max(np.abs(X1.norm_squared(pts) - 1.0)), np.max(np.abs(X2.norm_squared(pts) - 1.0)))
    rot = np.max(np.abs(X3.norm_squared(pts) - pts[:, 0] ** 2))
    kill = max(np.max(np.abs(killing_residuals(X, pts))) for X in (X1, X2, X3))
    sc = structure_constants(Frame((X1, X2), M, 1.0), pts, strict=False)
    return [
        _check("plane_translation_unit", unit, 1e-12),
        _check("plane_rotation_norm", rot, 1e-12),
        _check("plane_killing_residual", kill, 1e-12),
        _check("plane_translations_commute", max(np.max(np.abs(sc.c)), sc.deviation), 1e-12),
    ]


def run_verification(cfg: RunConfig) -> VerificationReport:
    cfg.validate()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if cfg.manifold == "circle":
            checks = circle_checks(cfg.radius, cfg.hbar, np.random.default_rng([cfg.seed, 11]))
        elif cfg.manifold == "euclidean-plane":
            checks = plane_checks(np.random.default_rng([cfg.seed, 12]))
        else:
            suite = _Suite(cfg)
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                suite.build_bases(pool)
                groups = list(pool.map(lambda check: check(), suite.all_checks()))
            checks = [c for group in groups for c in group]
    return VerificationReport(checks, cfg.echo())

