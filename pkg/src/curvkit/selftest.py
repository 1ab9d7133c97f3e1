"""Acceptance checks shared by ``curvkit selftest`` and the test suite.

Each ``criterion_k`` returns a :class:`CriterionResult`. Expected values are
computed here from closed forms that do not go through the calculus engine,
so every check compares two independent routes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from curvkit.core.smooth import PolyForm
from curvkit.io import load
from curvkit.lp import RationalLP, fourier_motzkin_feasible, lp_feasible
from curvkit.oracle import (
    Classification,
    SampleGrid,
    circle_projection,
    estimate_d2,
    projection_alignment_probe,
    sequence_ratio_probe,
    sphere_center_sequence,
    verify_essential_min,
    verify_quadratic_growth,
)
from curvkit.sets import Box, Polyhedron, PolyhedralUnion, Product, SecondOrderCone, Ternary, proximal_normal_member
from curvkit.sets.geometry import tangent_status
from curvkit.sosc import SampledSphere, Verdict, certify
from curvkit.subderiv import L0, EuclNorm, Indicator, Kind, Scaled, Smooth, SumSmooth, VecMax, Compose, d2

INF = math.inf
# Level radii shrink faster than the default so quadratic families settle
# within the absolute tolerance by the last levels.
FAMILY_GRID = SampleGrid(dir_decay=0.6)
FINITE_PER_FAMILY = 50
INFINITE_PER_FAMILY = 10


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    failures: list = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d}: {self.title} ({self.detail}; {self.seconds:.1f}s)"


def fixture_path(name: str) -> str:
    return str(resources.files("curvkit") / "fixtures" / f"{name}.json")


def _timed(number, title):
    def wrap(fn):
        def run(*args, **kwargs) -> CriterionResult:
            start = time.perf_counter()
            passed, detail, failures = fn(*args, **kwargs)
            return CriterionResult(number, title, passed, detail, time.perf_counter() - start, failures[:20])

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


# ---------------------------------------------------------------------------
# Query generators. A query is (h, z, zs, w, expected) where expected is the
# closed-form value derived from the construction.


@dataclass(frozen=True)
class Query:
    family: str
    h: object
    z: np.ndarray
    zs: np.ndarray
    w: np.ndarray
    expected: float


def _unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _rotation(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def _smooth_queries(rng, finite, infinite, down):
    out = []
    for k in range(finite + infinite + down):
        M = rng.uniform(-1, 1, (2, 2))
        Q = 0.5 * (M + M.T)
        a = rng.uniform(-1, 1, 2)
        f = PolyForm("quadratic", 2, Q=Q, a=a, c=rng.uniform(-1, 1))
        z = rng.uniform(-1, 1, 2)
        w = _unit(rng, 2) * rng.uniform(0.3, 1.0)
        grad = Q @ z + a
        if k < finite:
            out.append(Query("smooth quadratic", Smooth(f), z, grad, w, float(w @ Q @ w)))
        elif k < finite + infinite:
            d = _unit(rng, 2)
            d = d if d @ w > 0 else -d
            out.append(Query("smooth quadratic", Smooth(f), z, grad - rng.uniform(1, 3) * d, w, INF))
        else:
            d = _unit(rng, 2)
            if k % 2:
                # Orthogonal perturbation: the pairing still matches the slope.
                d = np.array([-w[1], w[0]]) / np.linalg.norm(w) * rng.uniform(20, 40)
            else:
                d = (d if d @ w > 0 else -d) * rng.uniform(1, 3)
            out.append(Query("smooth quadratic", Smooth(f), z, grad + d, w, -INF))
    return out


def _norm_queries(rng, finite, infinite):
    out = []
    for k in range(finite + infinite):
        h = EuclNorm(2)
        at_origin = k % 3 == 0
        w = _unit(rng, 2) * rng.uniform(0.3, 1.0)
        if k < finite:
            if at_origin:
                if k % 2:
                    out.append(Query("EuclNorm", h, np.zeros(2), _unit(rng, 2) * rng.uniform(0, 1), np.zeros(2), 0.0))
                else:
                    out.append(Query("EuclNorm", h, np.zeros(2), w / np.linalg.norm(w), w, 0.0))
            else:
                z = _unit(rng, 2) * rng.uniform(0.6, 2.0)
                u = z / np.linalg.norm(z)
                val = float(w @ w - (u @ w) ** 2) / np.linalg.norm(z)
                out.append(Query("EuclNorm", h, z, u, w, val))
        else:
            if at_origin:
                zs = _unit(rng, 2) * rng.uniform(0, 0.9)
                out.append(Query("EuclNorm", h, np.zeros(2), zs, w, INF))
            else:
                z = _unit(rng, 2) * rng.uniform(0.6, 2.0)
                u = z / np.linalg.norm(z)
                d = w / np.linalg.norm(w)
                out.append(Query("EuclNorm", h, z, u - rng.uniform(0.5, 1.5) * d, w, INF))
    return out


def _vecmax_queries(rng, finite, infinite):
    out = []
    n = 3
    for k in range(finite + infinite):
        m = rng.uniform(-1, 1)
        size = int(rng.integers(1 if k < finite else 2, n + 1))
        I = sorted(rng.choice(n, size, replace=False).tolist())
        z = np.array([m if i in I else m - rng.uniform(0.5, 1.5) for i in range(n)])
        w = rng.uniform(-1, 1, n)
        zs = np.zeros(n)
        if k >= finite:
            # Unique maximal active component; the multiplier sits on another one.
            w[I[0]] = max(w[i] for i in I) + 0.5
            zs[I[1]] = 1.0
            out.append(Query("VecMax", VecMax(n), z, zs, w, INF))
            continue
        if size >= 2 and k % 2:
            w[I[1]] = w[I[0]] = max(w[i] for i in I)
        top = max(w[i] for i in I)
        IW = [i for i in I if w[i] == top]
        zs[IW] = rng.dirichlet(np.ones(len(IW)))
        out.append(Query("VecMax", VecMax(n), z, zs, w, 0.0))
    return out


def _l0_queries(rng, finite, infinite):
    out = []
    n = 3
    for k in range(finite + infinite):
        zero = rng.random(n) < 0.5
        z = np.where(zero, 0.0, rng.choice([-1, 1], n) * rng.uniform(0.5, 2.0, n))
        zs = np.where(zero, rng.uniform(-2, 2, n), 0.0)
        w = np.where(zero, 0.0, rng.uniform(-1, 1, n))
        if k < finite:
            out.append(Query("L0", L0(n), z, zs, w, 0.0))
        else:
            if zero.any() and k % 2:
                j = int(np.flatnonzero(zero)[0])
                w[j] = rng.choice([-1, 1]) * rng.uniform(0.3, 1.0)
            else:
                j = int(np.flatnonzero(~zero)[0]) if (~zero).any() else None
                if j is None:
                    w[0] = 0.5
                else:
                    w[j] = 1.0 if w[j] == 0 else w[j]
                    zs = zs.copy()
                    zs[j] = -np.sign(w[j]) * rng.uniform(0.5, 2.0)
            out.append(Query("L0", L0(n), z, zs, w, INF))
    return out


def _halfline_cases(rng, finite: bool):
    """(y, zs, w, value) for the nonpositive half-line."""
    if finite:
        case = int(rng.integers(3))
        if case == 0:
            return -rng.uniform(0.2, 2), 0.0, rng.uniform(-1, 1), 0.0
        if case == 1:
            return 0.0, 0.0, -rng.uniform(0, 1), 0.0
        return 0.0, rng.uniform(0.1, 2), 0.0, 0.0
    if rng.random() < 0.5:
        return 0.0, rng.uniform(-2, 2), rng.uniform(0.3, 1), INF
    return 0.0, rng.uniform(0.1, 2), -rng.uniform(0.3, 1), INF


def _halfline_queries(rng, finite, infinite):
    h = Indicator(Polyhedron.nonpositive(1))
    out = []
    for k in range(finite + infinite):
        y, zs, w, val = _halfline_cases(rng, k < finite)
        out.append(Query("indicator half-line", h, np.array([y]), np.array([zs]), np.array([w]), val))
    return out


def _random_vertex_polyhedron(rng):
    y = rng.uniform(-1, 1, 2)
    t1 = rng.uniform(0, 2 * np.pi)
    t2 = t1 + rng.uniform(0.4, np.pi - 0.4) * rng.choice([-1, 1])
    a1 = np.array([np.cos(t1), np.sin(t1)])
    a2 = np.array([np.cos(t2), np.sin(t2)])
    a3 = _unit(rng, 2)
    A = np.vstack([a1, a2, a3])
    b = np.array([a1 @ y, a2 @ y, a3 @ y + rng.uniform(0.5, 1.5)])
    return Polyhedron(A, b), y, a1, a2


def _polyhedron_case(rng, finite: bool):
    P, y, a1, a2 = _random_vertex_polyhedron(rng)
    edge1 = np.array([-a1[1], a1[0]])
    edge1 = edge1 if edge1 @ a2 < 0 else -edge1
    case = int(rng.integers(4))
    if finite:
        if case == 0:
            w = -(a1 + a2) / 2 * rng.uniform(0.3, 1)
            return P, y, np.zeros(2), w, 0.0
        if case == 1:
            return P, y, rng.uniform(0.1, 2) * a1, rng.uniform(0.3, 1) * edge1, 0.0
        if case == 2:
            return P, y, rng.uniform(0, 2) * a1 + rng.uniform(0, 2) * a2, np.zeros(2), 0.0
        # Base point in the relative interior of the first edge.
        ye = y + rng.uniform(0.05, 0.3) * edge1
        if P.A[2] @ ye > P.b[2] - 1e-3:
            ye = y
            return P, ye, np.zeros(2), np.zeros(2), 0.0
        w = rng.uniform(0.3, 1) * rng.choice([-1, 1]) * edge1
        return P, ye, rng.uniform(0.1, 2) * a1, w, 0.0
    if case % 2:
        w = a1 * rng.uniform(0.3, 1) + 0.2 * edge1
        return P, y, np.zeros(2), w, INF
    return P, y, rng.uniform(0.5, 2) * a2, rng.uniform(0.3, 1) * edge1, INF


def _polyhedron_queries(rng, finite, infinite):
    out = []
    for k in range(finite + infinite):
        P, y, zs, w, val = _polyhedron_case(rng, k < finite)
        out.append(Query("indicator polyhedron", Indicator(P), y, zs, w, val))
    return out


def _complementarity_union(R, c):
    """Rotated and shifted copy of (R_+ x {0}) u ({0} x R_+)."""
    r1, r2 = R[:, 0], R[:, 1]
    P1 = Polyhedron(A=[-r1], b=[-r1 @ c], E=[r2], e=[r2 @ c])
    P2 = Polyhedron(A=[-r2], b=[-r2 @ c], E=[r1], e=[r1 @ c])
    return PolyhedralUnion((P1, P2))


def _union_case(rng, finite: bool):
    R = _rotation(rng, 2)
    c = rng.uniform(-1, 1, 2)
    U = _complementarity_union(R, c)
    s = rng.uniform(0.3, 1)
    case = int(rng.integers(4))
    if finite:
        if case == 0:
            yh, wh, zh = np.zeros(2), np.array([s, 0]), np.array([0, rng.uniform(-2, 2)])
        elif case == 1:
            yh, wh, zh = np.zeros(2), np.array([0, s]), np.array([rng.uniform(-2, 2), 0])
        elif case == 2:
            yh, wh, zh = np.zeros(2), np.zeros(2), -rng.uniform(0, 2, 2)
        else:
            yh = np.array([rng.uniform(0.2, 1), 0])
            wh, zh = np.array([rng.uniform(-1, 1), 0]), np.array([0, rng.uniform(-2, 2)])
        val = 0.0
    else:
        if case % 2:
            yh, wh, zh = np.zeros(2), np.array([s, s]), np.zeros(2)
        else:
            yh, wh, zh = np.zeros(2), np.array([s, 0]), np.array([-rng.uniform(0.5, 2), 0])
        val = INF
    return U, c + R @ yh, R @ zh, R @ wh, val


def _union_queries(rng, finite, infinite):
    out = []
    for k in range(finite + infinite):
        U, y, zs, w, val = _union_case(rng, k < finite)
        out.append(Query("indicator union", Indicator(U), y, zs, w, val))
    return out


def _box_case(rng, n, finite: bool):
    lo, hi = -np.ones(n), np.ones(n)
    y, zs, w = np.zeros(n), np.zeros(n), np.zeros(n)
    for j in range(n):
        where = int(rng.integers(3))
        if where == 0:
            y[j], w[j] = rng.uniform(-0.8, 0.8), rng.uniform(-1, 1)
        else:
            sign = -1.0 if where == 1 else 1.0
            y[j] = sign
            if rng.random() < 0.5:
                w[j] = -sign * rng.uniform(0, 1)
            else:
                zs[j] = sign * rng.uniform(0, 2)
    val = 0.0
    if not finite:
        j = int(rng.integers(n))
        y[j], zs[j] = 1.0, 0.0
        w[j] = rng.uniform(0.3, 1)
        val = INF
    return Box(lo, hi), y, zs, w, val


def _soc_case(rng, s, finite: bool):
    """Boundary, interior and apex configurations of the s-dimensional cone."""
    case = int(rng.integers(6)) if finite else int(rng.integers(2))
    if finite and case <= 3 or not finite:
        r = rng.uniform(0.3, 2)
        y = r * np.concatenate([[1.0], _unit(rng, s - 1)])
        q = np.concatenate([[-1.0], y[1:] / np.linalg.norm(y[1:])])
        beta = rng.uniform(0.05, 5)
        w = rng.uniform(-1, 1, s)
        w -= (q @ w) / (q @ q) * q
        if not finite:
            if case == 0:
                return y, np.zeros(s), w + rng.uniform(0.3, 1) * q, INF
            return y, beta * q, w - rng.uniform(0.3, 1) * q, INF
        zs = beta * q
        # Curvature (|lam| / |y|)(|w_bar|^2 - w_1^2), written without the q-vector shortcut.
        val = np.linalg.norm(zs) / np.linalg.norm(y) * (w[1:] @ w[1:] - w[0] ** 2)
        return y, zs, w, float(val)
    if case == 4:
        y = np.concatenate([[rng.uniform(0.5, 2)], np.zeros(s - 1)])
        y[1:] = _unit(rng, s - 1) * rng.uniform(0, 0.8) * y[0]
        return y, np.zeros(s), rng.uniform(-1, 1, s), 0.0
    theta = _unit(rng, s - 1)
    scale = rng.uniform(0.3, 1)
    w = scale * np.concatenate([[1.0], theta])
    zs = rng.uniform(0.1, 2) * np.concatenate([[-1.0], theta])
    return np.zeros(s), zs, w, 0.0


def _soc_queries(rng, s, finite, infinite):
    h = Indicator(SecondOrderCone(s))
    out = []
    for k in range(finite + infinite):
        y, zs, w, val = _soc_case(rng, s, k < finite)
        out.append(Query(f"indicator cone {s}", h, y, zs, w, val))
    return out


def _product_queries(rng, finite, infinite):
    S = Product((Polyhedron.nonpositive(1), Box(-np.ones(2), np.ones(2)), SecondOrderCone(3)))
    h = Indicator(S)
    out = []
    for k in range(finite + infinite):
        bad = -1 if k < finite else int(rng.integers(3))
        y1, z1, w1, v1 = _halfline_cases(rng, bad != 0)
        B, y2, z2, w2, v2 = _box_case(rng, 2, bad != 1)
        y3, z3, w3, v3 = _soc_case(rng, 3, bad != 2)
        out.append(
            Query(
                "indicator product",
                h,
                np.concatenate([[y1], y2, y3]),
                np.concatenate([[z1], z2, z3]),
                np.concatenate([[w1], w2, w3]),
                v1 + v2 + v3,
            )
        )
    return out


FAMILIES = (
    "smooth quadratic",
    "EuclNorm",
    "VecMax",
    "L0",
    "indicator half-line",
    "indicator polyhedron",
    "indicator union",
    "indicator product",
    "indicator cone 3",
    "indicator cone 4",
)


def family_queries(family: str, seed: int, finite: int = FINITE_PER_FAMILY, infinite: int = INFINITE_PER_FAMILY):
    rng = np.random.default_rng([seed, FAMILIES.index(family)])
    if family == "smooth quadratic":
        return _smooth_queries(rng, finite, infinite, infinite)
    if family == "EuclNorm":
        return _norm_queries(rng, finite, infinite)
    if family == "VecMax":
        return _vecmax_queries(rng, finite, infinite)
    if family == "L0":
        return _l0_queries(rng, finite, infinite)
    if family == "indicator half-line":
        return _halfline_queries(rng, finite, infinite)
    if family == "indicator polyhedron":
        return _polyhedron_queries(rng, finite, infinite)
    if family == "indicator union":
        return _union_queries(rng, finite, infinite)
    if family == "indicator product":
        return _product_queries(rng, finite, infinite)
    if family == "indicator cone 3":
        return _soc_queries(rng, 3, finite, infinite)
    return _soc_queries(rng, 4, finite, infinite)


def _agrees(a: float, b: float, atol: float = 1e-9, rtol: float = 1e-9) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= atol + rtol * abs(b)


def check_family(family: str, seed: int = 0, grid: SampleGrid = FAMILY_GRID):
    """Engine against construction and oracle; returns (finite_ok, counts, failures)."""
    counts = {"finite": 0, "up": 0, "down": 0}
    failures = []
    for i, q in enumerate(family_queries(family, seed)):
        val = d2(q.h, q.z, q.zs, q.w)
        if not (val.exact and _agrees(val.value, q.expected)):
            failures.append(f"{family}#{i}: engine {val.value} ({val.kind.value}) vs closed form {q.expected}")
            continue
        if math.isfinite(val.value):
            est = estimate_d2(q.h, q.z, q.zs, q.w, grid)
            ok = est.classification is Classification.CONVERGES_TO and abs(est.value - val.value) <= 1e-2 + 5e-2 * abs(
                val.value
            )
            key = "finite"
        elif val.value == INF:
            est = estimate_d2(q.h, q.z, q.zs, q.w, grid)
            ok = est.classification is Classification.DIVERGES_UP
            key = "up"
        else:
            est = estimate_d2(q.h, q.z, q.zs, q.w, SampleGrid())
            ok = est.classification is Classification.DIVERGES_DOWN
            key = "down"
        if ok:
            counts[key] += 1
        else:
            failures.append(f"{family}#{i}: engine {val.value} but oracle {est.label}")
    return counts, failures


@_timed(1, "closed-form and oracle agreement over ten atom families")
def criterion_1(seed: int = 0):
    failures, parts = [], []
    for fam in FAMILIES:
        counts, bad = check_family(fam, seed)
        failures += bad
        if counts["finite"] < FINITE_PER_FAMILY:
            failures.append(f"{fam}: only {counts['finite']} finite queries agreed")
        parts.append(f"{fam}: {counts['finite']}/{counts['up']}/{counts['down']}")
    return not failures, "finite/up/down agreements " + ", ".join(parts), failures


# ---------------------------------------------------------------------------


def halfline_table_value(zs: float, w: float) -> float:
    """Closed form of the half-line curvature at the origin."""
    if w > 0 or zs * w < 0:
        return INF
    if zs >= 0 and w <= 0 and zs * w == 0:
        return 0.0
    return -INF


_EXPECTED_CLASS = {INF: Classification.DIVERGES_UP, -INF: Classification.DIVERGES_DOWN}


@_timed(2, "half-line sign table")
def criterion_2():
    h = Indicator(Polyhedron.nonpositive(1))
    failures, cells = [], 0
    for zs in (-1.0, 0.0, 1.0):
        for w in (-1.0, 0.0, 1.0):
            expected = halfline_table_value(zs, w)
            val = d2(h, [0.0], [zs], [w])
            est = estimate_d2(h, [0.0], [zs], [w])
            cls = _EXPECTED_CLASS.get(expected, Classification.CONVERGES_TO)
            ok = val.exact and val.value == expected and est.classification is cls
            if ok and cls is Classification.CONVERGES_TO:
                ok = abs(est.value - expected) <= 1e-2
            if ok:
                cells += 1
            else:
                failures.append(f"zs={zs}, w={w}: engine {val.value} ({val.kind.value}), oracle {est.label}, expected {expected}")
    return cells == 9, f"{cells}/9 cells", failures


@_timed(3, "second-order cone boundary curvature")
def criterion_3(seed: int = 0, count: int = 100):
    rng = np.random.default_rng([seed, 3])
    h = Indicator(SecondOrderCone(3))
    failures, ok_count = [], 0
    for i in range(count):
        r = rng.uniform(0.2, 3)
        y = r * np.concatenate([[1.0], _unit(rng, 2)])
        q = np.concatenate([[-1.0], y[1:] / np.linalg.norm(y[1:])])
        beta = rng.uniform(1e-3, 5)
        zs = beta * q
        theta = y[1:] / np.linalg.norm(y[1:])
        along = rng.uniform(-1, 1) * np.concatenate([[1.0], theta])
        off = rng.choice([-1, 1]) * rng.uniform(0.3, 1) * np.array([0.0, -theta[1], theta[0]])
        v = along + off
        expected = np.linalg.norm(zs) / np.linalg.norm(y) * (v[1:] @ v[1:] - v[0] ** 2)
        val = d2(h, y, zs, v)
        est = estimate_d2(h, y, zs, v, FAMILY_GRID)
        engine_ok = val.exact and _agrees(val.value, expected)
        oracle_ok = est.classification is Classification.CONVERGES_TO and abs(est.value - val.value) <= 5e-2 * abs(val.value)
        if engine_ok and oracle_ok:
            ok_count += 1
        else:
            failures.append(f"#{i}: closed form {expected:.6g}, engine {val.value:.6g}, oracle {est.label}")
    return ok_count == count, f"{ok_count}/{count} boundary points", failures


@_timed(4, "pre-image curvature of the unit disc")
def criterion_4():
    bundle = load(fixture_path("disc_preimage"))
    # Unit disc, multiplier 2 times the unit normal, unit tangent: curvature 2 / radius 1 * |w|^2.
    expected = 2.0
    val = d2(bundle.h, bundle.point, bundle.multiplier, bundle.direction)
    est = estimate_d2(bundle.h, bundle.point, bundle.multiplier, bundle.direction)
    ok_engine = val.kind is Kind.EXACT and _agrees(val.value, expected)
    ok_oracle = est.classification is Classification.CONVERGES_TO and abs(est.value - expected) <= 5e-2
    detail = f"engine {val.value:.6g} ({val.kind.value}), oracle {est.label}"
    return ok_engine and ok_oracle, detail, [] if ok_engine and ok_oracle else [detail]


@_timed(5, "composite counterexample stays uncertified")
def criterion_5():
    p = load(fixture_path("flat_composite"))
    cert = certify(p)
    failures = []
    if cert.verdict is not Verdict.NOT_CERTIFIED or cert.witness is None or not np.linalg.norm(cert.witness) > 0:
        failures.append(f"certificate verdict {cert.verdict.value}, witness {cert.witness}")
    h = SumSmooth(p.f0, Compose(p.g, p.F))
    verdicts = []
    for eps in (1e-3, 1e-2, 1e-1):
        rep = verify_quadratic_growth(h, p.x, eps, delta=1e-1, n_samples=20_000, seed=0)
        verdicts.append(rep.verdict.value)
        if rep.verdict.value != "FailsAt":
            failures.append(f"growth at eps={eps}: {rep.verdict.value}")
    witness = None if cert.witness is None else [round(float(x), 12) for x in cert.witness]
    return not failures, f"verdict {cert.verdict.value}, witness {witness}, growth {verdicts}", failures


@_timed(6, "disjunctive toy end to end")
def criterion_6(seed: int = 0):
    start = time.perf_counter()
    p = load(fixture_path("disjunctive_toy"))
    cert = certify(p, SampledSphere(64, seed))
    failures = []
    if cert.verdict is not Verdict.CERTIFIED_ON_DIRECTIONS:
        failures.append(f"verdict {cert.verdict.value}")
        return False, f"verdict {cert.verdict.value}", failures
    eps = cert.growth_eps
    rep = verify_essential_min(p.f0, p.F, p.C, p.x, eps, 1e-2, 100_000, seed)
    if rep.verdict.value != "Holds":
        failures.append(f"essential minimum {rep.verdict.value} at {rep.witness}")
    elapsed = time.perf_counter() - start
    if elapsed >= 30:
        failures.append(f"took {elapsed:.1f}s")
    return not failures, f"value_min {cert.value_min:.4g}, eps {eps:.4g}, growth {rep.verdict.value}", failures


@_timed(7, "second-order cone disk end to end")
def criterion_7(seed: int = 7):
    failures = []
    p = load(fixture_path("socp_disk"))
    cert = certify(p, SampledSphere(64, seed))
    if cert.verdict is not Verdict.CERTIFIED_ON_DIRECTIONS:
        failures.append(f"disk verdict {cert.verdict.value}")
    for dc in cert.directions:
        if not dc:
            failures.append(f"direction {dc.u} not certified")
            continue
        u = dc.u
        # beta = 1 after normalizing alpha = 1; the curvature contribution is u2^2.
        lam_ok = np.allclose(dc.lam, [-1.0, 1.0, 0.0], atol=1e-9) and abs(dc.alpha - 1.0) <= 1e-12
        if not (lam_ok and abs(dc.value - u[1] ** 2) <= 1e-9 * (1 + u[1] ** 2)):
            failures.append(f"u={u}: value {dc.value}, lam {dc.lam}")
    eps = cert.growth_eps if cert.certified else 1e-3
    holds = verify_essential_min(p.f0, p.F, p.C, p.x, eps, 1e-2, 100_000, seed)
    rot = load(fixture_path("socp_disk_rotated"))
    rcert = certify(rot, SampledSphere(64, seed))
    if rcert.verdict is not Verdict.NOT_CERTIFIED:
        failures.append(f"rotated verdict {rcert.verdict.value}")
    fails = verify_essential_min(rot.f0, rot.F, rot.C, rot.x, eps, 1e-2, 100_000, seed)
    if holds.verdict.value != "Holds":
        failures.append(f"disk growth {holds.verdict.value}")
    if fails.verdict.value != "FailsAt":
        failures.append(f"rotated growth {fails.verdict.value}")
    detail = (
        f"disk {cert.verdict.value} over {len(cert.directions)} directions, growth {holds.verdict.value}; "
        f"rotated {rcert.verdict.value}, growth {fails.verdict.value}"
    )
    return not failures, detail, failures


# ---------------------------------------------------------------------------


def _scaled_smooth(h: Smooth, alpha: float) -> Smooth:
    f = h.f
    return Smooth(PolyForm("quadratic", f.dim_in, Q=alpha * f.Q, a=alpha * f.a, c=alpha * f.c))


def _same(a, b) -> bool:
    if a.kind is not b.kind:
        return False
    if math.isinf(a.value) or math.isinf(b.value):
        return a.value == b.value
    return math.isclose(a.value, b.value, rel_tol=1e-12, abs_tol=1e-12)


@_timed(8, "positive homogeneity identities")
def criterion_8(seed: int = 0, count: int = 500):
    rng = np.random.default_rng([seed, 8])
    pools = {fam: family_queries(fam, seed + 1) for fam in FAMILIES}
    failures, held = [], 0
    for i in range(count):
        fam = FAMILIES[i % len(FAMILIES)]
        q = pools[fam][int(rng.integers(len(pools[fam])))]
        alpha = float(rng.uniform(1e-3, 10))
        if isinstance(q.h, Indicator):
            # Scaling the multiplier of an indicator scales the value.
            lhs = d2(q.h, q.z, alpha * q.zs, q.w)
            rhs = d2(q.h, q.z, q.zs, q.w).scaled(alpha)
            kind = "multiplier"
        else:
            scaled = _scaled_smooth(q.h, alpha) if isinstance(q.h, Smooth) else Scaled(alpha, q.h)
            lhs = d2(scaled, q.z, q.zs, q.w)
            rhs = d2(q.h, q.z, q.zs / alpha, q.w).scaled(alpha)
            kind = "function"
        if _same(lhs, rhs):
            held += 1
        else:
            failures.append(
                f"#{i} {fam} ({kind}, alpha={alpha:.4g}): {lhs.value} {lhs.kind.value} vs {rhs.value} {rhs.kind.value}"
            )
    return held == count, f"{held}/{count} identities", failures


# ---------------------------------------------------------------------------

SET_FAMILIES = ("half-line", "polyhedron", "union", "box", "product", "cone 3", "cone 4")


def _set_query(family, rng):
    finite = rng.random() < 0.7
    if family == "half-line":
        y, zs, w, _ = _halfline_cases(rng, finite)
        S, y, zs, w = Polyhedron.nonpositive(1), np.array([y]), np.array([zs]), np.array([w])
    elif family == "polyhedron":
        S, y, zs, w, _ = _polyhedron_case(rng, finite)
    elif family == "union":
        S, y, zs, w, _ = _union_case(rng, finite)
    elif family == "box":
        S, y, zs, w, _ = _box_case(rng, 3, finite)
    elif family == "product":
        y1, z1, w1, _ = _halfline_cases(rng, finite)
        _, y2, z2, w2, _ = _box_case(rng, 2, finite)
        y3, z3, w3, _ = _soc_case(rng, 3, finite)
        S = Product((Polyhedron.nonpositive(1), Box(-np.ones(2), np.ones(2)), SecondOrderCone(3)))
        y, zs, w = np.concatenate([[y1], y2, y3]), np.concatenate([[z1], z2, z3]), np.concatenate([[w1], w2, w3])
    else:
        s = int(family[-1])
        y, zs, w, _ = _soc_case(rng, s, finite)
        S = SecondOrderCone(s)
    if rng.random() < 0.3:
        # A generic multiplier mostly lands outside the normal cone.
        zs = rng.uniform(-2, 2, len(zs))
    return S, np.asarray(y, float), np.asarray(zs, float), np.asarray(w, float)


@_timed(9, "second-order finiteness matches proximal normal membership")
def criterion_9(seed: int = 0, count: int = 200):
    rng = np.random.default_rng([seed, 9])
    failures, agreed, tally = [], 0, {"yes": 0, "no": 0}
    total = 0
    for fam in SET_FAMILIES:
        for i in range(count):
            S, y, zs, w = _set_query(fam, rng)
            total += 1
            val = d2(Indicator(S), y, zs, w)
            pre = proximal_normal_member(S, y, w, zs, "pre")
            normal = proximal_normal_member(S, y, w, zs, "normal")
            tangent = tangent_status(S, y, w)
            problems = []
            if not val.exact or Ternary.UNKNOWN in (pre, normal) or not tangent.exact:
                problems.append("undecided on an exact atom")
            elif not tangent.member:
                if val.value != INF or pre is not Ternary.NO:
                    problems.append("non-tangent direction")
            else:
                if (val.value > -INF) != (pre is Ternary.YES):
                    problems.append("pre-normal membership")
                if math.isfinite(val.value) and normal is not Ternary.YES:
                    problems.append("finite value outside the normal cone")
            if problems:
                failures.append(f"{fam}#{i}: {problems} d2={val.value} pre={pre.name} normal={normal.name}")
            else:
                agreed += 1
                tally["yes" if pre is Ternary.YES else "no"] += 1
    detail = f"{agreed}/{total} queries consistent ({tally['yes']} members, {tally['no']} non-members)"
    return agreed == total, detail, failures


# ---------------------------------------------------------------------------


@_timed(10, "projection alignment and the sphere-center probe")
def criterion_10():
    probes = {
        "half-line": (Polyhedron.nonpositive(1), [0.0], [-1.0]),
        "box": (Box([-1.0, -1.0], [1.0, 1.0]), [1.0, 0.0], [-1.0, 0.5]),
        "box corner": (Box([-1.0, -1.0], [1.0, 1.0]), [1.0, 1.0], [-1.0, 0.0]),
        "cone 3": (SecondOrderCone(3), [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]),
        "cone 3 inward": (SecondOrderCone(3), [1.0, 1.0, 0.0], [1.0, 0.0, 0.5]),
    }
    failures, parts = [], []
    for name, (S, x, u) in probes.items():
        res = projection_alignment_probe(S, x, u).final_residual
        parts.append(f"{name} {res:.2e}")
        if not res < 1e-3:
            failures.append(f"{name}: residual {res}")
    ratios = sequence_ratio_probe(circle_projection, [0.0, 0.0], [1.0, 0.0], sphere_center_sequence(12))
    parts.append(f"sphere ratio {ratios[-1]:.4g} at level 12")
    if not ratios[-1] > 10:
        failures.append(f"sphere ratio {ratios[-1]}")
    return not failures, ", ".join(parts), failures


@_timed(11, "rational simplex against Fourier-Motzkin")
def criterion_11(seed: int = 0, count: int = 1000):
    rng = np.random.default_rng([seed, 11])
    failures, feasible = [], 0
    for i in range(count):
        n = int(rng.integers(1, 7))
        rows = int(rng.integers(1, 13))
        lp = RationalLP(exact=True)
        for j in range(n):
            lp.add_var(nonneg=bool(rng.random() < 0.5))
        for _ in range(rows):
            coeffs = {j: int(c) for j, c in enumerate(rng.integers(-3, 4, n))}
            rhs = int(rng.integers(-4, 5))
            kind = rng.random()
            (lp.add_eq if kind < 0.2 else lp.add_le if kind < 0.6 else lp.add_ge)(coeffs, rhs)
        res = lp_feasible(lp)
        fm = fourier_motzkin_feasible(lp)
        if res.feasible != fm or (res.feasible and not lp.satisfied_by(res.point)):
            failures.append(f"system {i}: simplex {res.feasible}, elimination {fm}")
        feasible += res.feasible
    return not failures, f"{count - len(failures)}/{count} agree ({feasible} feasible)", failures


CRITERIA = (
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
)


def run_all(only=None, echo=print) -> list[CriterionResult]:
    results = []
    for k, fn in enumerate(CRITERIA, start=1):
        if only and k not in only:
            continue
        res = fn()
        results.append(res)
        if echo:
            echo(res.line())
            for f in res.failures:
                echo(f"    {f}")
    return results
