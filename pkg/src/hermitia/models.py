"""Model geometries: projective space, Grassmannian charts, and scans.

The Grassmannian metric is built twice, by independent routes:

* a closed-form Gram field kron(P, Q^T) with P = (I + Z Z*)^-1 and
  Q = (I + Z* Z)^-1, derived from b(V, W) = tr(P V Q W^H) on the chart
  {row space of [I | Z]};
* the pullback of the projective potential along the minor (Pluecker)
  coordinates, log ||p(Z)||^2, whose derivatives come from the exact
  monomial machinery in :mod:`hermitia.fields`.

The closed form is certified against the potential route at seeded
points during construction; the two stay within 1e-8 of each other on
the whole chart region, which is what the minor-coordinate scan in the
acceptance suite rechecks at scale.
"""

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .charts import ChartField, curvature_tensor, hsc_of_tensor
from .errors import ConfigError, HermitiaError, NotPositiveAtPoint
from .fields import MonomialMap, from_potential_map, fs_monomials

FS_CHART_RADIUS = 2.0
GR_CHART_RADIUS = 2.0
DEFAULT_FS_REGION = 0.9
DEFAULT_GR_REGION = 0.7
DEFAULT_FIBRATION_REGION = 0.7


def fubini_study_chart(n):
    """Standard-chart metric field of complex projective n-space."""
    if n < 1:
        raise ConfigError("projective space needs n >= 1")
    return from_potential_map(
        fs_monomials(n), radius=FS_CHART_RADIUS, name="fs:%d" % n
    )


# ---------------------------------------------------------------------------
# Grassmannian: minor-coordinate potential route


def _minor_monomials(k, n, cols):
    """The k x k minor of [I_k | Z] on a column subset, as monomial data.

    Entries are either constants (identity block) or single chart
    variables Z[i][j] at flat index i*(n-k)+j, so each permutation term
    contributes one monomial with coefficient equal to the signature.
    """
    m = k * (n - k)
    terms = {}
    for perm in itertools.permutations(range(k)):
        sign = 1.0
        seen = list(perm)
        # signature by counting inversions
        inv = sum(
            1 for i in range(k) for j in range(i + 1, k) if seen[i] > seen[j]
        )
        sign = -1.0 if inv % 2 else 1.0
        coeff = sign
        exps = [0] * m
        dead = False
        for row in range(k):
            col = cols[perm[row]]
            if col < k:
                if col != row:
                    dead = True
                    break
            else:
                exps[row * (n - k) + (col - k)] += 1
        if dead or coeff == 0.0:
            continue
        key = tuple(exps)
        terms[key] = terms.get(key, 0.0) + coeff
    return [(c, e) for e, c in terms.items() if c != 0.0]


def pluecker_monomials(k, n):
    """Monomial map whose components are all k x k minors of [I_k | Z]."""
    comps = []
    for cols in itertools.combinations(range(n), k):
        mono = _minor_monomials(k, n, cols)
        if mono:
            comps.append(mono)
    return MonomialMap(k * (n - k), comps)


def pluecker_pullback(k, n):
    """Gram field of the potential log ||p(Z)||^2 in minor coordinates."""
    if not 1 <= k < n:
        raise ConfigError("need 1 <= k < n")
    return from_potential_map(
        pluecker_monomials(k, n), radius=GR_CHART_RADIUS, name="pluecker:%d:%d" % (k, n)
    )


# ---------------------------------------------------------------------------
# Grassmannian: closed-form route


def _unit(rows, cols, i, j):
    e = np.zeros((rows, cols), dtype=complex)
    e[i, j] = 1.0
    return e


def _grassmann_tensors(z, k, n):
    """gram, d_gram, dd_gram of the closed-form chart metric at Z."""
    q_dim = n - k
    zm = z.reshape(k, q_dim)
    p = np.linalg.inv(np.eye(k) + zm @ zm.conj().T)
    q = np.linalg.inv(np.eye(q_dim) + zm.conj().T @ zm)
    m = k * q_dim

    def split(e):
        return divmod(e, q_dim)

    dp = np.empty((m, k, k), dtype=complex)
    dq = np.empty((m, q_dim, q_dim), dtype=complex)
    dbp = np.empty((m, k, k), dtype=complex)
    dbq = np.empty((m, q_dim, q_dim), dtype=complex)
    for e in range(m):
        a, b = split(e)
        eab = _unit(k, q_dim, a, b)
        eba = _unit(q_dim, k, b, a)
        dp[e] = -p @ eab @ zm.conj().T @ p
        dq[e] = -q @ zm.conj().T @ eab @ q
        dbp[e] = -p @ zm @ eba @ p
        dbq[e] = -q @ eba @ zm @ q

    gram = np.kron(p, q.T)
    d_gram = np.stack([np.kron(dp[e], q.T) + np.kron(p, dq[e].T) for e in range(m)])
    dd_gram = np.empty((m, m, m, m), dtype=complex)
    for e in range(m):
        a, b = split(e)
        eab = _unit(k, q_dim, a, b)
        for f in range(m):
            c, d = split(f)
            edc = _unit(q_dim, k, d, c)
            ddp = (
                p @ eab @ zm.conj().T @ p @ zm @ edc @ p
                + p @ zm @ edc @ p @ eab @ zm.conj().T @ p
            )
            if b == d:
                ddp = ddp - p @ _unit(k, k, a, c) @ p
            ddq = (
                q @ zm.conj().T @ eab @ q @ edc @ zm @ q
                + q @ edc @ zm @ q @ zm.conj().T @ eab @ q
            )
            if c == a:
                ddq = ddq - q @ _unit(q_dim, q_dim, d, b) @ q
            dd_gram[e, f] = (
                np.kron(ddp, q.T)
                + np.kron(dp[e], dbq[f].T)
                + np.kron(dbp[f], dq[e].T)
                + np.kron(p, ddq.T)
            )
    return gram, d_gram, dd_gram


@dataclass
class GrassmannChartModel:
    """Chart model of the k-planes in C^n with its tangent metric field."""

    k: int
    n: int
    field: ChartField

    @property
    def m(self):
        return self.k * (self.n - self.k)

    def flat_index(self, a, b):
        return a * (self.n - self.k) + b

    def direction(self, matrix):
        """Flatten a k x (n-k) tangent matrix into chart coordinates."""
        return np.asarray(matrix, dtype=complex).reshape(self.m)

    @property
    def hsc_lower(self):
        return 2.0 / self.k**2

    @property
    def hsc_upper(self):
        return 2.0


def grassmannian_chart(k, n, certify=True):
    """Closed-form chart metric, certified against the minor-potential route."""
    if not 1 <= k < n:
        raise ConfigError("need 1 <= k < n")
    m = k * (n - k)

    def eval_fn(z):
        return _grassmann_tensors(z, k, n)[0]

    def d_fn(z):
        return _grassmann_tensors(z, k, n)[1]

    def dd_fn(z):
        return _grassmann_tensors(z, k, n)[2]

    field = ChartField(
        m,
        m,
        eval_fn,
        radius=GR_CHART_RADIUS,
        d_fn=d_fn,
        dd_fn=dd_fn,
        name="gr:%d:%d" % (k, n),
    )
    if certify:
        oracle = pluecker_pullback(k, n)
        rng = np.random.default_rng(np.random.SeedSequence([19, k, n]))
        for _ in range(3):
            z = 0.35 * (rng.uniform(-1, 1, m) + 1j * rng.uniform(-1, 1, m))
            g1, g2 = field.gram(z), oracle.gram(z)
            err = np.linalg.norm(g1 - g2) / (1.0 + np.linalg.norm(g2))
            if err > 1e-8:
                raise HermitiaError(
                    "closed-form chart metric disagrees with the minor-potential "
                    "construction (%.2e at a certification point)" % err
                )
    return GrassmannChartModel(k=k, n=n, field=field)


# ---------------------------------------------------------------------------
# Ricci form and the Einstein check


def ricci(field: ChartField, z):
    """Ricci Gram matrix -d dbar log det G at a point (analytic route)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    g = field.gram(z)
    w = np.linalg.eigvalsh(g)
    if w[0] <= field.rank_tol * max(abs(w[-1]), 1e-300):
        raise NotPositiveAtPoint("Ricci form needs a positive-definite metric")
    gi = np.linalg.inv(g)
    dg = field.d(z)
    dbg = field.dbar(z)
    ddg = field.dd(z)
    m = field.m
    ric = np.empty((m, m), dtype=complex)
    for j in range(m):
        for k in range(m):
            ric[j, k] = np.trace(gi @ dbg[j] @ gi @ dg[k]) - np.trace(gi @ ddg[k, j])
    return 0.5 * (ric + ric.conj().T)


def einstein_residual(field: ChartField, constant, region=0.5, points=10, seed=0):
    """max over sampled points of ||Ric - c G|| / ||G||."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    worst = 0.0
    for _ in range(points):
        z = _sample_polydisc(rng, field.m, region)
        g = field.gram(z)
        resid = np.linalg.norm(ricci(field, z) - constant * g) / np.linalg.norm(g)
        worst = max(worst, float(resid))
    return worst


# ---------------------------------------------------------------------------
# extremal HSC scan


@dataclass
class HscScanResult:
    min_H: float
    max_H: float
    argmin: tuple
    argmax: tuple
    samples: int
    region: float
    seed: int

    def as_dict(self):
        return {
            "min_H": self.min_H,
            "max_H": self.max_H,
            "argmin_point": [[float(v.real), float(v.imag)] for v in self.argmin[0]],
            "argmin_direction": [[float(v.real), float(v.imag)] for v in self.argmin[1]],
            "argmax_point": [[float(v.real), float(v.imag)] for v in self.argmax[0]],
            "argmax_direction": [[float(v.real), float(v.imag)] for v in self.argmax[1]],
            "samples": self.samples,
            "region": self.region,
            "seed": self.seed,
        }


def _sample_polydisc(rng, m, radius):
    u = np.sqrt(rng.random(m))
    t = rng.random(m)
    return radius * u * np.exp(2j * np.pi * t)


def _unit_direction(rng, m):
    v = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return v / np.linalg.norm(v)


def _refine_direction(tensor, g, v0, steps, sign, eps=1e-5):
    """Projected finite-difference gradient walk of H on the direction sphere."""
    v = v0 / np.linalg.norm(v0)
    best = hsc_of_tensor(tensor, g, v)
    alpha = 0.1
    m = v.size
    for _ in range(steps):
        grad = np.zeros(m, dtype=complex)
        for i in range(m):
            e = np.zeros(m, dtype=complex)
            e[i] = eps
            grad[i] = (hsc_of_tensor(tensor, g, v + e) - hsc_of_tensor(tensor, g, v - e)) / (
                2 * eps
            )
            grad[i] += (
                1j
                * (hsc_of_tensor(tensor, g, v + 1j * e) - hsc_of_tensor(tensor, g, v - 1j * e))
                / (2 * eps)
            )
        grad -= np.real(np.vdot(v, grad)) * v  # tangent to the sphere
        if np.linalg.norm(grad) < 1e-14:
            break
        improved = False
        step = alpha
        for _ in range(20):
            cand = v + sign * step * grad
            cand /= np.linalg.norm(cand)
            val = hsc_of_tensor(tensor, g, cand)
            if sign * (val - best) > 0:
                v, best = cand, val
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return v, best


def _map_ordered(fn, items, threads):
    if threads is None or threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def hsc_extremes(
    field: ChartField,
    region,
    samples=2000,
    optimizer_steps=200,
    seed=0,
    directions_per_point=20,
    threads=None,
):
    """Seeded sample-then-refine scan for extremal sectional curvature.

    The curvature tensor is computed once per sampled point and reused
    across that point's direction batch; refinement runs projected
    gradient descent/ascent on the direction sphere at the incumbent
    minimizer and maximizer.
    """
    n_points = max(1, samples // directions_per_point)

    def scan_point(idx):
        rng = np.random.default_rng(np.random.SeedSequence([seed, idx]))
        z = _sample_polydisc(rng, field.m, region)
        curv = curvature_tensor(field, z)
        g = curv.form_at_point.gram
        local = []
        for _ in range(directions_per_point):
            v = _unit_direction(rng, field.m)
            local.append((hsc_of_tensor(curv.tensor, g, v), z, v))
        return local, curv.tensor, g

    results = _map_ordered(scan_point, range(n_points), threads)
    lo, hi = None, None
    for local, tensor, g in results:
        for h, z, v in local:
            if lo is None or h < lo[0]:
                lo = (h, z, v, tensor, g)
            if hi is None or h > hi[0]:
                hi = (h, z, v, tensor, g)

    v_min, h_min = _refine_direction(lo[3], lo[4], lo[2], optimizer_steps, sign=-1.0)
    v_max, h_max = _refine_direction(hi[3], hi[4], hi[2], optimizer_steps, sign=+1.0)
    return HscScanResult(
        min_H=float(h_min),
        max_H=float(h_max),
        argmin=(lo[1], v_min),
        argmax=(hi[1], v_max),
        samples=n_points * directions_per_point,
        region=float(region),
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# model registry


@dataclass
class ModelEntry:
    id: str
    kind: str  # "metric" or "fibration"
    field: ChartField = None
    grassmann: GrassmannChartModel = None
    fibration: object = None
    einstein_constant: float = None
    default_region: float = DEFAULT_FS_REGION
    hsc_lower: float = None
    hsc_upper: float = None


def _parse_fs_token(token):
    if not token.startswith("fs"):
        raise ConfigError("expected a projective-space token, got %r" % token)
    try:
        return int(token[2:])
    except ValueError:
        raise ConfigError("bad projective-space token %r" % token)


def resolve_model(model_id: str) -> ModelEntry:
    """Look up a model id like "fs:2", "gr:2:4", "prod:fs1:fs1", "hirz:1"."""
    parts = str(model_id).split(":")
    try:
        if parts[0] == "fs" and len(parts) == 2:
            n = int(parts[1])
            return ModelEntry(
                id=model_id,
                kind="metric",
                field=fubini_study_chart(n),
                einstein_constant=float(n + 1),
                default_region=DEFAULT_FS_REGION,
                hsc_lower=2.0,
                hsc_upper=2.0,
            )
        if parts[0] == "gr" and len(parts) == 3:
            k, n = int(parts[1]), int(parts[2])
            gcm = grassmannian_chart(k, n)
            return ModelEntry(
                id=model_id,
                kind="metric",
                field=gcm.field,
                grassmann=gcm,
                einstein_constant=float(n),
                default_region=DEFAULT_GR_REGION,
                hsc_lower=gcm.hsc_lower,
                hsc_upper=gcm.hsc_upper,
            )
        if parts[0] == "prod" and len(parts) == 3:
            from .fibration import product_model

            base = fubini_study_chart(_parse_fs_token(parts[1]))
            fiber = fubini_study_chart(_parse_fs_token(parts[2]))
            model = product_model(base, fiber)
            return ModelEntry(
                id=model_id,
                kind="fibration",
                fibration=model,
                default_region=DEFAULT_FIBRATION_REGION,
            )
        if parts[0] == "hirz" and len(parts) == 2:
            from .fibration import hirzebruch_model

            model = hirzebruch_model(int(parts[1]))
            return ModelEntry(
                id=model_id,
                kind="fibration",
                fibration=model,
                default_region=DEFAULT_FIBRATION_REGION,
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("malformed model id %r: %s" % (model_id, exc))
    raise ConfigError("unknown model id %r" % model_id)
