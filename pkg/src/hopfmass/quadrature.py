"""Quadrature backends and limit extrapolation.

Two integration paths over projective space:

* ``mc`` (any n): draw z uniformly on S^{2n+1} by normalizing complex
  Gaussian vectors.  The pushforward of the uniform probability measure
  under the Hopf projection is the normalized Fubini-Study volume, so
  int_{CP^n} f omega^n = pi^n * E[f].  Estimates carry a standard error.

* ``tensor`` (n = 1 only): a deterministic product rule in the chart,
  written in log-radius x = log|zeta| and fibre angle phi.  With the
  conventions of :mod:`hopfmass.geometry`,

      int_{CP^1} f omega = int int f(zeta) w(x) dx dphi,
      w(x) = e^{2x} / (1 + e^{2x})^2,

  integrated by composite Gauss-Legendre panels of unit length in x and a
  uniform (spectrally accurate, periodic) grid in phi.  The log-radius
  variable matters: the transversal curvature of functions with a
  log-radius scale t concentrates near x = t at O(1) width and height in
  x, so panels covering [t - pad, pad] resolve it at every t, which no
  fixed compactification to [0, 1] can do.

For integrands that depend on the chart coordinate only through the
moduli |zeta_a| (every toric catalog member), ``toric_nodes`` drops the
angles entirely and integrates the exact marginal density

    p(x_1..x_n) = n! 2^n exp(2 sum x_a) / (1 + sum e^{2 x_a})^{n+1}

on a log-radius grid, which stays affordable at n = 2 where a full
product rule would not be.

Randomness is counter based: every consumer derives its generator from
``rng_stream(seed, stream)`` (Philox keyed by the pair), so runs with the
same scheme are bit-for-bit reproducible and independent purposes never
share a stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, pi

import numpy as np

from .errors import BadRadii, InsufficientData, UnsupportedDimension
from .geometry import project_ambient_batch

__all__ = [
    "IntegrationScheme",
    "Estimate",
    "NodeSet",
    "rng_stream",
    "sample_sphere",
    "cpn_nodes",
    "toric_nodes",
    "integrate_cpn",
    "integrate_shell",
    "sphere_mean",
    "sphere_means_shared",
    "extrapolate_limit",
]

# stream ids, so distinct purposes never reuse random numbers
STREAM_CPN = 1
STREAM_SHELL = 2
STREAM_SPHERE_MEAN = 3
STREAM_MOLLIFY = 4
STREAM_DIRECTION = 5
STREAM_POSITIVITY = 6


@dataclass(frozen=True)
class IntegrationScheme:
    """How integrals over CP^n / S^{2n+1} are estimated.

    kind        'mc' or 'tensor' (tensor requires n = 1)
    samples     Monte Carlo sample count
    seed        base RNG seed; streams are derived per purpose
    chart_order Gauss-Legendre order per unit panel of the tensor rule
    phi_order   number of uniform fibre-angle nodes of the tensor rule
    """

    kind: str = "mc"
    samples: int = 200_000
    seed: int = 0
    chart_order: int = 12
    phi_order: int = 48

    def __post_init__(self):
        if self.kind not in ("mc", "tensor"):
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.samples <= 1:
            raise ValueError("samples must exceed 1")


@dataclass(frozen=True)
class Estimate:
    """A numeric estimate with a (possibly zero) standard error."""

    value: float
    stderr: float
    samples: int

    def within(self, target: float, sigmas: float = 3.0, floor: float = 1e-9) -> bool:
        return abs(self.value - target) <= sigmas * self.stderr + floor


def rng_stream(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator for (seed, stream); deterministic and
    independent across distinct stream ids."""
    return np.random.Generator(
        np.random.Philox(key=[np.uint64(seed), np.uint64(stream)]))


def sample_sphere(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points on S^{2n+1} subset C^{n+1}, shape (count, n+1)."""
    z = rng.standard_normal((count, n + 1)) + 1j * rng.standard_normal((count, n + 1))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# node sets on CP^n
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NodeSet:
    """Evaluation nodes on CP^n with weights normalized so that
    sum(weights) estimates (1/pi^n) int omega^n = 1.

    For 'mc' nodes the weights are all 1/N and `stochastic` is True, so a
    weighted mean of kernel values carries the usual standard error.  For
    'tensor' nodes the weights are deterministic quadrature weights.
    """

    charts: np.ndarray   # (N,) int
    zeta: np.ndarray     # (N, n) complex
    weights: np.ndarray  # (N,) float, sums to ~1
    stochastic: bool

    def average(self, values: np.ndarray) -> Estimate:
        """Weighted average of kernel values = estimate of
        (1/pi^n) int f omega^n, with standard error when stochastic."""
        values = np.asarray(values, dtype=float)
        est = float(np.sum(self.weights * values))
        if self.stochastic:
            var = float(np.sum(self.weights * (values - est) ** 2))
            stderr = np.sqrt(var / len(values))
        else:
            stderr = 0.0
        return Estimate(est, stderr, len(values))


def _tensor_nodes_1d(order: int, window: tuple[float, float]):
    """Composite Gauss-Legendre nodes/weights for int w(x) dx over the
    window, split into unit-length panels."""
    x, w = _log_radius_panels(order, window)
    dens = np.exp(2 * x) / (1.0 + np.exp(2 * x)) ** 2  # FS radial density in x
    return x, w * dens


def cpn_nodes(n: int, scheme: IntegrationScheme, stream: int = STREAM_CPN,
              radial_window: tuple[float, float] | None = None) -> NodeSet:
    """Build evaluation nodes for integrals over CP^n.

    `radial_window` (tensor only) is the log-radius range covered by the
    panels; callers integrating functions with features at log-radius t
    should pass a window containing t with some padding.
    """
    if scheme.kind == "mc":
        rng = rng_stream(scheme.seed, stream)
        z = sample_sphere(n, scheme.samples, rng)
        charts, zeta, _ = project_ambient_batch(z)
        weights = np.full(scheme.samples, 1.0 / scheme.samples)
        return NodeSet(charts, zeta, weights, stochastic=True)

    if n != 1:
        raise UnsupportedDimension("tensor rule is implemented for n = 1 only")
    window = radial_window if radial_window is not None else (-30.0, 25.0)
    x, wx = _tensor_nodes_1d(scheme.chart_order, window)
    m = scheme.phi_order
    phi = 2.0 * pi * np.arange(m) / m
    wphi = 2.0 * pi / m
    zeta = (np.exp(x)[:, None] * np.exp(1j * phi)[None, :]).ravel()
    weights = (np.repeat(wx, m) * wphi) / pi  # normalize by pi = vol(CP^1)
    charts = np.zeros(zeta.size, dtype=int)
    return NodeSet(charts, zeta[:, None], weights, stochastic=False)


def _log_radius_panels(order: int, window: tuple[float, float]):
    """Raw composite Gauss-Legendre nodes/weights on the window (no
    density factor)."""
    xlo, xhi = window
    if not xhi > xlo:
        raise BadRadii("empty radial window")
    base_x, base_w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(xlo, xhi, int(np.ceil(xhi - xlo)) + 1)
    xs = [0.5 * (a + b) + 0.5 * (b - a) * base_x for a, b in zip(edges[:-1], edges[1:])]
    ws = [0.5 * (b - a) * base_w for a, b in zip(edges[:-1], edges[1:])]
    return np.concatenate(xs), np.concatenate(ws)


def toric_nodes(n: int, scheme: IntegrationScheme,
                radial_window: tuple[float, float]) -> NodeSet:
    """Deterministic nodes valid for integrands that depend only on the
    chart moduli |zeta_a| (torus-invariant integrands).

    The fibre angles integrate out exactly, leaving the log-radius
    marginal density p(x) = n! 2^n exp(2 sum x) (1 + sum e^{2x_a})^{-(n+1)}
    on R^n; composite Gauss-Legendre panels cover `radial_window` in every
    coordinate.  Nodes are placed at real positive zeta.  Supported for
    n = 1, 2 (the n = 3 grid would be prohibitive).
    """
    if n not in (1, 2):
        raise UnsupportedDimension("toric nodes are implemented for n = 1, 2")
    x, w = _log_radius_panels(scheme.chart_order, radial_window)
    if n == 1:
        xs = x[:, None]
        wt = w
    else:
        xa, xb = np.meshgrid(x, x, indexing="ij")
        xs = np.column_stack([xa.ravel(), xb.ravel()])
        wt = np.outer(w, w).ravel()
    expo = np.exp(2.0 * xs)
    dens = factorial(n) * 2.0 ** n * np.prod(expo, axis=1) \
        / (1.0 + np.sum(expo, axis=1)) ** (n + 1)
    # express each node in the chart of its dominant homogeneous
    # coordinate: all chart moduli stay <= 1, which keeps the kernel
    # evaluations well conditioned over the wide deterministic windows
    padded = np.column_stack([np.zeros(len(xs)), xs])
    charts = np.argmax(padded, axis=1)
    zeta = np.empty_like(xs)
    for c in range(n + 1):
        sel = charts == c
        if not np.any(sel):
            continue
        others = [j for j in range(n + 1) if j != c]
        zeta[sel] = padded[sel][:, others] - padded[sel][:, c:c + 1]
    zeta = np.exp(zeta).astype(complex)
    return NodeSet(charts, zeta, wt * dens, stochastic=False)


def integrate_cpn(f, n: int, scheme: IntegrationScheme,
                  stream: int = STREAM_CPN,
                  radial_window: tuple[float, float] | None = None) -> Estimate:
    """Estimate int_{CP^n} f omega_FS^n.

    `f(zeta, chart)` must accept a batch of chart coordinates of one chart
    (shape (N, n)) and return a real array of shape (N,).
    """
    nodes = cpn_nodes(n, scheme, stream, radial_window)
    values = np.empty(len(nodes.weights))
    for c in np.unique(nodes.charts):
        sel = nodes.charts == c
        values[sel] = f(nodes.zeta[sel], int(c))
    est = nodes.average(values)
    return Estimate(est.value * pi ** n, est.stderr * pi ** n, est.samples)


# ---------------------------------------------------------------------------
# shells and spherical means
# ---------------------------------------------------------------------------

def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{2n+1} in R^{2n+2}."""
    return 2.0 * pi ** (n + 1) / factorial(n)


def integrate_shell(g, r1: float, r2: float, n: int,
                    scheme: IntegrationScheme,
                    stream: int = STREAM_SHELL) -> Estimate:
    """Monte Carlo estimate of int_{r1 < |z| < r2} g dV over the shell in
    C^{n+1} = R^{2n+2}.  Radii are drawn with density proportional to
    rho^{2n+1}, i.e. uniformly in rho^{2n+2}, so the estimator is
    vol(shell) * mean(g)."""
    if not (0.0 < r1 < r2):
        raise BadRadii(f"need 0 < r1 < r2, got ({r1}, {r2})")
    rng = rng_stream(scheme.seed, stream)
    count = scheme.samples
    p = 2 * n + 2
    u = rng.random(count)
    rho = (r1 ** p + u * (r2 ** p - r1 ** p)) ** (1.0 / p)
    xi = sample_sphere(n, count, rng)
    z = rho[:, None] * xi
    vals = np.asarray(g(z), dtype=float)
    vol = sphere_area(n) * (r2 ** p - r1 ** p) / p
    mean = float(np.mean(vals))
    stderr = float(np.std(vals) / np.sqrt(count))
    return Estimate(vol * mean, vol * stderr, count)


def sphere_mean(f, r: float, n: int, scheme: IntegrationScheme,
                stream: int = STREAM_SPHERE_MEAN) -> Estimate:
    """Mean of f over the sphere |z| = r (uniform measure).  `f` takes a
    batch (N, n+1) of ambient points."""
    if r <= 0.0:
        raise BadRadii("sphere radius must be positive")
    rng = rng_stream(scheme.seed, stream)
    xi = sample_sphere(n, scheme.samples, rng)
    vals = np.asarray(f(r * xi), dtype=float)
    return Estimate(float(np.mean(vals)),
                    float(np.std(vals) / np.sqrt(scheme.samples)),
                    scheme.samples)


def sphere_means_shared(f, n: int, t_list, scheme: IntegrationScheme,
                        stream: int = STREAM_SPHERE_MEAN):
    """Spherical means at several radii e^t with one shared direction
    sample, so that differences across t cancel most of the Monte Carlo
    noise.  Returns (means, stderrs, value_matrix) where value_matrix has
    shape (len(t_list), N)."""
    rng = rng_stream(scheme.seed, stream)
    xi = sample_sphere(n, scheme.samples, rng)
    rows = []
    for t in t_list:
        rows.append(np.asarray(f(np.exp(t) * xi), dtype=float))
    mat = np.vstack(rows)
    means = mat.mean(axis=1)
    stderrs = mat.std(axis=1) / np.sqrt(scheme.samples)
    return means, stderrs, mat


# ---------------------------------------------------------------------------
# limit extrapolation
# ---------------------------------------------------------------------------

def extrapolate_limit(ts, values) -> tuple[float, float]:
    """Extrapolate a limit from a monotone tail using the last three
    entries (the list must be ordered so the limit is approached at the
    end).  Fits v = L + c q^k through successive differences (Aitken);
    when the differences are not monotone decreasing the last value is
    returned with uncertainty |last - previous|.
    """
    ts = list(ts)
    values = [float(v) for v in values]
    if len(values) < 3 or len(ts) != len(values):
        raise InsufficientData("need at least three (t, value) samples")
    v1, v2, v3 = values[-3:]
    d1, d2 = v2 - v1, v3 - v2
    if d1 == 0.0 and d2 == 0.0:
        return v3, 0.0
    if d1 != 0.0 and d2 * d1 > 0.0 and abs(d2) < abs(d1):
        q = d2 / d1
        limit = v3 + d2 * q / (1.0 - q)
        return limit, abs(limit - v3)
    if d2 == 0.0 and d1 != 0.0:
        return v3, abs(d1) * np.finfo(float).eps ** 0.5
    return v3, abs(d2)
