"""Point-cloud containers, distances, and synthetic shape generators.

A point cloud is an (N, 3) float64 array of positions in Angstroms. All
generators are pure functions of their parameters (and seed, where one is
taken), so repeated calls reproduce bit-identical clouds.
"""

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

__all__ = [
    "as_cloud",
    "pairwise_distances",
    "centroid",
    "crown_polygon",
    "regular_polygon",
    "ellipse_ring",
    "sample_gaussian",
    "sample_torus",
    "write_xyz",
    "read_xyz",
]


def as_cloud(positions) -> np.ndarray:
    """Validate and normalize positions into an (N, 3) float64 array.

    Rejects empty input and non-finite coordinates.
    """
    cloud = np.asarray(positions, dtype=np.float64)
    if cloud.ndim == 1 and cloud.size == 3:
        cloud = cloud.reshape(1, 3)
    if cloud.ndim != 2 or cloud.shape[1] != 3:
        raise ValueError(f"expected (N, 3) positions, got shape {cloud.shape}")
    if cloud.shape[0] < 1:
        raise ValueError("point cloud needs at least one point")
    if not np.all(np.isfinite(cloud)):
        raise ValueError("point cloud contains non-finite coordinates")
    return cloud


def pairwise_distances(cloud) -> np.ndarray:
    """Full symmetric Euclidean distance matrix with an exactly zero diagonal."""
    cloud = as_cloud(cloud)
    diff = cloud[:, None, :] - cloud[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(d, 0.0)
    return d


def centroid(cloud) -> np.ndarray:
    """Arithmetic mean of the positions."""
    return as_cloud(cloud).mean(axis=0)


def crown_polygon(n: int, ell: float, theta: float) -> np.ndarray:
    """Equilateral non-planar n-gon with side `ell` and interior angle `theta`.

    The n vertices sit on a common circle of radius r at azimuths 2*pi*k/n,
    alternating between the planes z = +c and z = -c. Radius and axial
    offset are solved from the two constraints {consecutive distance = ell,
    second-neighbor distance = ell * sqrt(2 * (1 - cos theta))}; the latter
    forces each parity class onto a planar regular (n/2)-gon of that side
    length, which fixes r, and the bond length then fixes c.

    theta is in radians. Requires n even, n >= 4; raises ValueError when the
    constraint system has no real solution (theta exceeding the planar
    regular n-gon interior angle pi - 2*pi/n makes c imaginary).
    """
    if n % 2 != 0 or n < 4:
        raise ValueError(f"crown polygon needs an even vertex count >= 4, got {n}")
    if not (0.0 < theta < np.pi):
        raise ValueError(f"interior angle must lie in (0, pi), got {theta}")
    if ell <= 0.0:
        raise ValueError(f"side length must be positive, got {ell}")

    delta = 2.0 * np.pi / n
    side2 = ell * np.sqrt(2.0 * (1.0 - np.cos(theta)))  # second-neighbor distance
    r = side2 / (2.0 * np.sin(delta))
    c_sq = (ell**2 - (2.0 * r * np.sin(delta / 2.0)) ** 2) / 4.0
    if c_sq < -1e-12 * ell**2:
        raise ValueError(
            f"no real crown with n={n}, ell={ell}, theta={theta}: "
            f"interior angle exceeds the planar limit {np.pi - delta}"
        )
    c = np.sqrt(max(c_sq, 0.0))

    k = np.arange(n)
    phi = k * delta
    z = np.where(k % 2 == 0, c, -c)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def regular_polygon(n: int, ell: float) -> np.ndarray:
    """Planar regular n-gon with side length `ell` in the z = 0 plane."""
    if n < 3:
        raise ValueError(f"polygon needs at least 3 vertices, got {n}")
    if ell <= 0.0:
        raise ValueError(f"side length must be positive, got {ell}")
    radius = ell / (2.0 * np.sin(np.pi / n))
    phi = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([radius * np.cos(phi), radius * np.sin(phi), np.zeros(n)])


def _ellipse_arc(t: float, a: float, b: float) -> float:
    # Arc length of (a cos u, b sin u) from u=0 to u=t.
    speed = lambda u: np.sqrt((a * np.sin(u)) ** 2 + (b * np.cos(u)) ** 2)
    val, _ = quad(speed, 0.0, t, epsabs=0.0, epsrel=1e-10, limit=200)
    return val


def ellipse_ring(n: int, a: float, b: float) -> np.ndarray:
    """n points on the ellipse x^2/a^2 + y^2/b^2 = 1, equally spaced by arc length.

    Spacing is numerical: the arc-length parametrization is inverted to a
    relative tolerance well below 1e-6. a = b reproduces a circle.
    """
    if n < 3:
        raise ValueError(f"ellipse ring needs at least 3 points, got {n}")
    if not (a >= b > 0.0):
        raise ValueError(f"expected semi-axes a >= b > 0, got a={a}, b={b}")

    perimeter = _ellipse_arc(2.0 * np.pi, a, b)
    points = np.empty((n, 3))
    t_prev = 0.0
    for k in range(n):
        target = perimeter * k / n
        if k == 0:
            t = 0.0
        else:
            # s(t) is strictly increasing; bracket from the previous solution.
            t = brentq(
                lambda u: _ellipse_arc(u, a, b) - target,
                t_prev,
                2.0 * np.pi,
                xtol=1e-13,
                rtol=1e-15,
            )
        points[k] = (a * np.cos(t), b * np.sin(t), 0.0)
        t_prev = t
    return points


def sample_gaussian(n: int, sigma: float, rng_seed: int) -> np.ndarray:
    """n points with i.i.d. isotropic Gaussian coordinates of scale sigma."""
    if n < 1:
        raise ValueError(f"need at least one point, got {n}")
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    rng = np.random.default_rng(rng_seed)
    return sigma * rng.standard_normal((n, 3))


def sample_torus(
    n: int,
    R: float = 2.5,
    r_max: float = 1.5,
    alpha: float = 0.5,
    beta: float = 2.0,
    rng_seed: int = 0,
) -> np.ndarray:
    """n points in a solid torus of major radius R and tube radius r_max.

    Angles theta, phi are uniform on [0, 2*pi); the radial offset is
    rho = r_max * xi with xi ~ Beta(alpha, beta), which for alpha < 1
    concentrates mass near the core circle.
    """
    if n < 1:
        raise ValueError(f"need at least one point, got {n}")
    if not (R > r_max > 0.0):
        raise ValueError(f"need R > r_max > 0, got R={R}, r_max={r_max}")
    if alpha <= 0.0 or beta <= 0.0:
        raise ValueError("Beta shape parameters must be positive")
    rng = np.random.default_rng(rng_seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    rho = r_max * rng.beta(alpha, beta, n)
    x = (R + rho * np.cos(phi)) * np.cos(theta)
    y = (R + rho * np.cos(phi)) * np.sin(theta)
    z = rho * np.sin(phi)
    return np.column_stack([x, y, z])


def write_xyz(path, cloud, comment: str = "") -> None:
    """Write a cloud as XYZ text: count, comment, then one 'C x y z' per atom."""
    cloud = as_cloud(cloud)
    lines = [str(cloud.shape[0]), comment.replace("\n", " ")]
    for x, y, z in cloud:
        lines.append(f"C {x:.12g} {y:.12g} {z:.12g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_xyz(path) -> np.ndarray:
    """Read an XYZ file; element symbols are accepted and ignored."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise ValueError(f"{path}: empty XYZ file")
    try:
        count = int(raw[0].strip())
    except ValueError as exc:
        raise ValueError(f"{path}: first line must be the atom count") from exc
    rows = []
    for line in raw[2 : 2 + count]:
        parts = line.split()
        if len(parts) < 4:
            raise ValueError(f"{path}: malformed atom line {line!r}")
        rows.append([float(parts[1]), float(parts[2]), float(parts[3])])
    if len(rows) != count:
        raise ValueError(f"{path}: expected {count} atoms, found {len(rows)}")
    return as_cloud(rows)
