"""Unit-quaternion arithmetic for SU(2).

Quaternions are arrays with a trailing axis of length 4 ordered (w, x, y, z).
Elements of su(2) are stored as pure quaternions, i.e. trailing axis of
length 3. With this identification -Tr(ab) = 2 * dot(a, b).
"""
import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def mul(p, q):
    pw, px, py, pz = np.moveaxis(np.asarray(p), -1, 0)
    qw, qx, qy, qz = np.moveaxis(np.asarray(q), -1, 0)
    return np.stack([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    ], axis=-1)


def conj(q):
    q = np.asarray(q)
    out = -q
    out[..., 0] = q[..., 0]
    return out


def normalize(q):
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def exp(v):
    """exp of a pure quaternion (su2 vector); returns a unit quaternion."""
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(v, axis=-1, keepdims=True)
    # sin(r)/r with a series branch at the origin
    small = r < 1e-8
    safe = np.where(small, 1.0, r)
    sinc = np.where(small, 1.0 - r * r / 6.0, np.sin(safe) / safe)
    return np.concatenate([np.cos(r), sinc * v], axis=-1)


def log(q):
    """Principal logarithm of a unit quaternion, as an su2 vector of norm < pi."""
    q = np.asarray(q, dtype=float)
    w = q[..., :1]
    vec = q[..., 1:]
    s = np.linalg.norm(vec, axis=-1, keepdims=True)
    angle = np.arctan2(s, w)
    small = s < 1e-12
    safe = np.where(small, 1.0, s)
    # near the identity angle/s -> 1/w
    factor = np.where(small, 1.0 / np.where(small, w, 1.0), angle / safe)
    return factor * vec


def rotation(q):
    """3x3 matrix of the adjoint action v -> q v q^-1 for unit q."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = np.moveaxis(q, -1, 0)
    r = np.empty(q.shape[:-1] + (3, 3))
    r[..., 0, 0] = 1 - 2 * (y * y + z * z)
    r[..., 0, 1] = 2 * (x * y - w * z)
    r[..., 0, 2] = 2 * (x * z + w * y)
    r[..., 1, 0] = 2 * (x * y + w * z)
    r[..., 1, 1] = 1 - 2 * (x * x + z * z)
    r[..., 1, 2] = 2 * (y * z - w * x)
    r[..., 2, 0] = 2 * (x * z - w * y)
    r[..., 2, 1] = 2 * (y * z + w * x)
    r[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return r


def adjoint(q, v):
    """q v q^-1 for unit q and su2 vectors v (broadcasting)."""
    return np.einsum("...ij,...j->...i", rotation(q), v)


def dlog_left(v):
    """Matrix A(v) with log(exp(eta) exp(v)) = v + A(v) eta + O(eta^2).

    ``v`` is an su2 vector (the principal log); the bracket of pure quaternions
    is 2 * cross, which fixes the coefficients below.
    """
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(v, axis=-1)
    k = np.zeros(v.shape[:-1] + (3, 3))
    k[..., 0, 1] = -v[..., 2]
    k[..., 0, 2] = v[..., 1]
    k[..., 1, 0] = v[..., 2]
    k[..., 1, 2] = -v[..., 0]
    k[..., 2, 0] = -v[..., 1]
    k[..., 2, 1] = v[..., 0]
    small = r < 1e-4
    safe = np.where(small, 1.0, r)
    coef = np.where(small, 1.0 / 3.0 + r * r / 45.0,
                    (1.0 - safe / np.tan(safe)) / (safe * safe))
    eye = np.broadcast_to(np.eye(3), k.shape)
    return eye - k + coef[..., None, None] * (k @ k)


def random_su2(rng, shape, scale=1.0):
    return scale * rng.standard_normal(tuple(shape) + (3,))
