
from heavenly.expsum import conjugate_point


def slice_points(rng, n, box=1.0):
    """Random points on the conjugate slice of an HCMA Legendre frame."""
    p = rng.uniform(-box, box, n) + 1j * rng.uniform(-box, box, n)
    z2 = rng.uniform(-box, box, n) + 1j * rng.uniform(-box, box, n)
    return conjugate_point(p, z2)


def real_points(rng, n, box=1.0):
    return rng.uniform(-box, box, (n, 4)).astype(complex)
