"""Global numerical defaults."""

#: relative tolerance for membership, positivity and rank decisions
DEFAULT_TOL = 1e-9

#: defaults for the PSD/affine projection engine
DEFAULT_EPS = 1e-7
DEFAULT_MAX_ITERS = 20000


def resolve_tol(tol):
    return DEFAULT_TOL if tol is None else float(tol)
