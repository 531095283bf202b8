"""Closed geodesics on model Riemannian manifolds.

The heavy lifting lives in the compiled ``_closedgeo`` extension; this package
re-exports it and adds a couple of conveniences.
"""

import json

from ._closedgeo import (
    SCHEMA_VERSION,
    ClosedGeodesic,
    ConsistencyError,
    DomainError,
    Error,
    FinderOptions,
    InputError,
    Manifold,
    NumericError,
    Polygon,
    ResolutionError,
    __version__,
    analyze,
    certify,
    class_loop,
    index_nullity,
    iterated_index,
    latitude_polygon,
    lemma1_parity,
    minimize_in_class,
    morse_check,
    perturb,
    poincare_map,
    poincare_series,
    principal_ellipse_polygon,
    refine_newton,
    run_cli,
    sweepout_minimax,
    type_numbers,
)


def load_geodesic(path):
    """Reads a geodesic (or bare polygon) JSON document written by ``cgeo find``."""
    with open(path, encoding="utf-8") as f:
        return ClosedGeodesic.from_dict(json.load(f))


def save_geodesic(geodesic, path, grad_tol=1e-10):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(geodesic.to_dict(grad_tol), f, indent=2)
        f.write("\n")


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]
