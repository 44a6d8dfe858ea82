"""Reading and writing source description files (JSON)."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Union

import numpy as np

from . import dist_core as dc
from .errors import SourceError

# keys a file may carry that the loader ignores
_IGNORED = {"name", "description", "functionals"}


def _require(spec, keys):
    missing = [k for k in keys if k not in spec]
    if missing:
        raise SourceError(f"{spec.get('family')!r} source is missing {', '.join(missing)}")
    extra = set(spec) - set(keys) - {"family"} - _IGNORED
    if extra:
        raise SourceError(f"unknown keys for {spec.get('family')!r}: {', '.join(sorted(extra))}")


def _real(value, name):
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise SourceError(f"{name} must be a number, got {value!r}") from None
    if not math.isfinite(out):
        raise SourceError(f"{name} must be finite, got {value!r}")
    return out


def _array(value, name, ndim=1):
    try:
        out = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise SourceError(f"{name} must be a numeric array") from None
    if out.ndim != ndim:
        raise SourceError(f"{name} must be {ndim}-dimensional, got shape {out.shape}")
    return out


def source_from_dict(spec: dict):
    """Build a scalar or bivariate source from a parsed description."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise SourceError("a source description needs a 'family' key")
    fam = spec["family"]
    if fam == "gaussian":
        _require(spec, ["mean", "variance"])
        return dc.Gaussian(_real(spec["mean"], "mean"), _real(spec["variance"], "variance"))
    if fam == "uniform":
        _require(spec, ["a", "b"])
        return dc.Uniform(_real(spec["a"], "a"), _real(spec["b"], "b"))
    if fam == "laplace":
        _require(spec, ["location", "scale"])
        return dc.Laplace(_real(spec["location"], "location"), _real(spec["scale"], "scale"))
    if fam == "mixture":
        _require(spec, ["weights", "means", "variances"])
        return dc.GaussianMixture(tuple(_array(spec["weights"], "weights")),
                                  tuple(_array(spec["means"], "means")),
                                  tuple(_array(spec["variances"], "variances")))
    if fam == "grid":
        _require(spec, ["x", "pdf"])
        return dc.Gridded(_array(spec["x"], "x"), _array(spec["pdf"], "pdf"))
    if fam == "bivariate_gaussian":
        _require(spec, ["variances", "rho"] + (["means"] if "means" in spec else []))
        means = tuple(_array(spec.get("means", [0.0, 0.0]), "means"))
        return dc.BivariateGaussian(tuple(_array(spec["variances"], "variances")),
                                    _real(spec["rho"], "rho"), means)
    if fam == "bivariate_mixture":
        _require(spec, ["weights", "means", "covariances"])
        return dc.BivariateGaussianMixture(
            tuple(_array(spec["weights"], "weights")),
            tuple(tuple(m) for m in _array(spec["means"], "means", 2)),
            tuple(tuple(map(tuple, c)) for c in _array(spec["covariances"], "covariances", 3)))
    if fam == "grid2d":
        _require(spec, ["x1", "x2", "pdf"])
        return dc.GriddedJoint(_array(spec["x1"], "x1"), _array(spec["x2"], "x2"),
                               _array(spec["pdf"], "pdf", 2))
    raise SourceError(f"unknown source family {fam!r}")


def load_source(path: Union[str, Path]):
    """Parse a source description file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SourceError(f"cannot read source file {path}: {exc}") from None
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SourceError(f"{path}: invalid JSON ({exc})") from None
    return source_from_dict(spec)


def functionals(source) -> dict:
    """Summary functionals of a source (nats for entropies)."""
    if isinstance(source, dc.ScalarSource):
        h = dc.differential_entropy(source)
        return {"mean": float(source.mean), "variance": dc.variance(source),
                "differential_entropy": h, "entropy_power": dc.entropy_power(source),
                "kl_to_gaussian": dc.kl_to_gaussian(source)}
    c = source.covariance
    return {"mean": [float(m) for m in source.mean], "covariance": c.tolist(),
            "correlation": float(source.correlation),
            "joint_entropy": dc.joint_entropy(source),
            "joint_entropy_power": dc.joint_entropy_power(source)}


def describe(source) -> dict:
    """The source's description plus its functionals; re-parses to the same source."""
    out = dict(source.to_dict())
    out["functionals"] = functionals(source)
    return out


def dump_source(source, path: Union[str, Path], with_functionals: bool = True) -> None:
    """Write a source description file."""
    spec = describe(source) if with_functionals else source.to_dict()
    Path(path).write_text(json.dumps(spec, indent=2) + "\n")
