"""
Marshmallow schemas for run configuration and the fit artifact.

Configuration dictionaries assembled from command-line flags are validated
and converted to the library's dataclasses here. The fit artifact is a JSON
document with sorted keys whose numeric arrays are stored as base-64 encoded
little-endian float64 blocks.
"""

import base64
import json
import logging
from typing import Any, Dict, Mapping, Optional

import numpy as np
from marshmallow import (
    Schema,
    ValidationError,
    fields,
    post_load,
    pre_load,
    validate,
    validates_schema,
)

from spacetime_pspline.bench import BenchConfig
from spacetime_pspline.data_model import HullRegion
from spacetime_pspline.enums import LambdaPrior, Method, Transform
from spacetime_pspline.exceptions import ConfigurationError, DataError
from spacetime_pspline.selection import FitResult, LambdaGrid, PriorConfig
from spacetime_pspline.splines import TensorBasisSpec

logger = logging.getLogger("spacetime_pspline.schemas")

FORMAT_VERSION = 1

METHOD_NAMES = [m.value for m in Method]
TRANSFORM_NAMES = [t.value for t in Transform]
LAMBDA_PRIOR_NAMES = [p.value for p in LambdaPrior]


def _normalise_method(name: str) -> str:
    return name.strip().lower().replace("-", "_") if isinstance(name, str) else name


class NumericBlock(fields.Field):
    """A float64 array stored as ``{"shape": [...], "dtype": "<f8", "data": <base64>}``."""

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        array = np.ascontiguousarray(value, dtype="<f8")
        return {
            "shape": list(array.shape),
            "dtype": "<f8",
            "data": base64.b64encode(array.tobytes()).decode("ascii"),
        }

    def _deserialize(self, value, attr, data, **kwargs):
        try:
            shape = tuple(int(k) for k in value["shape"])
            raw = base64.b64decode(value["data"].encode("ascii"), validate=True)
            array = np.frombuffer(raw, dtype=value.get("dtype", "<f8"))
            return array.reshape(shape).astype(float)
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise ValidationError(f"Invalid numeric block: {e}")


class BasisSpecSchema(Schema):
    """Schema for the tensor-product basis configuration."""

    counts = fields.List(
        fields.Integer(validate=validate.Range(min=1)),
        required=True,
        validate=validate.Length(equal=3),
        metadata={"description": "Basis functions for s1, s2 and t"},
    )
    degree = fields.Integer(
        load_default=2, validate=validate.Range(min=0), metadata={"description": "Spline degree"}
    )
    penalty_order = fields.Integer(
        load_default=1, validate=validate.OneOf([1, 2]), metadata={"description": "Difference order q"}
    )
    ranges = fields.List(
        fields.List(fields.Float(allow_nan=False), validate=validate.Length(equal=2)),
        load_default=None,
        validate=validate.Length(equal=3),
        metadata={"description": "Knot ranges (lo, hi) per dimension"},
    )

    @validates_schema
    def validate_counts(self, data: Dict[str, Any], **kwargs) -> None:
        degree = data.get("degree", 2)
        for axis, p in zip(("s1", "s2", "t"), data.get("counts", [])):
            if p < degree + 1:
                raise ValidationError(
                    f"{axis}: {p} basis functions is fewer than degree + 1 = {degree + 1}", "counts"
                )
            if p <= data.get("penalty_order", 1):
                raise ValidationError(f"{axis}: penalty order must be smaller than {p}", "counts")


class PriorConfigSchema(Schema):
    """Schema for the inverse-gamma hyperparameters and the λ prior."""

    a = fields.Float(load_default=1e-4, validate=validate.Range(min=0, min_inclusive=False))
    b = fields.Float(load_default=1e-4, validate=validate.Range(min=0, min_inclusive=False))
    lambda_prior = fields.String(
        load_default=LambdaPrior.UNIFORM_ON_LAMBDA.value, validate=validate.OneOf(LAMBDA_PRIOR_NAMES)
    )

    @post_load
    def make_prior(self, data: Dict[str, Any], **kwargs) -> PriorConfig:
        return PriorConfig(a=data["a"], b=data["b"], lambda_prior=LambdaPrior(data["lambda_prior"]))


class LambdaGridSchema(Schema):
    """Schema for an equally spaced log10(λ) grid."""

    lo = fields.Float(load_default=-8.0, allow_nan=False)
    hi = fields.Float(load_default=8.0, allow_nan=False)
    n = fields.Integer(load_default=101, validate=validate.Range(min=3))

    @validates_schema
    def validate_bounds(self, data: Dict[str, Any], **kwargs) -> None:
        if data.get("hi", 8.0) <= data.get("lo", -8.0):
            raise ValidationError("Grid upper bound must exceed the lower bound", "hi")

    @post_load
    def make_grid(self, data: Dict[str, Any], **kwargs) -> LambdaGrid:
        return LambdaGrid.default(data["lo"], data["hi"], data["n"])


class RunConfigSchema(Schema):
    """Schema for the settings of the ``fit`` subcommand."""

    input = fields.String(required=True)
    output = fields.String(required=True)
    trace = fields.String(load_default=None, allow_none=True)
    basis = fields.Nested(BasisSpecSchema, required=True)
    method = fields.String(load_default=Method.MAP.value, validate=validate.OneOf(METHOD_NAMES))
    grid = fields.Nested(LambdaGridSchema, load_default=lambda: LambdaGrid.default())
    prior = fields.Nested(PriorConfigSchema, load_default=lambda: PriorConfig())
    seed = fields.Integer(load_default=0, validate=validate.Range(min=0))
    folds = fields.Integer(load_default=10, validate=validate.Range(min=2))
    transform = fields.String(load_default=Transform.LOG1P.value, validate=validate.OneOf(TRANSFORM_NAMES))
    drop_wells = fields.List(fields.String(), load_default=list)

    @pre_load
    def normalise_method(self, data: Dict[str, Any], **kwargs) -> Dict[str, Any]:
        data = dict(data)
        if "method" in data:
            data["method"] = _normalise_method(data["method"])
        return data


class BenchConfigSchema(Schema):
    """Schema for the settings of the ``bench`` subcommand."""

    scenarios = fields.List(
        fields.Integer(validate=validate.OneOf([1, 2, 3])),
        load_default=lambda: [1, 2, 3],
        validate=validate.Length(min=1),
    )
    methods = fields.List(
        fields.String(validate=validate.OneOf(METHOD_NAMES)),
        load_default=lambda: ["aicc", "gcv", "cv_obs", "cv_well", "bic", "map", "bayes_avg"],
        validate=validate.Length(min=1),
    )
    replicates = fields.Integer(load_default=50, validate=validate.Range(min=1))
    seed = fields.Integer(load_default=1, validate=validate.Range(min=0))
    basis = fields.Nested(BasisSpecSchema, load_default=lambda: {"counts": [14, 8, 5], "degree": 2, "penalty_order": 1})
    folds = fields.Integer(load_default=10, validate=validate.Range(min=2))
    workers = fields.Integer(load_default=1, validate=validate.Range(min=0))
    truth_seed = fields.Integer(load_default=0, validate=validate.Range(min=0))
    grid = fields.Nested(LambdaGridSchema, load_default=lambda: LambdaGrid.default())
    prior = fields.Nested(PriorConfigSchema, load_default=lambda: PriorConfig())

    @pre_load
    def normalise_methods(self, data: Dict[str, Any], **kwargs) -> Dict[str, Any]:
        data = dict(data)
        if isinstance(data.get("methods"), list):
            data["methods"] = [_normalise_method(m) for m in data["methods"]]
        return data

    @post_load
    def make_config(self, data: Dict[str, Any], **kwargs) -> BenchConfig:
        basis = data["basis"]
        return BenchConfig(
            scenarios=tuple(data["scenarios"]),
            methods=tuple(Method(m) for m in data["methods"]),
            replicates=data["replicates"],
            base_seed=data["seed"],
            basis_counts=tuple(basis["counts"]),
            degree=basis["degree"],
            penalty_order=basis["penalty_order"],
            folds=data["folds"],
            workers=data["workers"],
            truth_seed=data["truth_seed"],
            grid=data["grid"],
            prior=data["prior"],
        )


class HullSchema(Schema):
    """Schema for the convex hull region stored with a fit."""

    vertices = NumericBlock(required=True)
    equations = NumericBlock(required=True)
    t_interval = fields.List(fields.Float(), required=True, validate=validate.Length(equal=2))

    @post_load
    def make_hull(self, data: Dict[str, Any], **kwargs) -> HullRegion:
        return HullRegion(
            vertices=data["vertices"], equations=data["equations"], t_interval=tuple(data["t_interval"])
        )


class FitArtifactSchema(Schema):
    """Schema for the self-describing fit artifact."""

    class Meta:
        render_module = json

    format_version = fields.Integer(required=True, validate=validate.Equal(FORMAT_VERSION))
    method = fields.String(required=True, validate=validate.OneOf(METHOD_NAMES))
    lam = fields.Float(allow_none=True, required=True)
    edf = fields.Float(required=True)
    n = fields.Integer(required=True, validate=validate.Range(min=1))
    l_flat = fields.Integer(required=True, validate=validate.Range(min=0))
    transform = fields.String(required=True, validate=validate.OneOf(TRANSFORM_NAMES))
    basis = fields.Nested(BasisSpecSchema, required=True)
    prior = fields.Dict(keys=fields.String(), required=True)
    grid = NumericBlock(required=True)
    coefficients = NumericBlock(required=True)
    weights = NumericBlock(allow_none=True, load_default=None)
    posterior = fields.Dict(keys=fields.String(), values=fields.Float(), allow_none=True, load_default=None)
    noise_scale = fields.Float(allow_none=True, load_default=None)
    covariance = NumericBlock(allow_none=True, load_default=None)
    hull = fields.Nested(HullSchema, allow_none=True, load_default=None)
    score_trace = fields.Dict(keys=fields.String(), values=NumericBlock(), load_default=dict)
    data_digest = fields.String(load_default="")
    warnings = fields.List(fields.String(), load_default=list)


def load_config(schema: Schema, data: Mapping[str, Any]) -> Any:
    """
    Validates ``data`` with ``schema``.

    Raises:
        ConfigurationError: If validation fails, naming the offending fields
    """
    try:
        return schema.load(data)
    except ValidationError as e:
        error_msg = f"Invalid configuration: {_flatten_messages(e.messages)}"
        logger.error(error_msg)
        raise ConfigurationError(error_msg)


def _flatten_messages(messages: Any, prefix: str = "") -> str:
    if isinstance(messages, dict):
        return "; ".join(_flatten_messages(v, f"{prefix}{k}.") for k, v in messages.items())
    if isinstance(messages, list):
        return "; ".join(_flatten_messages(m, prefix) for m in messages)
    label = prefix.replace("_schema.", "").rstrip(".")
    return f"{label}: {messages}" if label else str(messages)


def build_spec(basis: Mapping[str, Any], ranges: Optional[Any] = None) -> TensorBasisSpec:
    """Builds a :class:`TensorBasisSpec` from validated basis settings and knot ranges."""
    ranges = ranges if ranges is not None else basis["ranges"]
    if ranges is None:
        raise ConfigurationError("Knot ranges are required to build the basis")
    return TensorBasisSpec.from_ranges(
        basis["counts"], [tuple(r) for r in ranges], degree=basis["degree"], penalty_order=basis["penalty_order"]
    )


def fit_to_artifact(fit: FitResult) -> str:
    """Serialises a fit to the artifact's JSON text (sorted keys)."""
    document = {
        "format_version": FORMAT_VERSION,
        "method": fit.method.value,
        "lam": fit.lam,
        "edf": fit.edf,
        "n": fit.n,
        "l_flat": fit.l_flat,
        "transform": fit.transform.value,
        "basis": {
            "counts": list(fit.spec.counts),
            "degree": fit.spec.degree,
            "penalty_order": fit.spec.penalty_order,
            "ranges": [[d.lo, d.hi] for d in fit.spec.dims],
        },
        "prior": {"a": fit.prior.a, "b": fit.prior.b, "lambda_prior": fit.prior.lambda_prior.value},
        "grid": np.asarray(fit.grid.log10_values),
        "coefficients": fit.coefficients,
        "weights": fit.weights,
        "posterior": dict(fit.posterior) if fit.posterior is not None else None,
        "noise_scale": fit.noise_scale,
        "covariance": fit.covariance,
        "hull": fit.hull,
        "score_trace": dict(fit.score_trace),
        "data_digest": fit.data_digest,
        "warnings": list(fit.warnings),
    }
    return FitArtifactSchema().dumps(document, sort_keys=True, indent=1)


def fit_from_artifact(text: str) -> FitResult:
    """
    Rebuilds a :class:`FitResult` from artifact text.

    Raises:
        DataError: If the text is not valid JSON
        ConfigurationError: If the document fails validation
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataError(f"Fit artifact is not valid JSON: {e}")
    data = load_config(FitArtifactSchema(), document)
    prior = load_config(PriorConfigSchema(), data["prior"])
    return FitResult(
        method=Method(data["method"]),
        lam=data["lam"],
        coefficients=data["coefficients"],
        edf=data["edf"],
        spec=build_spec(data["basis"]),
        transform=Transform(data["transform"]),
        n=data["n"],
        l_flat=data["l_flat"],
        grid=LambdaGrid(data["grid"]),
        prior=prior,
        score_trace=data["score_trace"],
        weights=data["weights"],
        posterior=data["posterior"],
        noise_scale=data["noise_scale"],
        covariance=data["covariance"],
        hull=data["hull"],
        data_digest=data["data_digest"],
        warnings=data["warnings"],
    )

