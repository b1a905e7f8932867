from enum import Enum


class Transform(Enum):
    IDENTITY = "identity"
    LOG1P = "log1p"  # log(y + 1), handles exact zeros


class LambdaPrior(Enum):
    UNIFORM_ON_LAMBDA = "uniform_on_lambda"
    UNIFORM_ON_LOG_LAMBDA = "uniform_on_log_lambda"


class Criterion(Enum):
    AIC = "aic"
    AICC = "aicc"
    GCV = "gcv"
    BIC = "bic"


class CVMode(Enum):
    BY_OBSERVATION = "by_observation"
    BY_WELL = "by_well"


class Method(Enum):
    MAP = "map"
    BAYES_AVG = "bayes_avg"
    AIC = "aic"
    AICC = "aicc"
    GCV = "gcv"
    BIC = "bic"
    CV_OBS = "cv_obs"
    CV_WELL = "cv_well"

    @classmethod
    def parse(cls, name: str) -> "Method":
        """Parses a method name, accepting dashes as well as underscores."""
        return cls(name.strip().lower().replace("-", "_"))

    @property
    def is_bayesian(self) -> bool:
        return self in (Method.MAP, Method.BAYES_AVG)

    @property
    def is_cross_validation(self) -> bool:
        return self in (Method.CV_OBS, Method.CV_WELL)


class BoundaryCondition(Enum):
    ZERO_VALUE = "zero_value"
    ZERO_FLUX = "zero_flux"
