"""Bank failure prediction with tree ensembles and counterfactual explanations."""

__version__ = "0.1.0"

from .schema import (  # noqa: F401
    BankQuarterRecord,
    DataTable,
    FeatureSpec,
    PredictorGroup,
    PREDICTOR_GROUPS,
    SplitBundle,
    specs_for_group,
)
