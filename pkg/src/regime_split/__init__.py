"""Detection and estimation of random switches in retrospective samples.

The decision statistic splits a sample into observations near a reference
point and the rest, and measures how well the two groups separate.
"""

from .binary import (
    BinaryStatistic,
    MixtureEstimate,
    asymmetric_partition,
    consistent_estimates,
    detect,
    detect_asymmetric,
    detect_symmetric,
    nonparametric_estimate,
    variance_contamination_detect,
    variance_phi,
)
from .calibration import CalibrationResult, estimate_phi0_acf, formula_threshold, mc_calibrate
from .core import (
    BandPartition,
    DetectionConfig,
    DetectionReport,
    RegimeSplitError,
    Sample,
    ThresholdSpec,
    VectorSample,
    validate_sample,
    validate_vectors,
)
from .generators import (
    AR1,
    GeneratorSpec,
    MulticlassMixture,
    MVGaussianMixture,
    ShiftMixture,
    SwitchingRegression,
    VarianceMixture,
    generate,
)
from .harness import ExperimentPlan, ExperimentTable, preset, run_plan
from .multiclass import MulticlassReport, detect_multiclass, histogram_mode
from .multivariate import detect_multivariate_binary, detect_multivariate_multiclass, vector_scan
from .regression import RegressionData, coefficient_sequence, detect_switching_regression, ols_fit
from .statistic import ScanResult, partition_by_band, psi, psi_total_form, sample_mean, scan

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
