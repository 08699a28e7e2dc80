"""Haze level estimation for single outdoor photos.

Pipeline: dark-channel-prior transmission estimation, guided-filter
refinement, and transform/combine/pool scoring against a depth map, plus
synthetic haze generation and Spearman-correlation evaluation tooling.
"""

from .raster import (
    DepthMap,
    FormatError,
    RasterImage,
    ScalarMap,
    TransmissionMap,
    load_depth,
    load_image,
    save_image,
    save_map,
)
from .darkchannel import (
    AtmosphericLight,
    DarkChannelParams,
    dark_channel,
    estimate_atmospheric_light,
    raw_transmission,
)
from .guidedfilter import GuidedFilterParams, box_mean, guided_filter
from .depthsource import DepthSource, depth_for
from .synth import (
    CONDITION_KINDS,
    HazeCondition,
    SynthSpec,
    apply_haze,
    default_k_levels,
    generate_stack,
    procedural_scene,
)
from .estimator import (
    EstimatorVariant,
    HazeScore,
    combine,
    enumerate_variants,
    estimate,
    pool,
    score_maps,
    transform,
)
from .evaluation import (
    BASELINE_KINDS,
    CalibrationThresholds,
    EvalResult,
    ZeroRankVarianceError,
    baseline_score,
    calibrate,
    classify,
    grid_search,
    score_samples,
    spearman,
)
from .ingest import (
    JoinResult,
    LabeledSample,
    PM25Record,
    join_photos,
    load_pm25,
    read_samples_csv,
    samples_from_synth_manifest,
    write_samples_csv,
)

__version__ = "0.1.0"
