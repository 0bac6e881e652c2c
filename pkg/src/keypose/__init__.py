"""keypose: exact data processing for keypoint estimation pipelines.

The library covers three layers:

* coordinate-system transforms and image warping over continuous planes
  (:mod:`keypose.geometry`, :mod:`keypose.raster`),
* keypoint/heatmap codecs with unbiased and deliberately biased decoders
  (:mod:`keypose.codec`),
* composite train/test/flip pipelines plus an ideal-network bias lab that
  measures every systematic error those pipelines produce
  (:mod:`keypose.pipeline`, :mod:`keypose.biaslab`).

``keypose.dataio`` ingests COCO-style annotations and emits reports; the
``keypose`` command line fronts all of it.
"""

from .biaslab import (
    CocoKeypointSampler,
    ErrorStats,
    OracleMode,
    SkipTrial,
    SplitMix64,
    TrialRecord,
    UniformKeypointSampler,
    analytic_errors,
    default_roi,
    describe_config,
    ideal_network,
    monte_carlo,
    run_trial,
)
from .codec import (
    CcrfTarget,
    DecodeResult,
    GaussianTarget,
    NoDetectionError,
    OutOfBoundsError,
    decode_argmax,
    decode_biased_quarter,
    decode_ccrf,
    decode_dark,
    default_ccrf_radius,
    encode_ccrf,
    encode_gaussian,
    loss_ccrf,
    loss_mse,
)
from .dataio import (
    AnnotationFormatError,
    Instance,
    LoadResult,
    MissingImageError,
    bbox_to_roi,
    load_coco_keypoints,
    write_report,
)
from .geometry import (
    PlaneSize,
    Point,
    Roi,
    SingularTransformError,
    Transform2D,
    apply_point,
    compose,
    identity,
    invert,
    t_crop,
    t_flip,
    t_resize,
    t_rotate,
)
from .pipeline import (
    Codec,
    Combine,
    Compensation,
    Convention,
    PipelineConfig,
    config_from_text,
    config_to_text,
    flip_combine,
    input_to_output,
    load_config,
    output_to_source,
    rno_upsample,
    save_config,
    swap_flip_pairs,
    test_transform,
    train_transform,
)
from .raster import (
    BorderPolicy,
    ImageGrid,
    bilinear_sample,
    flip_heatmap,
    read_grid_text,
    read_pgm,
    warp,
    write_grid_text,
    write_pgm,
)

__version__ = "0.1.0"
