"""Universal style transfer by whitening and coloring deep features.

The public surface re-exports the functional core (feature transforms, the
inference engine, the stylization pipelines) plus the two estimator wrappers.
"""

from .errors import (
    ConfigurationError,
    DegenerateInputError,
    InvalidArgumentError,
    NotFittedError,
    NumericalError,
    WctError,
    WeightFormatError,
)
from .linalg import (
    SpectralDecomposition,
    as_sym_matrix,
    coloring_matrix,
    covariance,
    sym_eig,
    whitening_matrix,
)
from .network import (
    LayerSpec,
    Network,
    conv3x3,
    decode,
    encode,
    maxpool2,
    reconstruction_loss,
    relu,
    upsample_nearest2,
)
from .pipeline import (
    StyleRegion,
    StylizationConfig,
    Stylizer,
    interpolate_textures,
    reconstruct,
    style_distance,
    stylize_multi,
    stylize_single,
    stylize_spatial,
    synthesize_texture,
    whiten_viz,
)
from .tensors import (
    FeatureMatrix,
    feature_matrix,
    from_feature_matrix,
    gaussian_noise_image,
    load_image,
    resize_nearest,
    save_image,
    to_feature_matrix,
)
from .wct import (
    DEFAULT_EPS,
    StyleStats,
    WctTransform,
    blend,
    color,
    compute_style_stats,
    histogram_match,
    interpolate_coloring,
    masked_wct,
    wct,
    whiten,
)
from .weights import WeightStore, load_model_dir, load_weights, write_weights

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DegenerateInputError",
    "InvalidArgumentError",
    "NotFittedError",
    "NumericalError",
    "WctError",
    "WeightFormatError",
    "SpectralDecomposition",
    "as_sym_matrix",
    "coloring_matrix",
    "covariance",
    "sym_eig",
    "whitening_matrix",
    "LayerSpec",
    "Network",
    "conv3x3",
    "decode",
    "encode",
    "maxpool2",
    "reconstruction_loss",
    "relu",
    "upsample_nearest2",
    "StyleRegion",
    "StylizationConfig",
    "Stylizer",
    "interpolate_textures",
    "reconstruct",
    "style_distance",
    "stylize_multi",
    "stylize_single",
    "stylize_spatial",
    "synthesize_texture",
    "whiten_viz",
    "FeatureMatrix",
    "feature_matrix",
    "from_feature_matrix",
    "gaussian_noise_image",
    "load_image",
    "resize_nearest",
    "save_image",
    "to_feature_matrix",
    "DEFAULT_EPS",
    "StyleStats",
    "WctTransform",
    "blend",
    "color",
    "compute_style_stats",
    "histogram_match",
    "interpolate_coloring",
    "masked_wct",
    "wct",
    "whiten",
    "WeightStore",
    "load_model_dir",
    "load_weights",
    "write_weights",
]
