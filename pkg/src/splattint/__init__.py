"""splattint: paint a selection on one view of a gaussian-splat scene, lift it
to 3D, tint it, and refit the SH colors in the background while you watch."""

from .backward import backward_sh
from .bench import bench_layouts, format_report
from .errors import DataError, FormatError, SplattintError, ValidationError
from .imageio import read_pfm, read_png, write_pfm, write_png
from .losses import (
    DEFAULT_LAMBDA,
    LossBreakdown,
    gaussian_window,
    l1_loss,
    loss_grad_wrt_image,
    photometric_loss,
    ssim,
)
from .optimize import (
    AdamState,
    BackgroundOptimizer,
    IterationMetrics,
    OptimizerConfig,
    OptimizerStatus,
    adam_step,
    optimize_iteration,
)
from .protocol import (
    FORMAT_PNG,
    FORMAT_RAW,
    FRAME_MAGIC,
    decode_frame,
    decode_frame_image,
    encode_frame,
    image_to_rgba,
)
from .recolor import EditedDataset, EditedView, apply_recolor, build_edited_dataset
from .render import (
    DEFAULT_CONFIG,
    DEFAULT_DEPTH_TAU,
    ForwardCapture,
    ProjectedGaussian,
    RasterizerConfig,
    SH_C0,
    color_activation,
    compute_covariance,
    depth_from_gaussians,
    eval_sh,
    from_chw,
    project_gaussian,
    render,
    render_forward,
    sh_basis,
    to_chw,
)
from .scene import (
    CameraIntrinsics,
    CameraPose,
    Gaussian,
    Scene,
    TrainingView,
    look_at,
    quaternion_to_rotation,
    scene_radius,
)
from .scene_io import load_cameras, load_scene_ply, save_cameras, save_scene_ply
from .selection import (
    SelectionCloud,
    SelectionMask2D,
    apply_stroke,
    commit_reentry,
    empty_cloud,
    knn_mean_distances,
    new_mask,
    project_cloud,
    reenter_selection,
    remove_outliers,
    unproject,
)
from .server import run_server, serve_session
from .session import EditSession, SessionConfig
from .stereo import (
    INVALID_DISPARITY,
    StereoConfig,
    StereoPair,
    aggregate_hv,
    default_baseline,
    disparity_to_depth,
    estimate_depth,
    match_disparity,
    render_stereo_pair,
    stereo_hv_depth,
)
from .synthetic import (
    RECIPE_NAMES,
    SceneRecipe,
    SyntheticBundle,
    generate_synthetic_scene,
    recipe,
    write_fixture,
)

__version__ = "0.1.0"
