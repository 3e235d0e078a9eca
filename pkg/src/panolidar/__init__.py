"""Panoramic LiDAR imaging, directional captioning and object localization.

Pipeline: parse a point cloud, project it into a panoramic range image,
split the panorama into four 90-degree views, caption/detect each view
through a pluggable vision backend, localize every detection by range and
azimuth, and fuse everything into one scene description.
"""

from .backend import (
    Detection,
    MockBackend,
    RemoteBackend,
    SegmentAnalysis,
    analyze_segment,
    analyze_segments,
    mock_backend,
)
from .errors import (
    BackendUnavailable,
    BadWidth,
    DegeneratePoint,
    DimensionMismatch,
    FixtureParseError,
    FormatMismatch,
    OutOfBounds,
    PanolidarError,
    PlacementOutOfFov,
    ProtocolError,
)
from .fusion import SceneDescription, merge_scene, render_scene_json
from .localization import LocalizedObject, RangeSource, bbox_center, localize, object_range
from .pointcloud import Point3, PointCloud, horizontal_range, parse_cloud
from .projection import (
    PanoramaImage,
    PixelCoord,
    SensorIntrinsics,
    azimuth_of_column,
    azimuth_of_point,
    column_of_azimuth,
    project_cloud,
    row_of_elevation,
)
from .segmentation import Segment, SegmentLabel, segment_of_azimuth, split_panorama

__version__ = "0.1.0"
