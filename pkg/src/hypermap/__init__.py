"""Training-free hyperspectral classification, polygonization, and semantic mapping."""

from .classify import ClassifyParams, ClassifyResult, LabelMap, classify
from .cube import CameraMeta, HyperCube, Spectrum, false_rgb, load_cube, pixel_spectrum, save_cube
from .geometry import image_footprint, pixel_to_world, polygon_area_px, region_area_m2
from .mapping import Feature, InstanceLabelTree, SemanticMap, export_ontology, ontology_to_dot
from .scene import SceneSpec, cornfields_spec, load_scene_spec, runtime_add_spec, synthesize
from .segmentation import (
    EdgeImage,
    Region,
    RegionSet,
    approximate_polygon,
    detect_edges,
    extract_regions,
    filter_regions,
    rasterize_regions,
    segment,
)
from .specdb import SemanticClass, SimilarityAlgorithm, SpectralDatabase, load_db, save_db, similarity

__version__ = "0.1.0"
