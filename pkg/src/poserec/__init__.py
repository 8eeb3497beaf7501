"""Color-histogram pose image recommender with a small GAN trainer downstream."""
from .exceptions import PoseRecError
from .histogram import ColorHistogramTransformer, HistogramFeature, compute_histogram
from .imaging import ColorSpace, ImageBuffer, RegionGrid, load_image, segment_regions, to_color_space
from .index import (HistogramRecommender, ImageIndex, IndexConfig, RankedResult, build_index,
                    export_results, load_index, query_top_k, save_index)
from .metrics import MetricKind, Score, bhattacharyya, chi_squared, correlation, intersection
from .gan import DeskGAN, GanConfig

__version__ = "0.1.0"
