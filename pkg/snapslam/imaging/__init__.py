# Expose the imaging operations at package level
from .grid import GridSpec, SpatialImage
from .core import (
    SteeringVector,
    steering_vector,
    image_value,
    compute_image,
    ambiguity,
    ambiguity_map,
    argmax_cell,
    sidelobe_level,
    refine_peak,
    wavenumber,
)
from .heatmap import write_heatmap
