"""Exact cell structure and decision-boundary topology of ReLU networks."""

from .signs import SignSequence, product, is_face, codimension, coface_candidates
from .model import (
    AffineFunctional,
    AffineLayer,
    ModelFormatError,
    NodeIndex,
    ReluNetwork,
    node_map_values,
    node_map_value_matrix,
    random_init,
    read_model,
    region_affine_maps,
    write_model,
)
from .builder import (
    ArchitectureUnsupported,
    DegenerateNetwork,
    DuplicateMismatch,
    LayerBuildState,
    Tolerances,
    Vertex,
    build_complex,
    cube_closure,
    extend_layer,
    first_layer_vertices,
)
from .topology import (
    BettiReport,
    BoundaryInconsistent,
    ChainComplexGF2,
    ClosureViolation,
    CubicalComplex,
    assemble,
    betti_gf2,
    boundary_matrices,
    compactify,
    decision_boundary,
    gf2_rank,
    render_db_svg,
    validate_closure,
)
from .oracle import SampleGrid, arrangement_counts, perturb_check, sample_region_signs

__version__ = "0.1.0"
