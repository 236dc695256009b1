"""Critical bond percolation on the square lattice: clusters, circuits, experiments."""

__version__ = "0.1.0"

from .lattice import (AnnulusSpec, BondConfig, BoxSpec, RectSpec, Vertex, dual_crossing_exists,
                      enumerate_bonds, sample_config)
from .cluster import (ClusterLabeling, gaps, label_clusters, large_diameter_clusters,
                      origin_to_boundary, spanning_cluster, top_k_sizes)
from .circuit import (Circuit, GoodBoxIndex, annulus_interior_count, decompose_cluster_size,
                      good_boxes, good_boxes_of_cluster, interior_connected_count,
                      outermost_open_circuit, region_H)

__all__ = [
    "AnnulusSpec", "BondConfig", "BoxSpec", "RectSpec", "Vertex", "dual_crossing_exists",
    "enumerate_bonds", "sample_config", "ClusterLabeling", "gaps", "label_clusters",
    "large_diameter_clusters", "origin_to_boundary", "spanning_cluster", "top_k_sizes",
    "Circuit", "GoodBoxIndex", "annulus_interior_count", "decompose_cluster_size", "good_boxes",
    "good_boxes_of_cluster", "interior_connected_count", "outermost_open_circuit", "region_H",
]
