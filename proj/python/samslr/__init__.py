"""Python bindings for the skeleton sign language recognition core."""

try:
    from samslr import _core
except ImportError:  # running against a build tree with _core on sys.path
    import _core

default_graph_bones = _core.default_graph_bones
default_graph_edges = _core.default_graph_edges
default_graph_nodes = _core.default_graph_nodes
derive_seed = _core.derive_seed
fuse = _core.fuse
normalized_adjacency = _core.normalized_adjacency
predict = _core.predict
shuffle_permutation = _core.shuffle_permutation
smooth_labels = _core.smooth_labels
smoothed_cross_entropy = _core.smoothed_cross_entropy
softmax = _core.softmax
swish = _core.swish
whole_body_nodes = _core.whole_body_nodes

__all__ = [
    "default_graph_bones",
    "default_graph_edges",
    "default_graph_nodes",
    "derive_seed",
    "fuse",
    "normalized_adjacency",
    "predict",
    "shuffle_permutation",
    "smooth_labels",
    "smoothed_cross_entropy",
    "softmax",
    "swish",
    "whole_body_nodes",
]
