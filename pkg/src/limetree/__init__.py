"""Local surrogate trees with fidelity guarantees for black-box
probabilistic classifiers over binary interpretable domains."""

from .blackbox import (BlackBox, RemoteBlackBox, SyntheticSpec, TableBlackBox,
                       blackbox_from_descriptor, make_synthetic, predict_batch)
from .domain import (InterpretableDomain, OcclusionStrategy, Segmentation,
                     build_grid_segmentation, load_image, load_mask,
                     merge_segments)
from .explain import (CounterfactualQuery, counterfactual, exemplars,
                      extract_rule, feature_importance, render_tree,
                      shortest_explanation, what_if)
from .guarantees import (fit_complete, minimal_point, minimal_set,
                         relabel_leaves, verify_fidelity)
from .ridge import fit_ridge, lime_explain
from .sampling import (build_weighted_sample, cosine_distance,
                       enumerate_domain, enumeration_sample,
                       exponential_kernel, sample_domain)
from .tree import (FitReport, SurrogateTree, complexity, fit_limetree,
                   fit_tree, loss_classification, loss_lime, loss_limetree,
                   predict, tree_from_json, tree_to_json)

__version__ = "0.1.0"
