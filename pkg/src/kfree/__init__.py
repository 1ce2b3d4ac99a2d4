"""Cylinder covers of hyperbolic 3-space, their nerves, and free-group rank calculus."""

from .exceptions import *  # noqa: F401,F403
from .feasibility import Cylinder, FeasibilityResult, Region, cylinders_feasible, cylinders_feasible_for
from .freegroup import (
    SubgroupGraph,
    intersect,
    internal_rank,
    join,
    rank,
    rank_lemma_run,
    rank_of_words,
    subgroup_from_words,
)
from .geometry import (
    Geodesic,
    Isometry,
    LoxodromicData,
    Point,
    apply,
    classify,
    cylinder_radius,
    displacement,
    dist_point_to_line,
    distance,
)
from .group import (
    CyclicLabel,
    ElementTable,
    GroupSpec,
    check_log_bound,
    conjugate_label,
    enumerate_ball,
    label_cylinder,
    maximal_cyclics,
    short_set,
)
from .nerve import (
    Complex,
    Labeling,
    cylinder_nerve,
    SaturatedSet,
    filtered_subcomplex,
    homology_z2,
    internal_rank_of_simplex,
    link,
    nerve,
    strata_components,
    theta,
)
from .scenario import Scenario
from .schottky import near_extremal_schottky, pingpong_certificate, random_schottky
from .tree import ComponentGraph, action_on_components, build_component_graph, is_tree

__version__ = "0.1.0"
