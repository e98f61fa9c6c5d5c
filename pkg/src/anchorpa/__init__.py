"""Categorified traces and anchored planar algebras on skeletal fusion data."""

from .core import (
    DataError,
    FusionCategory,
    Morphism,
    ValidationReport,
    category_from_dict,
    chain,
    compose,
    dual_basis,
    f_move,
    i_h_transform,
    load_category,
    mid,
    residual,
    simple,
)
from .modcat import (
    EndofunctorData,
    ModuleData,
    efun_compose,
    endofunctor_dual,
    endofunctor_from_object,
    identity_endofunctor,
    internal_hom,
    load_module,
    module_from_dict,
    regular_module,
)
from .ladder import (
    KaroubiObject,
    LadderMorphism,
    build_idempotent_e,
    karoubi_split,
    lcompose,
    lresidual,
    split_hom_dim_out,
)
from .trace import (
    TraceAdjunction,
    TraceObject,
    adjunction_data,
    biadjunction_zigzags,
    trace,
    traciator,
    twist_check,
)
from .coherence import (
    CHECK_NAMES,
    braid_compat,
    coherence_check,
    etasC_check,
    hpt_traciator,
    mu_interchange,
    mu_mate,
    mu_pants,
    pairing_matrix,
    pairing_report,
    phitr_snakes,
    trace_cup_check,
    twist_compat,
)
from .apa import APAInstance, AxiomReport, build_apa, check_axioms, self_dual_check
from .tangle import BoundarySignature, TangleError, Term, evaluate, parse, parse_file, typecheck
from .presets import (
    CATEGORY_PRESETS,
    MODULE_PRESETS,
    load_module_preset,
    load_preset,
    preset_path,
    resolve_category,
    resolve_module,
)

__version__ = "0.1.0"
