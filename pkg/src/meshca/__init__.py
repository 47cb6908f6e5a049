"""Channel assignment performance prediction for random wireless mesh networks."""
from .channel_assignment import PRESET_SCHEMES, SCHEMES, run_ca_scheme
from .conflict_graph import build_emmcg, total_interference_degree
from .evaluation import build_report, degree_of_confidence, prediction_error
from .interference_metrics import all_metrics, cdal_cost, cxls_wt
from .netsim import SimParams, build_scenario, simulate
from .pipeline import load_config, run_pipeline
from .topology import GenTargets, generate_rwmn, global_metrics

__version__ = "0.1.0"
