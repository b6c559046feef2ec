"""End-to-end runs: graph, constraints, solve, embed, predict."""

from .classify import predict
from .constraints import build_constraints, select_anchors
from .errors import ParameterError
from .graph import build_knn
from .objective import ObjectiveKind
from .solver import SolverConfig, outer_solve

MODES = ("mvu", "mfnu", "ism")


def embed_dataset(dataset, mode="ism", k=5, config=None, objective="mfnu", margin=0.0,
                  anchor_strategy="first_labeled", seed=0):
    """Run the full pipeline and return an ``EmbeddingResult``.

    ``mode`` "mvu"/"mfnu" unfold without class information (and fix the
    objective); "ism" adds anchor sign constraints using ``objective``.
    """
    if mode not in MODES:
        raise ParameterError("mode", f"must be one of {MODES}")
    config = config or SolverConfig()
    graph = build_knn(dataset, k)
    if mode == "ism":
        if dataset.labels is None or not dataset.labeled_mask.any():
            raise ParameterError("mode", "ism requires labels")
        anchors = select_anchors(dataset, anchor_strategy, seed)
        cs = build_constraints(graph, dataset, anchors, margin)
    else:
        objective = mode
        anchors = None
        cs = build_constraints(graph)
    kind = ObjectiveKind.from_graph(objective, graph)
    result, _ = outer_solve(dataset, graph, cs, kind, config)
    if anchors is not None:
        result.prediction = predict(result.coords, anchors)
    result.graph = graph
    result.constraints = cs
    return result
