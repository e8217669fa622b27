from langgraph.graph import StateGraph, START, END
from graphs.state import ExperimentState, create_initial_state

from graphs.nodes.experiment_nodes import (
    load_config_node,
    run_pipeline_node,
    check_results_node,
    write_csv_node,
    check_failure_node,
    error_handler_node
)
from graphs.edges.routing import (
    route_after_load,
    route_after_pipeline,
    route_after_write
)


def build_experiment_graph() -> StateGraph:
    graph = StateGraph(ExperimentState)

    graph.add_node("load_config", load_config_node)
    graph.add_node("run_pipeline", run_pipeline_node)
    graph.add_node("check_results", check_results_node)
    graph.add_node("write_csv", write_csv_node)
    graph.add_node("check_failure", check_failure_node)
    graph.add_node("error_handler", error_handler_node)

    graph.add_edge(START, "load_config")

    graph.add_conditional_edges(
        "load_config",
        route_after_load,
        {
            "run_pipeline": "run_pipeline",
            "error": "error_handler"
        }
    )

    graph.add_conditional_edges(
        "run_pipeline",
        route_after_pipeline,
        {
            "check_results": "check_results",
            "error": "error_handler"
        }
    )

    # the table is written even when an enforced check fails
    graph.add_edge("check_results", "write_csv")

    graph.add_conditional_edges(
        "write_csv",
        route_after_write,
        {
            "check_failure": "check_failure",
            "end": END,
            "error": "error_handler"
        }
    )

    graph.add_edge("check_failure", "error_handler")
    graph.add_edge("error_handler", END)

    return graph


def compile_experiment_graph():
    return build_experiment_graph().compile()


def run_experiment(subcommand: str, config_path: str, **options) -> ExperimentState:
    app = compile_experiment_graph()
    return app.invoke(create_initial_state(subcommand, config_path, **options))
