from .experiment_nodes import (
    load_config,
    load_config_node,
    run_pipeline_node,
    check_results_node,
    write_csv_node,
    check_failure_node,
    error_handler_node
)

__all__ = [
    'load_config',
    'load_config_node',
    'run_pipeline_node',
    'check_results_node',
    'write_csv_node',
    'check_failure_node',
    'error_handler_node'
]
