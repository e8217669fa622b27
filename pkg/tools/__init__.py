from .executor import PIPELINES, PipelineError, PipelineOutput, CheckOutcome, execute_pipeline

__all__ = [
    'PIPELINES',
    'PipelineError',
    'PipelineOutput',
    'CheckOutcome',
    'execute_pipeline'
]
