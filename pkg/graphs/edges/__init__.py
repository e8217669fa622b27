from .routing import (
    route_after_load,
    route_after_pipeline,
    route_after_write
)

__all__ = [
    'route_after_load',
    'route_after_pipeline',
    'route_after_write'
]
