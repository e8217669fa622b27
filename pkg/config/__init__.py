from .settings import get_settings, Settings, NumericsConfig, RuntimeConfig

__all__ = ["get_settings", "Settings", "NumericsConfig", "RuntimeConfig"]
