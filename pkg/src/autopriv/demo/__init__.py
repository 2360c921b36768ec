from .session import AutoQuery, DemoSession, ScenarioConfig
from .api import create_demo_app

__all__ = ["AutoQuery", "DemoSession", "ScenarioConfig", "create_demo_app"]
