from .app import create_app
from .catalog import SessionCatalog

__all__ = ["create_app", "SessionCatalog"]
