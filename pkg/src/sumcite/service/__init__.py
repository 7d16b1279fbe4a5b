"""Annotation service: HTTP app, storage backends and workflow rules."""

from .app import create_app
from .storage import FileStore, SqliteStore, Store, open_store
from .workflow import (
    Annotator,
    RatingRecord,
    RevisionRecord,
    WorkflowError,
    assign_tasks,
    export_revised_dataset,
    needs_revision,
    select_for_revision,
)

__all__ = [
    "Annotator",
    "FileStore",
    "RatingRecord",
    "RevisionRecord",
    "SqliteStore",
    "Store",
    "WorkflowError",
    "assign_tasks",
    "create_app",
    "export_revised_dataset",
    "needs_revision",
    "open_store",
    "select_for_revision",
]
