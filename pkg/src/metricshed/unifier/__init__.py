"""Projection of raw stored documents into relational tables."""

from .mapping import ColumnSpec, MappingSpec, MappingError, parse_mapping, parse_mapping_file
from .project import Quarantine, Row, Skip, project
from .run import RunReport, UnifyCheckpoint, StoreSource, HttpSource, run_unify
from .sink import FileSink, SchemaConflictError, SinkUnavailableError

__all__ = [
    "ColumnSpec",
    "MappingSpec",
    "MappingError",
    "parse_mapping",
    "parse_mapping_file",
    "Row",
    "Skip",
    "Quarantine",
    "project",
    "RunReport",
    "UnifyCheckpoint",
    "StoreSource",
    "HttpSource",
    "run_unify",
    "FileSink",
    "SchemaConflictError",
    "SinkUnavailableError",
]
