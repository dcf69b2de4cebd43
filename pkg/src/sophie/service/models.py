"""Wire models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class CreateSessionRequest(BaseModel):
    schema_id: str = Field(min_length=1)


class TurnIn(BaseModel):
    text: str
    start_ms: int | None = None
    end_ms: int | None = None


class TurnOut(BaseModel):
    index: int
    speaker: str
    text: str
    start_ms: int | None = None
    end_ms: int | None = None


class SessionCreated(BaseModel):
    session_id: str
    status: str
    turns: list[TurnOut]


class TurnsResponse(BaseModel):
    status: str
    turns: list[TurnOut]


class ReportResponse(BaseModel):
    report_id: str
    report: dict


class SchemaSummary(BaseModel):
    id: str
    description: str


class SchemaList(BaseModel):
    schemas: list[SchemaSummary]
