"""HTTP reward service: one POST per rollout group, mirroring the library exactly.

Endpoints: POST /v1/rewards, GET /healthz, GET /v1/audit/{id}. The handler is a
thin shim over :func:`compute_group_rewards`, so response values are
bit-identical to direct library calls for the same body and seed. State is
limited to a bounded in-memory audit cache, optionally persisted to a
line-delimited JSON file.

Environment: PORT, REWARD_AUDIT_PATH, REWARD_MAX_CONCURRENCY, REWARD_AUTH_TOKEN.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from collections import OrderedDict
from typing import Any

from fastapi import FastAPI, Header, HTTPException
from pydantic import BaseModel, Field

from .core import (
    ConfigError,
    RangeError,
    SchemaError,
    config_from_dict,
    group_from_dict,
)
from .judges import (
    ExhaustedRetriesError,
    MissingLatentError,
    OracleJudge,
    RemoteJudge,
    RemoteJudgeConfig,
    SyntheticJudge,
    TransportError,
)
from .rewards import DESIGNS, compute_group_rewards

DEFAULT_AUDIT_CACHE_SIZE = 1024


class RewardRequest(BaseModel):
    query: str
    rubrics: list[dict[str, Any]]
    rollouts: list[dict[str, Any]]
    design: str
    config: dict[str, Any] | None = None
    seed: int = 0
    judge: dict[str, Any] = Field(default_factory=lambda: {"kind": "remote"})
    answer_only: bool = False


class _AuditStore:
    """Bounded in-memory audit cache with optional JSONL persistence."""

    def __init__(self, max_entries: int, path: str | None):
        self._entries: OrderedDict[str, list[dict[str, Any]]] = OrderedDict()
        self._max = max_entries
        self._path = path
        self._lock = threading.Lock()

    def put(self, records: list[dict[str, Any]]) -> str:
        audit_id = uuid.uuid4().hex
        with self._lock:
            self._entries[audit_id] = records
            while len(self._entries) > self._max:
                self._entries.popitem(last=False)
            if self._path:
                with open(self._path, "a", encoding="utf-8") as fh:
                    for record in records:
                        fh.write(
                            json.dumps({"audit_id": audit_id, "record": record}, ensure_ascii=False)
                            + "\n"
                        )
        return audit_id

    def get(self, audit_id: str) -> list[dict[str, Any]] | None:
        with self._lock:
            return self._entries.get(audit_id)


def _judge_from_spec(spec: dict[str, Any], max_concurrency: int | None):
    kind = spec.get("kind", "remote")
    if kind == "oracle":
        return OracleJudge()
    if kind == "synthetic":
        return SyntheticJudge(
            beta=float(spec.get("beta", 2.0)),
            position_bonus=float(spec.get("position_bonus", 0.0)),
            length_bonus=float(spec.get("length_bonus", 0.0)),
            score_buckets=spec.get("score_buckets"),
        )
    if kind == "remote":
        # Training must not stall on one bad judge response, so the service
        # defaults to the lowest-index fallback unless the request overrides it.
        overrides = {k: v for k, v in spec.items() if k != "kind"}
        overrides.setdefault("fallback", "lowest_index")
        config = RemoteJudgeConfig.from_env(**overrides)
        return RemoteJudge(config, max_in_flight=max_concurrency)
    raise ValueError(f"unknown judge kind {kind!r}")


def create_app(
    *,
    auth_token: str | None = None,
    audit_path: str | None = None,
    audit_cache_size: int = DEFAULT_AUDIT_CACHE_SIZE,
    max_concurrency: int | None = None,
) -> FastAPI:
    app = FastAPI(title="tournament-rewards", version="0.1.0")
    store = _AuditStore(audit_cache_size, audit_path)

    def check_auth(authorization: str | None) -> None:
        if auth_token is None:
            return
        if authorization != f"Bearer {auth_token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    @app.get("/healthz")
    def healthz() -> dict[str, str]:
        return {"status": "ok"}

    @app.post("/v1/rewards")
    def rewards(request: RewardRequest, authorization: str | None = Header(default=None)):
        check_auth(authorization)
        if request.design not in DESIGNS:
            raise HTTPException(status_code=400, detail=f"unknown design {request.design!r}")
        try:
            group = group_from_dict(
                {"query": request.query, "rubrics": request.rubrics, "rollouts": request.rollouts}
            )
            config = config_from_dict(request.config) if request.config is not None else None
            judge = _judge_from_spec(request.judge, max_concurrency)
            result = compute_group_rewards(
                group,
                request.design,
                judge,
                tournament_config=config,
                seed=request.seed,
                answer_only=request.answer_only,
                max_concurrency=max_concurrency or 1,
            )
        except (ConfigError, SchemaError, RangeError, MissingLatentError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"{type(exc).__name__}: {exc}") from exc
        except (ExhaustedRetriesError, TransportError) as exc:
            raise HTTPException(status_code=502, detail=f"{type(exc).__name__}: {exc}") from exc
        audit_id = store.put([record.to_dict() for record in result.audit])
        return {
            "design": result.design,
            "seed": request.seed,
            "judge_calls": result.judge_calls,
            "audit_id": audit_id,
            "rewards": [b.to_dict() for b in result.breakdowns],
        }

    @app.get("/v1/audit/{audit_id}")
    def audit(audit_id: str, authorization: str | None = Header(default=None)):
        check_auth(authorization)
        records = store.get(audit_id)
        if records is None:
            raise HTTPException(status_code=404, detail="unknown audit id")
        return {"audit_id": audit_id, "records": records}

    return app


def _env_int(name: str) -> int | None:
    value = os.environ.get(name)
    return int(value) if value else None


app = create_app(
    auth_token=os.environ.get("REWARD_AUTH_TOKEN"),
    audit_path=os.environ.get("REWARD_AUDIT_PATH"),
    max_concurrency=_env_int("REWARD_MAX_CONCURRENCY"),
)


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host="0.0.0.0", port=int(os.environ.get("PORT", "8000")))
