"""Chat-completion policy: OpenAI-compatible endpoint, JSON replies, retry with backoff."""

from __future__ import annotations

import json
import logging
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import httpx

from ..config import LLMConfig
from ..ledger import Side
from . import prompts
from .base import Action, DecisionContext, SwitchContext, SwitchDecision

log = logging.getLogger(__name__)


class LLMFailure(RuntimeError):
    """Retry budget exhausted; ``attempts`` holds the per-attempt error strings."""

    def __init__(self, message: str, attempts: list[str]):
        super().__init__(message)
        self.attempts = attempts


class SchemaError(ValueError):
    pass


_FENCE = re.compile(r"^```(?:json)?\s*|\s*```$", re.S)


def extract_json(content: str) -> dict:
    text = _FENCE.sub("", content.strip())
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        start, end = text.find("{"), text.rfind("}")
        if start < 0 or end <= start:
            raise SchemaError("reply holds no JSON object") from None
        try:
            obj = json.loads(text[start:end + 1])
        except json.JSONDecodeError as exc:
            raise SchemaError(f"unparsable JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise SchemaError("reply JSON is not an object")
    return obj


def parse_daily(obj: dict) -> tuple[Side, float, str]:
    side = str(obj.get("side", obj.get("action", ""))).strip().upper()
    sides = {"BUY": Side.BUY, "SELL": Side.SELL, "HOLD": Side.HOLD}
    if side not in sides:
        raise SchemaError(f"side must be BUY/SELL/HOLD, got {side!r}")
    try:
        conf = float(obj.get("confidence", 1.0))
    except (TypeError, ValueError):
        raise SchemaError("confidence is not a number") from None
    if not 0.0 <= conf <= 1.0:
        raise SchemaError(f"confidence {conf} outside [0, 1]")
    return sides[side], conf, str(obj.get("reason", ""))


def parse_switch(obj: dict) -> tuple[bool, str]:
    if "switch" in obj:
        val = obj["switch"]
        if isinstance(val, bool):
            go = val
        elif str(val).strip().lower() in ("true", "switch", "yes"):
            go = True
        elif str(val).strip().lower() in ("false", "stay", "no"):
            go = False
        else:
            raise SchemaError(f"switch must be boolean, got {val!r}")
    elif "decision" in obj and str(obj["decision"]).strip().lower() in ("switch", "stay"):
        go = str(obj["decision"]).strip().lower() == "switch"
    else:
        raise SchemaError("reply lacks a switch field")
    reason = str(obj.get("reason", "")).strip()
    if not reason:
        raise SchemaError("reply lacks a reason")
    return go, reason


class ChatClient:
    """Minimal chat-completion client. Transport errors, non-2xx statuses and
    replies rejected by the parser all consume one attempt of the budget."""

    def __init__(self, cfg: LLMConfig, transport: Optional[httpx.BaseTransport] = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.cfg = cfg
        self.sleep = sleep
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(cfg.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(base_url=cfg.base_url.rstrip("/"), headers=headers,
                                  timeout=cfg.timeout, transport=transport)

    def close(self) -> None:
        self._http.close()

    def complete(self, system: str, user: str, parse: Callable[[dict], object]):
        body = {
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [{"role": "system", "content": system}, {"role": "user", "content": user}],
        }
        errors: list[str] = []
        for attempt in range(self.cfg.retries + 1):
            if attempt:
                self.sleep(self.cfg.backoff * 2 ** (attempt - 1))
            try:
                resp = self._http.post("/chat/completions", json=body)
                resp.raise_for_status()
                content = resp.json()["choices"][0]["message"]["content"]
                return parse(extract_json(content))
            except (httpx.HTTPError, SchemaError, KeyError, IndexError, TypeError, ValueError) as exc:
                errors.append(f"{type(exc).__name__}: {exc}")
                log.warning("llm attempt %d failed: %s", attempt + 1, errors[-1])
        raise LLMFailure(f"retry budget exhausted after {len(errors)} attempts", errors)


def llm_complete(client: ChatClient, prompt: str, schema: str, system: str = ""):
    """Send one prompt; ``schema`` is ``"daily"`` or ``"switch"``."""
    parse = {"daily": parse_daily, "switch": parse_switch}[schema]
    return client.complete(system, prompt, parse)


class LLMPolicy:
    kind = "llm"

    def __init__(self, cfg: LLMConfig, client: Optional[ChatClient] = None):
        self.cfg = cfg
        self.client = client or ChatClient(cfg)
        self.failures: list[str] = []

    def _daily_one(self, ctx: DecisionContext, ticker: str) -> Action:
        user = prompts.trading_prompt(ctx, ticker) + "\n" + prompts.DAILY_FORMAT
        try:
            side, conf, reason = llm_complete(self.client, user, "daily", ctx.persona_text)
        except LLMFailure as exc:
            msg = f"llm failure, holding: {exc.attempts[-1] if exc.attempts else exc}"
            self.failures.append(f"agent {ctx.agent_id} {ctx.date} {ticker}: {msg}")
            return Action(ticker, Side.HOLD, 0.0, msg)
        return Action(ticker, side, conf, reason)

    def decide_daily(self, ctx: DecisionContext) -> list[Action]:
        return self.decide_daily_batch([ctx])[0]

    def decide_daily_batch(self, ctxs: list[DecisionContext]) -> list[list[Action]]:
        jobs = [(c, t) for c in ctxs for t in c.tickers]
        with ThreadPoolExecutor(max_workers=max(1, self.cfg.max_in_flight)) as pool:
            results = list(pool.map(lambda job: self._daily_one(*job), jobs))
        # pool.map preserves submission order, so results line up with jobs
        out, k = [], 0
        for c in ctxs:
            out.append(results[k:k + len(c.tickers)])
            k += len(c.tickers)
        return out

    def decide_switch(self, ctx: SwitchContext) -> SwitchDecision:
        user = (
            prompts.switch_prompt(ctx)
            + f"\nBlock P&L: {ctx.block_pnl:.2f}; year-to-date P&L: {ctx.ytd_pnl:.2f}.\n"
            + prompts.SWITCH_FORMAT
        )
        try:
            go, reason = llm_complete(self.client, user, "switch", ctx.persona_text)
        except LLMFailure as exc:
            msg = f"llm failure, staying: {exc.attempts[-1] if exc.attempts else exc}"
            self.failures.append(f"agent {ctx.agent_id} block {ctx.block_index}: {msg}")
            return SwitchDecision(False, msg)
        return SwitchDecision(go, reason)

    def decide_switch_batch(self, ctxs: list[SwitchContext]) -> list[SwitchDecision]:
        with ThreadPoolExecutor(max_workers=max(1, self.cfg.max_in_flight)) as pool:
            return list(pool.map(self.decide_switch, ctxs))
