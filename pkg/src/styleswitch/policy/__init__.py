"""Daily trading and block-level switch policies."""

from .base import Action, DecisionContext, HoldingView, SwitchContext, SwitchDecision
from .llm import ChatClient, LLMFailure, LLMPolicy, llm_complete
from .rules import RulePolicy

__all__ = [
    "Action", "ChatClient", "DecisionContext", "HoldingView", "LLMFailure", "LLMPolicy",
    "RulePolicy", "SwitchContext", "SwitchDecision", "llm_complete",
]
