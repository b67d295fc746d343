"""Constraint checks and policy enactment against a runtime configuration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .runtime import (VETOED, ElasticInfrastructureCfg, EnactmentRecord, append_record,
                      scale_in_bottom_up, scale_in_top_down, scale_out_bottom_up,
                      scale_out_top_down)
from .spd import (AbsoluteAdjustment, CooldownConstraint, IntervalConstraint,
                  TargetGroupSizeConstraint, apply_adjustment)


@dataclass(frozen=True)
class Allow:
    size: int


@dataclass(frozen=True)
class Veto:
    reason: str


Verdict = Union[Allow, Veto]


def _last_enactment(history, policy: Optional[str]) -> Optional[float]:
    for rec in reversed(history):
        if rec.enacted and not rec.causal and (policy is None or rec.policy == policy):
            return rec.time
    return None


def check_constraints(policy, tg_cfg, proposed: int, now: float) -> Verdict:
    """Prohibiting constraints veto first; size constraints then clamp.

    Constraints attached to the policy consult only that policy's history,
    those attached to the target group consult the group's whole history.
    """
    scoped = [(c, policy.name) for c in policy.constraints]
    scoped += [(c, None) for c in tg_cfg.spec.constraints]
    for c, scope in scoped:
        if isinstance(c, CooldownConstraint):
            last = _last_enactment(tg_cfg.history, scope)
            if last is not None and now - last < c.duration:
                return Veto("cooldown")
        elif isinstance(c, IntervalConstraint):
            if not c.active_from <= now <= c.active_until:
                return Veto("interval")
    size = proposed
    for c, _ in scoped:
        if isinstance(c, TargetGroupSizeConstraint):
            size = max(size, c.min_elements)
            if c.max_elements is not None:
                size = min(size, c.max_elements)
    return Allow(size)


def enact_policy(policy, cfg, now: float) -> Optional[EnactmentRecord]:
    """Apply a fired policy; returns the record appended to the target's history.

    An absolute adjustment whose goal equals the current size is not an
    enactment attempt and leaves no record (None is returned).
    """
    tg = cfg.groups[policy.target]
    n = tg.size
    proposed = apply_adjustment(policy.adjustment, n)
    if proposed == n and isinstance(policy.adjustment, AbsoluteAdjustment):
        return None
    verdict = check_constraints(policy, tg, proposed, now)
    if isinstance(verdict, Veto) or verdict.size == n:
        if isinstance(verdict, Veto):
            reason = verdict.reason
        elif proposed > n:
            reason = "size-max"
        elif proposed < n:
            reason = "size-min"
        else:
            reason = "min-size"
        rec = EnactmentRecord(now, tg.name, policy.name, n, n, VETOED, reason=reason)
        append_record(cfg, tg, rec)
        return rec
    size = verdict.size
    requested = proposed if proposed != size else None
    bottom_up = isinstance(tg, ElasticInfrastructureCfg)
    if size > n:
        op = scale_out_bottom_up if bottom_up else scale_out_top_down
    else:
        op = scale_in_bottom_up if bottom_up else scale_in_top_down
    report = op(cfg, tg, abs(size - n), now=now, policy=policy.name, requested=requested)
    cfg.enacted_policy = policy.name
    return report.record
