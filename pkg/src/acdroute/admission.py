"""Per-call admission decisions at the clone interfaces.

Each vendor is impersonated by a clone interface; billing still routes by
static preference, but the clone may refuse the call with a failover-class
code so billing retries on the other route. A call is only ever refused once:
its retry must go through, otherwise the caller would lose the call entirely.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .domain import classify_response, triggers_failover
from .rejection import RejectionResult

# 5xx so billing treats the clone as a failed route and tries the next one
REJECTION_CODE = 503
DEFAULT_SEEN_TTL_S = 3600.0

_SEEN_PRUNE_SIZE = 16384


@dataclass(frozen=True)
class Decision:
    """Outcome of one admission check."""

    accepted: bool
    code: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.accepted:
            if self.code is None or not triggers_failover(classify_response(self.code)):
                raise ValueError("a rejection must carry a failover-class code")

    @classmethod
    def accept(cls) -> "Decision":
        return cls(accepted=True)

    @classmethod
    def reject(cls, code: int = REJECTION_CODE) -> "Decision":
        return cls(accepted=False, code=code)


class AdmissionController:
    """Holds the current rejection targets and the at-most-once ledger.

    Thread-safe: decisions, counter updates and target refreshes may come from
    concurrent call-handling contexts; a decision never observes a torn target
    pair. Targets start absent (cold start) and every call is accepted until
    the first interval closes.
    """

    def __init__(
        self,
        vendors: Tuple[int, int],
        seed: int = 0,
        seen_ttl_s: float = DEFAULT_SEEN_TTL_S,
        reject_code: int = REJECTION_CODE,
    ):
        if len(set(vendors)) != 2:
            raise ValueError("a routing group holds exactly two distinct vendors")
        if seen_ttl_s <= 0:
            raise ValueError("seen_ttl_s must be positive")
        if not triggers_failover(classify_response(reject_code)):
            raise ValueError(f"reject code {reject_code} would not trigger failover")
        self.vendors = tuple(vendors)
        self.seen_ttl_s = seen_ttl_s
        self.reject_code = reject_code
        self._lock = threading.Lock()
        self._rng = random.Random(seed)
        self._targets: Dict[int, Optional[float]] = {v: None for v in vendors}
        self._seen: Dict[str, float] = {}
        self._received: Dict[int, int] = {v: 0 for v in vendors}
        self._rejected: Dict[int, int] = {v: 0 for v in vendors}

    def decide(self, call_id: str, vendor: int, now: Optional[float] = None) -> Decision:
        """Accept or reject one call attempt on a clone interface.

        ``now`` is seconds on whatever clock drives the system (simulated or
        wall); it defaults to wall time and only matters for the rejection
        ledger's TTL.
        """
        if now is None:
            now = time.time()
        with self._lock:
            if vendor not in self._targets:
                raise ValueError(f"vendor {vendor} is not one of the configured clones")
            expiry = self._seen.get(call_id)
            if expiry is not None:
                if expiry > now:
                    # already rejected once: the retry must pass
                    return Decision.accept()
                del self._seen[call_id]
            target = self._targets[vendor]
            if target is not None and target > 0.0:
                if self._rng.random() < target / 100.0:
                    self._seen[call_id] = now + self.seen_ttl_s
                    if len(self._seen) > _SEEN_PRUNE_SIZE:
                        self._prune(now)
                    return Decision.reject(self.reject_code)
            return Decision.accept()

    def record_decision(self, vendor: int, decision: Decision) -> None:
        """Update the interval counters: authorized and rejected calls are
        counted separately (received does not include rejected)."""
        with self._lock:
            if vendor not in self._targets:
                raise ValueError(f"vendor {vendor} is not one of the configured clones")
            if decision.accepted:
                self._received[vendor] += 1
            else:
                self._rejected[vendor] += 1

    def refresh_targets(self, result: RejectionResult) -> None:
        """Swap in a just-closed interval's targets atomically.

        Result indexes follow the vendor order given at construction.
        """
        with self._lock:
            self._targets = {
                self.vendors[0]: result.reject_pct_exact[0],
                self.vendors[1]: result.reject_pct_exact[1],
            }

    @property
    def targets(self) -> Dict[int, Optional[float]]:
        with self._lock:
            return dict(self._targets)

    @property
    def counters(self) -> Tuple[Dict[int, int], Dict[int, int]]:
        with self._lock:
            return dict(self._received), dict(self._rejected)

    def snapshot_and_reset_counters(self) -> Tuple[Dict[int, int], Dict[int, int]]:
        """Atomically read and zero the per-interval counters (interval close)."""
        with self._lock:
            snapshot = dict(self._received), dict(self._rejected)
            self._received = {v: 0 for v in self.vendors}
            self._rejected = {v: 0 for v in self.vendors}
            return snapshot

    def _prune(self, now: float) -> None:
        # caller holds the lock
        self._seen = {cid: exp for cid, exp in self._seen.items() if exp > now}
