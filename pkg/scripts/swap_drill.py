#!/usr/bin/env python3
"""Hot-swap drill: hammer the demo app while swapping search v1 <-> v2.

Reports request throughput, failure count, per-swap event order and the
rebind-to-release gap. A handy way to watch the zero-loss guarantee hold
under sustained load.

Usage:
    python scripts/swap_drill.py [--seconds 10] [--threads 8] [--swaps 5]
"""

import argparse
import sys
import tempfile
import threading
import time

from portico.demo import SWAP_REBIND_PLAN, boot_demo
from portico.runtime.events import Action


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seconds", type=float, default=10.0)
    parser.add_argument("--threads", type=int, default=8)
    parser.add_argument("--swaps", type=int, default=5)
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as root:
        container = boot_demo(root)
        handle = container.handle("userinterface", "app")
        stop = threading.Event()
        counts = [0] * args.threads
        failures: list[BaseException] = []

        def drive(slot: int) -> None:
            while not stop.is_set():
                try:
                    container.invoke(handle, "process", ["cat"])
                except BaseException as e:  # noqa: BLE001
                    failures.append(e)
                counts[slot] += 1

        threads = [threading.Thread(target=drive, args=(i,)) for i in range(args.threads)]
        started = time.monotonic()
        for t in threads:
            t.start()

        gaps = []
        versions = ["search@2.0.0", "search@1.0.0"]
        plans = [SWAP_REBIND_PLAN,
                 [{"connection": "userinterface-finder", "to_port": "search",
                   "adapter": None}]]
        for i in range(args.swaps):
            time.sleep(args.seconds / (args.swaps + 1))
            events = container.swap_instance("search", versions[i % 2], plans[i % 2])
            by_action = {e.action: e for e in events}
            gap = by_action[Action.RELEASED].time - by_action[Action.REBOUND].time
            gaps.append(gap)
            print(f"swap #{i + 1} -> {versions[i % 2]}: "
                  f"{[e.action.value for e in events]} gap={gap * 1000:.1f}ms")

        while time.monotonic() - started < args.seconds:
            time.sleep(0.05)
        stop.set()
        for t in threads:
            t.join(10.0)
        elapsed = time.monotonic() - started

        total = sum(counts)
        print(f"\n{total} requests in {elapsed:.1f}s "
              f"({total / elapsed:.0f}/s across {args.threads} threads)")
        print(f"failures: {len(failures)}")
        print(f"max rebind-to-release gap: {max(gaps) * 1000:.1f}ms")
        return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
