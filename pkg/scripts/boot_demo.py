#!/usr/bin/env python3
"""Boot the demo search application and serve its control plane.

Builds the deploy directory (component packages + configs) if needed, scans
it, and keeps serving until interrupted. The console bundle is served at
/console/ when frontend/dist exists.

Usage:
    python scripts/boot_demo.py [--root demo-workspace] [--bind 127.0.0.1:8800]
"""

import argparse
import sys
import time
from pathlib import Path

from portico.api import serve
from portico.demo import boot_demo

REPO = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default=str(REPO / "demo-workspace"),
                        help="deploy directory to build/scan (default: ./demo-workspace)")
    parser.add_argument("--bind", default="127.0.0.1:8800")
    parser.add_argument("--no-autoscan", action="store_true")
    args = parser.parse_args()

    host, _, port = args.bind.partition(":")
    container = boot_demo(args.root)
    if not args.no_autoscan:
        container.start_autoscan()

    console = REPO / "frontend" / "dist"
    server = serve(container, host=host, port=int(port or 8800),
                   console_dir=console if console.is_dir() else None)
    print(f"demo app up at {server.base_url}")
    print(f"  snapshot : {server.base_url}/api/status")
    print(f"  events   : {server.base_url}/api/events?cursor=0&follow=true")
    if console.is_dir():
        print(f"  console  : {server.base_url}/console/")
    print("try: portico --server", server.base_url, "status")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        print("shutting down")
        server.stop()
        container.stop_autoscan()
    return 0


if __name__ == "__main__":
    sys.exit(main())
