#!/usr/bin/env python3
"""Scripted closed-loop episode against a running control service.

Starts a session, records a noise-only baseline, injects a disturbance, then
applies the model's suggested action every cycle and prints the deviation
score until it recovers. The service must be running, e.g.:

    awm serve --ckpt model.awm1 --port 8000

    python3 scripts/control_demo.py --url http://127.0.0.1:8000 --disturb 0.3 0 0
"""

import argparse

import requests


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--url", default="http://127.0.0.1:8000")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--disturb", nargs=3, type=float, default=[0.3, 0.0, 0.0],
                        metavar=("HP", "IS", "MT"))
    parser.add_argument("--baseline-cycles", type=int, default=3)
    parser.add_argument("--max-cycles", type=int, default=10)
    args = parser.parse_args(argv)

    base = args.url.rstrip("/")
    sid = requests.post(f"{base}/sessions", json={"seed": args.seed}).json()["session_id"]
    print(f"session {sid}")

    scores = []
    for _ in range(args.baseline_cycles):
        cycle = requests.post(f"{base}/sessions/{sid}/cycle").json()
        scores.append(cycle["deviation_score"])
        print(f"cycle {cycle['cycle_id']:>3}  deviation {cycle['deviation_score']:.4f}  (baseline)")
    baseline = sum(scores) / len(scores)

    requests.post(f"{base}/sessions/{sid}/disturb", json={"offset": args.disturb})
    print(f"disturbance {args.disturb} injected; baseline {baseline:.4f}")

    for _ in range(args.max_cycles):
        cycle = requests.post(f"{base}/sessions/{sid}/cycle").json()
        dev = cycle["deviation_score"]
        print(f"cycle {cycle['cycle_id']:>3}  deviation {dev:.4f}  "
              f"suggestion {[round(v, 3) for v in cycle['suggested_action']]}")
        if dev < 2.0 * baseline:
            print("recovered")
            return 0
        requests.post(f"{base}/sessions/{sid}/adjust",
                      json={"delta": cycle["suggested_action"]})
    print("did not recover within the cycle budget")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
