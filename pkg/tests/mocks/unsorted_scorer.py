"""Returns candidates in ascending logprob order, which the protocol forbids."""
import json
import sys

for line in sys.stdin:
    req = json.loads(line)
    cands = [{"token": "a", "logprob": -3.0}, {"token": "b", "logprob": -1.0}]
    print(json.dumps({"id": req["id"], "candidates": cands}), flush=True)
