#!/usr/bin/env python3
"""Authoring-time structural check for a corpus file.

A second, independent implementation of the structural rules the C++
validator enforces, used while editing the corpus. Exits 1 and prints the
offending items when a rule fails.
"""

import collections
import json
import sys

HUB_TARGETS = {"JumpBPR": ("BPR", "bpr"), "JumpSAA": ("SAA", "saa"),
               "JumpDiseaseGroup": ("DiseaseGroup", "association")}


def main():
    doc = json.load(open(sys.argv[1], encoding="utf-8"))
    nodes = {n["id"]: n for n in doc["nodes"]}
    edges = doc["edges"]
    problems = []

    kinds = collections.Counter(n["kind"] for n in nodes.values())
    if kinds["Start"] != 1 or kinds["Stop"] < 1:
        problems.append("start/stop count")

    adj = collections.defaultdict(set)
    for e in edges:
        if e["from"] not in nodes or e["to"] not in nodes:
            problems.append(f"dangling {e}")
            continue
        adj[e["from"]].add(e["to"])
        adj[e["to"]].add(e["from"])
    start = next(i for i, n in nodes.items() if n["kind"] == "Start")
    seen, todo = {start}, [start]
    while todo:
        for nxt in adj[todo.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    problems += [f"unreachable {i}" for i in nodes if i not in seen]

    out = collections.defaultdict(list)
    for e in edges:
        out[e["from"]].append(e)
    for i, n in nodes.items():
        ks = [e["kind"] for e in out[i]]
        if n["kind"] == "DecisionYN":
            if ks.count("yes") != 1 or ks.count("no") != 1 or "R" in ks:
                problems.append(f"yes/no shape {i}")
        elif "yes" in ks or "no" in ks:
            problems.append(f"yes/no outside DecisionYN {i}")
        ranks = [e["rank"] for e in out[i] if e["kind"] == "R"]
        if len(ranks) != len(set(map(str, ranks))):
            problems.append(f"duplicate rank {i}")
        if "d_type" in n and "value" not in n:
            problems.append(f"d_type without value {i}")
        if "min" in n and "max" in n and n["min"] > n["max"]:
            problems.append(f"min>max {i}")

    pairs = {(e["from"], e["to"], e["kind"]) for e in edges}
    for hub, n in nodes.items():
        if n["kind"] not in HUB_TARGETS:
            continue
        target_kind, link = HUB_TARGETS[n["kind"]]
        for t, tn in nodes.items():
            if tn["kind"] == target_kind and ((hub, t, link) not in pairs or (t, hub, link) not in pairs):
                problems.append(f"hub {hub} missing pair with {t}")

    for p in problems:
        print(p)
    print(f"{len(nodes)} nodes, {len(edges)} edges, {len(problems)} problems")
    sys.exit(1 if problems else 0)


if __name__ == "__main__":
    main()
