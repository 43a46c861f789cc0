#!/usr/bin/env python3
"""Derives the corpus manifest by scanning the corpus file line by line.

Deliberately does not parse JSON: every node and edge lives on its own line,
so counting `"kind": "..."` occurrences inside the nodes/edges arrays gives
counts that are independent of the C++ parser under test.

    python3 tools/corpus/count_manifest.py corpus/kirett_sample.json > corpus/kirett_sample.manifest.json
"""

import json
import re
import sys

KIND = re.compile(r'"kind":\s*"([^"]+)"')


def scan(path):
    section = None
    nodes, edges = {}, {}
    with open(path, encoding="utf-8") as f:
        for raw in f:
            stripped = raw.strip()
            if stripped.startswith('"nodes": ['):
                section = nodes
                continue
            if stripped.startswith('"edges": ['):
                section = edges
                continue
            if stripped.startswith("]"):
                section = None
                continue
            if section is None:
                continue
            m = KIND.search(stripped)
            if m:
                section[m.group(1)] = section.get(m.group(1), 0) + 1
    return nodes, edges


def main():
    nodes, edges = scan(sys.argv[1])
    manifest = {
        "node_count": sum(nodes.values()),
        "edge_count": sum(edges.values()),
        "nodes_by_kind": dict(sorted(nodes.items())),
        "edges_by_kind": dict(sorted(edges.items())),
        "bpr_count": nodes.get("BPR", 0),
        "saa_count": nodes.get("SAA", 0),
    }
    json.dump(manifest, sys.stdout, indent=2, ensure_ascii=False)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
