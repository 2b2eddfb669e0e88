#!/usr/bin/env python3
"""Regenerate the eight-paper golden fixture under tests/data/.

The corpus is the worked topology used throughout the test suite: paper 1
cites 2-6, paper 4 cites 5, paper 7 cites 3 and 4, papers 2 and 6 both
cite 8. The embedding file plants cosine similarities that realize the
golden threshold behaviour at theta1=0.85 / theta2=0.7:

    Sim(2,3) = 0.9   semantic edge added
    Sim(2,6) = 0.8   gated coupling edge added, no semantic edge
    Sim(3,4) = 0.3   gated co-citation edge suppressed
    every other reference pair below 0.85

The vectors are built geometrically (shared leading components), so the
anchored values above are exact. Pure arithmetic, no RNG: rerunning the
script reproduces the files byte-for-byte.
"""

import json
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"

RECORDS = [
    {"id": "1", "year": 2000, "references": ["2", "3", "4", "5", "6"], "topics": ["networks", "evaluation"]},
    {"id": "2", "year": 2002, "references": ["8"], "topics": ["networks"]},
    {"id": "3", "year": 1998, "references": [], "topics": ["graphs", "algorithms"]},
    {"id": "4", "year": 1997, "references": ["5"], "topics": ["graphs"]},
    {"id": "5", "year": 1996, "references": [], "topics": ["algorithms"]},
    {"id": "6", "year": 1999, "references": ["8"], "topics": ["networks", "systems"]},
    {"id": "7", "year": 2001, "references": ["3", "4"], "topics": ["graphs"]},
    {"id": "8", "year": 1994, "references": [], "topics": ["systems"]},
]


def fixture_vectors() -> dict[str, np.ndarray]:
    e = np.eye(8)
    v = {}
    v["2"] = e[0]
    v["3"] = 0.9 * e[0] + np.sqrt(1 - 0.81) * e[1]
    v["6"] = 0.8 * e[0] + 0.6 * e[2]
    a = 0.1
    b = (0.3 - 0.9 * a) / np.sqrt(1 - 0.81)
    v["4"] = a * e[0] + b * e[1] + np.sqrt(1 - a * a - b * b) * e[3]
    v["5"] = 0.1 * e[0] + np.sqrt(0.99) * e[4]
    centroid = v["2"] + v["3"] + v["4"] + v["5"] + v["6"]
    v["1"] = centroid / np.linalg.norm(centroid)
    v["7"] = e[6]
    v["8"] = e[7]
    return {rid: vec.astype(np.float32) for rid, vec in v.items()}


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    with (DATA_DIR / "f1.jsonl").open("w", encoding="utf-8", newline="\n") as out:
        for rec in RECORDS:
            obj = {
                "id": rec["id"],
                "title": f"Paper {rec['id']}",
                "abstract": f"Abstract of paper {rec['id']}.",
                "year": rec["year"],
                "venue": "J1",
                "rank": "Q1",
                "references": sorted(rec["references"]),
                "topics": sorted(rec["topics"]),
            }
            out.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n")
    vectors = fixture_vectors()
    with (DATA_DIR / "f1_vectors.jsonl").open("w", encoding="utf-8", newline="\n") as out:
        out.write("# planted fixture vectors, dim=8\n")
        for rid in sorted(vectors):
            row = {"id": rid, "vector": [float(x) for x in vectors[rid]]}
            out.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")
    print(f"wrote {DATA_DIR / 'f1.jsonl'} and {DATA_DIR / 'f1_vectors.jsonl'}")


if __name__ == "__main__":
    main()
