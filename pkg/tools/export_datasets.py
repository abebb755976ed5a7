"""Write the bundled edge lists (1-based vertex ids) from networkx's copies.

    python3 tools/export_datasets.py

networkx is needed only here; the package reads the plain text files.
"""

from pathlib import Path

import networkx as nx

OUT = Path(__file__).resolve().parents[1] / "src" / "irggkss" / "data"

# two-group split of the karate club used for the block-model fits
KARATE_GROUP1 = {1, 2, 3, 4, 5, 6, 7, 8, 11, 12, 13, 14, 17, 18, 20, 22}


def write_edges(path, header, n, edges):
    lines = [f"# {h}" for h in header] + [f"# n = {n}"]
    lines += [f"{u} {v}" for u, v in sorted((min(a, b), max(a, b)) for a, b in edges)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def main():
    g = nx.karate_club_graph()
    write_edges(OUT / "karate.edges", ["Zachary karate club, 34 members, 78 ties"], 34,
                [(u + 1, v + 1) for u, v in g.edges()])
    labels = [1 if v in KARATE_GROUP1 else 2 for v in range(1, 35)]
    (OUT / "karate_2groups.labels").write_text("\n".join(map(str, labels)) + "\n", encoding="utf-8")

    f = nx.florentine_families_graph()
    names = sorted(f.nodes())
    idx = {name: i + 1 for i, name in enumerate(names)}
    write_edges(OUT / "florentine.edges",
                ["Florentine families, marriage ties (Padgett)",
                 "vertex order: " + ", ".join(names)], len(names),
                [(idx[a], idx[b]) for a, b in f.edges()])


if __name__ == "__main__":
    main()
