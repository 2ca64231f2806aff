"""
From transmission-line geometry to a graph
==========================================

Lines arrive as polylines in lon/lat. Endpoints within the snap tolerance
become one substation, parallel circuits collapse into a single edge with
a multiplicity, and a region polygon can cut the graph down to one area.
"""

# %%
import tempfile
from pathlib import Path

from synthgrid.graph import read_graph_csv, write_graph_csv
from synthgrid.ingest import build_graph, clip_region, read_lines_csv, read_region

work = Path(tempfile.mkdtemp())
(work / "lines.csv").write_text(
    "id,voltage_class,wkt\n"
    "L1,345,\"LINESTRING(-100.0 40.0, -99.6 40.2, -99.0 40.0)\"\n"
    "L2,345,\"LINESTRING(-99.00004 40.00003, -98.0 40.5)\"\n"
    "L3,230,\"LINESTRING(-99.0 40.0, -99.5 39.8, -100.0 40.0)\"\n"
    "L4,230,\"LINESTRING(-98.0 40.5, -96.5 41.0)\"\n"
)
(work / "region.txt").write_text("POLYGON((-101 39, -97.5 39, -97.5 41.5, -101 41.5, -101 39))\n")

# %%
# L2 starts a few metres from L1's end, so both share a node; L3 runs
# between the same two substations as L1 and becomes a second circuit.
graph = build_graph(read_lines_csv(work / "lines.csv"), snap_tolerance_km=0.01)
print(f"{graph.n} substations, {graph.m} edges")
for (u, v), straight, actual, k in zip(graph.edges, graph.straight_lengths(),
                                       graph.actual_km, graph.multiplicity):
    print(f"  {u}-{v}: straight {straight:6.1f} km, routed {actual:6.1f} km, circuits {k}")

# %%
# The region stops at -97.5 degrees, so the far end of L4 is dropped.
clipped = clip_region(graph, read_region(work / "region.txt"))
print(f"inside region: {clipped.n} substations, {clipped.m} edges")

# %%
nodes, edges = write_graph_csv(clipped, str(work / "region_"))
print(Path(nodes).read_text())
print("round trip equal:", (read_graph_csv(str(work / "region_")).edges == clipped.edges).all())
