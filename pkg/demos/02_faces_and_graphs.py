"""From a solid to its face-adjacency graph observation.

Every leaf primitive contributes candidate faces (two caps plus one
lateral face per profile segment); a face survives if any of its 100 UV
samples sits on the composite boundary.  Node features are the 708-wide
concatenation [type one-hot | points/Delta | normals | validity mask].

Run:  python demos/02_faces_and_graphs.py
"""

import numpy as np

from cadgym.brep import build_graph, extract_faces
from cadgym.fixtures import cube_with_boss, full_cylinder

solid = full_cylinder(radius=1.0, height=2.0)
faces = extract_faces(solid)
print("cylinder faces:")
for f in faces:
    print(f"  face {f.face_id}: {f.surface_type:9s} "
          f"valid {int(f.valid.sum()):3d}/100")

graph = build_graph(faces, solid)
print("feature matrix:", graph.node_features.shape)
print("row sums of normalized adjacency:",
      graph.adj_normalized.sum(axis=1))
print("normalization extent Delta:", graph.bbox_delta)

# a boolean that pierces a face leaves a partially-valid mask behind
boss = cube_with_boss()
for f in extract_faces(boss):
    if f.leaf_index == 0 and f.local_index == 1:
        mask = f.valid.reshape(10, 10).astype(int)
        print("\nouter-cube top cap validity mask (boss hole visible):")
        for row in mask:
            print("  " + "".join(".#"[v] for v in row))
