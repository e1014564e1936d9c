"""
Comparing sets of point clouds
==============================

Chamfer distance and earth mover's distance compare two clouds; the
leave-one-out 1-nearest-neighbour accuracy compares two *lists* of clouds.
50% means the lists cannot be told apart.
"""
import numpy as np

from softflow.metrics import chamfer, emd, one_nna
from softflow.pointflow import shape_family

rng = np.random.default_rng(0)
chairs = [p.points for p in shape_family("chair", 60, rng, m=64)]
crosses = [p.points for p in shape_family("thin-cross", 30, rng, m=64)]

a, b = chairs[0], chairs[1]
print(f"chair vs chair:  CD {chamfer(a, b):.4f}  EMD {emd(a, b):.4f}")
print(f"chair vs cross:  CD {chamfer(a, crosses[0]):.4f}  EMD {emd(a, crosses[0]):.4f}")

# identical lists: every set's nearest neighbour is its own copy in the other list
print(f"duplicates:          {one_nna(chairs[:10], [c.copy() for c in chairs[:10]]):5.1f}%")
# two halves of one family: the ideal is 50%; with 30 + 30 sets expect about 7 points of scatter
print(f"same family:         {one_nna(chairs[:30], chairs[30:]):5.1f}%")
# different families: near 100%
print(f"different families:  {one_nna(chairs[:30], crosses):5.1f}%")
