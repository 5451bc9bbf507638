"""Ward linkage reference from scipy. Input: n, then n rows of distances."""
import sys

import numpy as np
from scipy.cluster.hierarchy import linkage
from scipy.spatial.distance import squareform


def main():
    rows = [line.split() for line in open(sys.argv[1]) if line.strip()]
    n = int(rows[0][0])
    d = np.array([[float(v) for v in r] for r in rows[1:1 + n]])
    z = linkage(squareform(d, checks=False), method="ward")
    for a, b, h, size in z:
        print(int(min(a, b)), int(max(a, b)), repr(float(h)), int(size))


if __name__ == "__main__":
    main()
