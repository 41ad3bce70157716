"""
The sinc-fractional Laplacian as a convolution
==============================================

Build a kernel, look at a few lattice values, and confirm that the FFT
application agrees with a brute-force sum.
"""

import numpy as np

from sincfraclap import ProblemParams, SincLaplacian, build_kernel, kernel_values

# A 1d lattice with eight points and s = 1/2.
p = ProblemParams(d=1, N=8, s=0.5)
k = build_kernel(p)  # Gauss-Legendre, 7 nodes per cell

# kernel_values holds lag K at index K + N.
g = kernel_values(k)
for K in range(0, 4):
    print(f"Phi({K:+d}) = {g[K + p.N]: .6f}")

# Lag 0 has a closed form: (N pi)^{2s} / (2s + 1).
print("lag 0 closed form:", (p.N * np.pi) ** (2 * p.s) / (2 * p.s + 1))

# Applying the operator: FFT path against the direct O(N^2) sum.
u = np.sin(np.pi * np.arange(p.N) / p.N) ** 2
op = SincLaplacian(k)
fast = op(u)
slow = np.array([sum(u[j] * g[i - j + p.N] for j in range(p.N)) for i in range(p.N)])
print("max |fft - direct| =", np.abs(fast - slow).max())
