"""Congruent scaled triangles along a free fall.

With positions divided by sqrt(I), the position triangle and the triangle
built from the scaled momenta stay congruent with opposite orientation,
even though I changes by a large factor along the fall.

    python3 demos/scaled_triangles.py
"""
import numpy as np

from tribody import Masses, PhaseState, PotentialSpec, integrate
from tribody.core import wedge
from tribody.potential import PAIRS
from tribody.scaling import congruent_triangles, scale_state


def sides(tri):
    return np.sort([np.hypot(*(tri[i] - tri[j])) for i, j in PAIRS])


def main():
    m = Masses(1.0, 2.0, 0.5)
    q = np.array([[1.0, 0.0], [-0.3, 0.8], [-0.5, -0.6]])
    q -= m.array @ q / m.total
    traj = integrate(PhaseState(0.0, q, np.zeros((3, 2))), PotentialSpec(-1.0, m), (0.0, 1.5))
    I = traj.scalars()["I"]
    print(f"I ranges over [{I.min():.3f}, {I.max():.3f}]")
    print("     t    sides (positions)          sides (momenta)          orientation")
    for t in np.linspace(0.1, traj.t_end, 8):
        a, b = congruent_triangles(scale_state(traj.state_at(t), m), m)
        sa, sb = sides(a), sides(b)
        turn = np.sign(wedge(a[1] - a[0], a[2] - a[0])) * np.sign(wedge(b[1] - b[0], b[2] - b[0]))
        print(f"{t:6.3f}  {np.array2string(sa, precision=4)}  {np.array2string(sb, precision=4)}  "
              f"{'opposite' if turn < 0 else 'same'}")


if __name__ == "__main__":
    main()
