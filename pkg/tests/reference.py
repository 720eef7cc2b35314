"""Frozen reference values.

Numbers marked ``oracle`` come from tests/oracles/derive.py (fixed-step
RK4 shooting, 1-D finite differences, mpmath), which does not import the
package.  Closed forms are written out as expressions.
"""

import math

PI = math.pi

# free Lane-Emden shot from u(0) = 1, N = 2 (oracle: RK4, step 1e-5)
ZERO1_Q3_N2 = 2.9213207237917267
ZERO2_Q3_N2 = 8.208207119594652
ZEROS_Q15_N2 = (2.1896621900906275, 4.542071538085449, 6.737798239753112)

# radial family on the unit ball (oracle: RK4 mass integral + scaling law)
LAM1_B1_Q3_N2 = 6.648511222254991
LAM2_B1_Q3_N2 = 34.53320789382921
LAM_B1_Q15_N2 = (4.581119166362618, 24.37967043613858, 60.08596465430113)
LAM1_B1_Q3_N3 = 11.144426492959933

# interval (0, 1)
LAM1_INT_Q15_RK4 = 10.754273095801308  # oracle: RK4 bump
LAM1_INT_Q15_FD = 10.754273005570063  # oracle: finite differences, h = 1e-4
LAM1_INT_Q3_FD = 8.691873914286068  # oracle: finite differences, h = 1e-4

# classical q = 2 anchors
J01 = 2.404825557695773  # first zero of J0
DISK_LAM1_Q2 = J01**2
SQUARE_LAM1_Q2 = 2 * PI**2

# mpmath (50 digits)
UNION_FACTOR = 0.99869621755675162336  # (256/255)^(-1/3)
CBRT2 = 1.2599210498948731648

# grid values recorded at first run (regression, h = 1/128)
DUMBBELL_RATIO_H128 = 1.2598452399404694
DUMBBELL_LAMBDA1_H128 = 9.52782452395204
