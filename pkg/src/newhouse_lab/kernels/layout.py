"""Index layout of the parameter vector ``theta`` shared by both backends.

code 0 is the explicit family with the C^2 bump inside ``|x| < eps``;
code 1 is ``f(x, y) = 1 - (ca + cb*y) x^2``.  The vertical maps are always
``K_+(y) = kp*y`` and ``K_-(y) = 1 - km*y``; ``flat > 0`` flattens the strip
``|x| <= flat``.
"""

CODE = 0
KP = 1
KM = 2
FLAT = 3
# explicit family
EPS = 4
RHO = 5
Y0 = 6
HTR = 7
V0 = 8
D1 = 9
CC = 10
PLATEAU = 11
# user quadratic family
CA = 4
CB = 5

SIZE = 12
