"""Outputs: objective, g_S = -c_S (<= 0 when the concentration is valid), c2.

When c_S < 0 every output except g_S is NaN.
"""
import sys

x = float(sys.stdin.readline())
c_s = x
if c_s < 0:
    print("NaN", repr(-c_s), "NaN")
else:
    print(repr(x * x), repr(-c_s), repr(x - 5.0))
