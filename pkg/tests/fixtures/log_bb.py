"""Prints (log x)^2; crashes (uncaught ValueError) for x <= 0."""
import math
import sys

x = float(sys.stdin.readline())
print(repr(math.log(x) ** 2))
