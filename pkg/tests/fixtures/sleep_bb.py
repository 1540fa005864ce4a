"""Sleeps for x seconds, then prints x."""
import sys
import time

x = float(sys.stdin.readline())
time.sleep(x)
print(x)
