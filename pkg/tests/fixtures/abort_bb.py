"""Dies from SIGABRT."""
import os

os.abort()
