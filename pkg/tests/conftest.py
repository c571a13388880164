import os
import sys

# importlib import mode keeps module names collision-free across packages
# but no longer puts this directory on sys.path; helpers.py needs it there.
sys.path.insert(0, os.path.dirname(__file__))
