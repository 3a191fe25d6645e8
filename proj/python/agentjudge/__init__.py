"""Trajectory judging, Reflexion refinement, and sandbox rollouts.

Thin re-export of the compiled extension. In an installed package the
extension lives inside this package; in a build tree it sits on PYTHONPATH.
"""

try:
    from ._agentjudge import *  # noqa: F401,F403
    from ._agentjudge import __doc__  # noqa: F401
except ImportError:  # build-tree layout
    from _agentjudge import *  # noqa: F401,F403
    from _agentjudge import __doc__  # noqa: F401
