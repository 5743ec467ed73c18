"""Strategic classification with an uncertain, structured manipulation cost.

Agents move their features to earn a positive prediction, paying a cost
``||diag(eig)^{1/2} (x' - x)||_p``. The eigenvalues are only known to lie in
per-coordinate intervals, and the learner minimizes the worst-case strategic
hinge risk over that box.

Submodules: :mod:`~strat.core` (types), :mod:`~strat.norms`,
:mod:`~strat.response` (best responses and losses), :mod:`~strat.adversary`
(exact worst-case cost), :mod:`~strat.solvers`, :mod:`~strat.convexity`,
:mod:`~strat.analysis` (hardness constructions), :mod:`~strat.data` and the
``strat`` command line.
"""

__version__ = "0.1.0"
