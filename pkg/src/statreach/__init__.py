"""statreach: statistical bounded reachability checking for stochastic
hybrid systems.

Models are hybrid automata whose parameters, transition probabilities, and
resets may involve random variables. Reachability questions are answered by
sampling the random variables, deciding each sampled automaton with an
interval-based branch-and-prune engine, and folding the per-sample verdicts
into sequential statistical tests.
"""

__version__ = "0.1.0"
