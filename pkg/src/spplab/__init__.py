"""Collective motion of self-propelled particles among tethered obstacles.

Subpackages cover the stochastic particle simulator (`ibm`), the nonlocal
1D macroscopic solver (`macro1d`), linear stability analysis (`stability`),
the asymptotic-closure verification suite (`asymptotics`), and the shared
geometry/kernel layers (`core`, `kernels`).  `cli` exposes all pipelines as
`spplab` subcommands driven by YAML configs.
"""

__version__ = "0.1.0"
