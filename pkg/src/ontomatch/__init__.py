"""Ontology-driven matchmaking marketplace.

Providers publish typed resource advertisements against a shared schema,
clients issue weighted demands, and the ranking engine scores supplies by
conflict, potential, and elicitable extra knowledge.  Results can be
presented flat or grouped and collected from networked peers.
"""

__version__ = "0.1.0"
