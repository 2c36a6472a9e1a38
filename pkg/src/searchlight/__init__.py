"""Searchlight scheduling with exact geometry.

Subpackages and modules: ``geometry`` (rational predicates), ``environment``
(instances and their file format), ``decomposition`` and ``planner`` (exact
cell search), ``verifier`` (sampled intruder replay), ``ncl`` (constraint
logic machines) and ``reducer`` (machines compiled into polygons).
"""
__version__ = "0.1.0"
