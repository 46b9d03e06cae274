"""Modulo-scheduling place and route."""

from cgrakit.mapper.map import Mapping, MapperConfig, map_dfg
from cgrakit.mapper.mii import MiiReport, compute_mii
from cgrakit.mapper.order import order_nodes
from cgrakit.mapper.router import route_edge

__all__ = ["Mapping", "MapperConfig", "MiiReport", "compute_mii", "map_dfg", "order_nodes", "route_edge"]
