from .tools import create_missing_folders, save_json, limited_threads
from .quadrature import QuadratureRule, quadrature, edge_quadrature
