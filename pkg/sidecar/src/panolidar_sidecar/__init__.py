"""Reference inference service for the panolidar caption/detect protocol."""

from .app import create_app
from .canned import CannedStore, build_canned_fixture, image_key
from .config import SidecarConfig, read_config_file
from .contract import ContractCase, contract_suite, format_report

__version__ = "0.1.0"
