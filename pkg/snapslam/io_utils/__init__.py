"""
File boundary of the package: scenario JSON, CSV codecs and run manifests.
"""
from .scenario_file import BUNDLED_SCENARIO, parse_scenario, scenario_from_dict, serialize_scenario, write_scenario
from .manifest import RunManifest, file_sha256, manifest_path, write_manifest
