import sys
from pathlib import Path

import yaml

# Configuration
EXAMPLE_WEIGHTS = [[0.0, 0.3, 0.2], [0.4, 0.0, 0.1], [0.25, 0.35, 0.0]]
HEADER = "# Reference scenario written by setup/create_reference_scenarios.py; edit the generator, not this file.\n"
CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

REFERENCE_SCENARIOS = {
    # Logistic-type growth on the 3-node example; weights doubled so both policies are below the inflow threshold
    "s1_reference": {
        "network": {"weights": EXAMPLE_WEIGHTS, "scale": 2.0},
        "active_nodes": [1, 2],
        "growth": {"family": "S1", "Gamma": 1.0, "K": 10.0, "sigma": 2.0},
        "rho": 0.05,
        "initial_stock": [0.4, 0.3, 0.3],
        "sweep": {"parameter": "rho", "values": [0.01, 0.02, 0.05, 0.1, 0.2]},
    },
    # Same growth on the undoubled network: the planner rate sits above the inflow threshold 0.25
    "s1_threshold": {
        "network": {"weights": EXAMPLE_WEIGHTS},
        "active_nodes": [1, 2],
        "growth": {"family": "S1", "Gamma": 1.0, "K": 10.0, "sigma": 2.0},
        "rho": 0.05,
        "initial_stock": [0.4, 0.3, 0.3],
    },
    "s2_reference": {
        "network": {"weights": EXAMPLE_WEIGHTS, "scale": 2.0},
        "active_nodes": [1],
        "growth": {"family": "S2", "sigma": 0.5, "delta": 0.1},
        "rho": 0.05,
        "initial_stock": [20.0, 20.0, 10.0],
    },
    "s3_reference": {
        "network": {"fick": [[0.0, 1.0], [1.0, 0.0]]},
        "active_nodes": [1],
        "growth": {"family": "S3", "Gamma": 1.0, "K": 2.0},
        "rho": 0.05,
        "initial_stock": [1.0, 0.5],
        "sweep": {"parameter": "f", "values": [1, 2, 3, 4, 5]},
    },
}


def write_scenario(directory: Path, name: str, document: dict) -> Path:
    path = directory / f"{name}.yaml"
    print(f"Writing reference scenario {path}...")
    path.write_text(HEADER + yaml.safe_dump(document, sort_keys=False, default_flow_style=None), encoding="utf-8")
    return path


def set_reference_scenarios(directory) -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return {name: write_scenario(directory, name, document) for name, document in REFERENCE_SCENARIOS.items()}


if __name__ == "__main__":
    set_reference_scenarios(sys.argv[1] if len(sys.argv) > 1 else CONFIG_DIR)
