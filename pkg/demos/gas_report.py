"""Per-flow gas of the lifecycle scenario next to the published relative costs.

    python3 demos/gas_report.py [config.json]
"""

import sys
from importlib import resources

from blockmedc.config import load_config
from blockmedc.reports import format_gas_report, gas_report
from blockmedc.scenario import load_scenario, run_scenario

path = resources.files("blockmedc.data").joinpath("scenarios", "lifecycle.jsonl")
config = load_config(sys.argv[1] if len(sys.argv) > 1 else None)
runner = run_scenario(load_scenario(path), config)
print(format_gas_report(gas_report(runner.ledger.export_records())))
