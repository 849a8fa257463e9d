import os
import sys
import subprocess
from typing import List
from alive_progress import alive_bar
from errors import ConfigurationError
from models import ExperimentSpec, ExperimentSummary, GridSpec
from runExperiment import summaryHeader, summaryRow
from utils import loadJson, writeCsv

mainScript = os.path.join(os.path.dirname(os.path.abspath(__file__)), "main.py")


def experimentCommand(path: str, outputDir: str) -> List[str]:
    return [sys.executable, mainScript, "run-experiment", "--config", path, "--outputDir", outputDir]


def runGrid(gridPath: str) -> int:
    """
    one subprocess per experiment config, at most maxProcesses at a time;
    summaries merged in file order
    """
    grid = loadJson(gridPath, GridSpec)
    if not grid.experiments:
        raise ConfigurationError(f"{gridPath} lists no experiments")
    if grid.maxProcesses < 1:
        raise ConfigurationError(f"maxProcesses must be >= 1, got {grid.maxProcesses}")

    # fail before launching anything if a config is broken
    specs = [loadJson(path, ExperimentSpec) for path in grid.experiments]
    names = [spec.name for spec in specs]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"experiment names in {gridPath} must be unique: {names}")

    runDir = os.path.join(grid.outputDir, grid.name)
    pending = list(grid.experiments)
    running = []
    exitCodes = {}

    with alive_bar(len(pending), title=grid.name) as aliveBar:
        while pending or running:
            while pending and len(running) < grid.maxProcesses:
                path = pending.pop(0)
                print(f"Running {path} as subprocess")
                process = subprocess.Popen(experimentCommand(path, runDir), stdout=subprocess.DEVNULL)
                running.append((path, process))

            path, process = running.pop(0)
            exitCodes[path] = process.wait()
            aliveBar()

    rows = []
    for path, spec in zip(grid.experiments, specs):
        if exitCodes[path] != 0:
            print(f"{path} exited with {exitCodes[path]}", file=sys.stderr)
            continue

        summary = loadJson(os.path.join(runDir, spec.name, "summary.json"), ExperimentSummary)
        rows.append(summaryRow(summary))

    out = os.path.join(runDir, "grid_summary.csv")
    writeCsv(out, summaryHeader, rows)
    print(f"Merged {len(rows)} of {len(specs)} summaries into {out}")

    return 0 if len(rows) == len(specs) else 1
