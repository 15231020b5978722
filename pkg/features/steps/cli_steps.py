import tempfile
from pathlib import Path

import pandas as pd
from behave import when, then

from scenario_utils import run_cli


@when('I run netharvest "{command}" on the reference scenario "{name}"')
def step_run_reference(context, command, name):
    run_cli(context, command, context.scenario_files[name])


@when('I run netharvest "{command}" on the document')
def step_run_document(context, command):
    path = Path(tempfile.mkdtemp(prefix="doc-", dir=context.workdir)) / "scenario.yaml"
    path.write_text(context.text + "\n", encoding="utf-8")
    run_cli(context, command, path)


@then('the exit code should be {code:d}')
def step_assert_exit_code(context, code):
    log = context.out_dir / "netharvest.log"
    tail = log.read_text(encoding="utf-8")[-2000:] if log.exists() else ""
    assert context.exit_code == code, f"Exit code {context.exit_code}, expected {code}; log tail:\n{tail}"


@then('the output directory should contain "{names}"')
def step_assert_outputs(context, names):
    missing = [name for name in names.split(",") if not (context.out_dir / name).exists()]
    assert len(missing) == 0, f"Missing outputs {missing} in {sorted(p.name for p in context.out_dir.iterdir())}"


@then('the key-value report should contain "{line}"')
def step_assert_keyvalue_line(context, line):
    lines = (context.out_dir / "report.kv").read_text(encoding="utf-8").splitlines()
    assert line in lines, f"'{line}' not in the key-value report"


@then('the text report should have the sections "{sections}"')
def step_assert_text_sections(context, sections):
    text = (context.out_dir / "report.txt").read_text(encoding="utf-8")
    missing = [name for name in sections.split(",") if f"[{name}]" not in text]
    assert len(missing) == 0, f"Text report is missing sections {missing}"


@then('the sweep table should have {rows:d} rows over "{parameter}"')
def step_assert_sweep_table(context, rows, parameter):
    frame = pd.read_csv(context.out_dir / "sweep.csv")
    assert parameter in frame.columns, f"Sweep columns {list(frame.columns)} lack {parameter}"
    assert len(frame) == rows, f"Sweep has {len(frame)} rows, expected {rows}"


@then('the log should mention "{fragment}"')
def step_assert_log_mentions(context, fragment):
    log = (context.out_dir / "netharvest.log").read_text(encoding="utf-8")
    assert fragment in log, f"'{fragment}' not found in the run log"
