#!/usr/bin/env python3
"""
Comprehensive test runner for nilflow.

Runs the unit, property and CLI suites as separate pytest phases, then the
quick acceptance suite, and prints one summary. Exit code 1 if any phase fails.
"""

import os
import subprocess
import sys
from pathlib import Path

RULE = '=' * 70
PROPERTY_GLOB = 'test_*properties*.py'
CLI_TESTS = ['tests/test_cli.py']
PHASE_TIMEOUT = 1800
ACCEPTANCE_TIMEOUT = 180


def run_command(cmd, description, timeout=PHASE_TIMEOUT):
    """Run a command, echo its output, and report success within ``timeout`` seconds."""
    print(f"\n{description}\n$ {' '.join(cmd)}\n")
    try:
        result = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        print(f"TIMEOUT: no result after {timeout}s")
        return False
    print(result.stdout)
    if result.stderr:
        print("STDERR:", result.stderr)
    return result.returncode == 0


def build_phases(python):
    property_files = sorted(str(f) for f in Path('tests').glob(PROPERTY_GLOB))
    ignored = [arg for f in property_files + CLI_TESTS for arg in ('--ignore', f)]
    phases = [
        ('unit_tests', "UNIT TESTS",
         [python, '-m', 'pytest', 'tests/', '-v', '--tb=short', '-m', 'not slow'] + ignored, PHASE_TIMEOUT),
        ('cli_tests', "CLI TESTS",
         [python, '-m', 'pytest'] + CLI_TESTS + ['-v'], PHASE_TIMEOUT),
        ('acceptance', "ACCEPTANCE SUITE (quick)",
         [python, 'nilflow-cli.py', 'verify-all', '--quick'], ACCEPTANCE_TIMEOUT),
    ]
    if property_files:
        phases.insert(1, ('property_tests', "PROPERTY-BASED TESTS",
                          [python, '-m', 'pytest'] + property_files + ['-v'], PHASE_TIMEOUT))
    return phases


def main():
    print(f"{RULE}\nCOMPREHENSIVE TEST SUITE - nilflow\n{RULE}")
    os.chdir(Path(__file__).parent)

    results = {}
    for number, (key, title, cmd, timeout) in enumerate(build_phases(sys.executable), start=1):
        print(f"\n\n{RULE}\nPHASE {number}: {title}\n{RULE}")
        results[key] = run_command(cmd, title.capitalize(), timeout)

    print(f"\n\n{RULE}\nTEST SUMMARY\n{RULE}")
    for key, passed in results.items():
        print(f"{key:30s}: {'✓ PASSED' if passed else '✗ FAILED'}")
    print(RULE)

    if all(results.values()):
        print("\n✓ ALL TESTS PASSED")
        return 0
    print("\n✗ SOME TESTS FAILED - Review output above")
    return 1


if __name__ == '__main__':
    sys.exit(main())
