import subprocess
import sys

import ducg


def test_version_flag_reports_package_version():
    proc = subprocess.run(
        [sys.executable, "-m", "ducg", "--version"],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == f"ducg {ducg.__version__}"
