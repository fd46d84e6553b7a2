"""Re-fit the frozen thermal and warpage constants and print the reference temperatures.

    python scripts/calibrate.py

The fitted values should match SINK_RESISTANCE_K_PER_W (thermal.py) and
WARPAGE_SCALE / RELIEF_COEFFICIENT (package.py); tests/test_calibration.py
checks this.
"""

from chipletdse.cli import main

if __name__ == "__main__":
    raise SystemExit(main(["calibrate"]))
