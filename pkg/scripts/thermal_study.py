"""Peak temperature per NoI on silicon, and the glass / embedding comparisons.

    python scripts/thermal_study.py
"""

from chipletdse.calibration import thermal_report


def main() -> None:
    rep = thermal_report()
    for kind, t in sorted(rep.silicon_by_kind.items(), key=lambda kv: kv[1]):
        print(f"silicon {kind:<9} {t:7.2f} C")
    print(f"glass   Floret    {rep.glass_floret:7.2f} C")
    print(f"glass   +10% emb. {rep.glass_floret_embedded:7.2f} C  (+{rep.embedding_delta:.2f})")


if __name__ == "__main__":
    main()
