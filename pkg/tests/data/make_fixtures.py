"""Regenerate the CSV fixtures in this directory (deterministic)."""

import csv
import datetime as dt
import random
from pathlib import Path

HERE = Path(__file__).parent
STATIONS = [
    ("CHM00058362", "SHANGHAI", "31.40", "121.46", 6.0),
    ("EI000003969", "DUBLIN", "53.364", "-6.350", 9.5),
]


def write(path, days, start=dt.date(1951, 1, 1), seed=20201):
    rng = random.Random(seed)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_ALL, lineterminator="\n")
        writer.writerow(["STATION", "NAME", "LATITUDE", "LONGITUDE", "DATE", "PRCP", "TAVG"])
        for sid, name, lat, lon, base in STATIONS:
            for i in range(days):
                day = start + dt.timedelta(days=i)
                prcp = max(0.0, rng.gauss(1.5, 3.0))
                tavg = rng.gauss(base, 2.5)
                writer.writerow([sid, name, lat, lon, day.isoformat(), f"{prcp:.1f}", f"{tavg:.1f}"])


if __name__ == "__main__":
    write(HERE / "fixture.csv", 50)
    write(HERE / "january1951.csv", 31, seed=1951)
