"""Writes data/linkedin_demo.csv: synthetic career histories.

Each user moves between companies; a move is more likely to target a company
in the same cluster as the current one. Times are years since the first job.
"""
import csv
import random
import sys

COMPANIES = ["acme", "globex", "initech", "umbrella", "hooli", "stark"]
CLUSTERS = {"acme": 0, "globex": 0, "initech": 0, "umbrella": 1, "hooli": 1, "stark": 1}
TITLES = ["engineer", "analyst", "manager", "designer"]


def main(path, users=40, seed=7):
    rng = random.Random(seed)
    rows = []
    for u in range(users):
        t = round(rng.uniform(0.0, 1.0), 3)
        company = rng.choice(COMPANIES)
        titles = rng.sample(TITLES, rng.randint(1, 2))
        for _ in range(rng.randint(3, 9)):
            rows.append((f"user{u:03d}", t, company, rng.choice(titles)))
            same = [c for c in COMPANIES if CLUSTERS[c] == CLUSTERS[company] and c != company]
            company = rng.choice(same) if rng.random() < 0.75 else rng.choice(COMPANIES)
            t = round(t + rng.expovariate(0.6) + 0.05, 3)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "time", "event", "option1"])
        w.writerows(rows)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/linkedin_demo.csv")
