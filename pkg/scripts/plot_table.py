"""
Plot ruin probability against initial surplus from a `table` CSV

Solid lines: no investment. Dashed lines: Merton investment.

    python main.py table --config configs/reference.cfg --out table.csv
    python scripts/plot_table.py table.csv --out ruin.png
"""
import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt


def load_rows(path: str) -> dict:
    series = defaultdict(list)
    with open(path, newline='', encoding='utf-8') as f:
        for row in csv.DictReader(f):
            series[row['dist']].append((float(row['x']), float(row['psi_no_invest']), float(row['psi_invest'])))
    return {dist: sorted(points) for dist, points in series.items()}


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument('csv_path')
    parser.add_argument('--out', default='ruin_probability.png')
    args = parser.parse_args()

    fig, ax = plt.subplots(figsize=(8, 5))
    for dist, points in load_rows(args.csv_path).items():
        xs = [p[0] for p in points]
        line, = ax.plot(xs, [p[1] for p in points], '-', label=f'{dist}, no investment')
        ax.plot(xs, [p[2] for p in points], '--', color=line.get_color(), label=f'{dist}, Merton investment')
    ax.set_xlabel('initial surplus x')
    ax.set_ylabel('ruin probability within T')
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f'saved {args.out}')


if __name__ == '__main__':
    main()
