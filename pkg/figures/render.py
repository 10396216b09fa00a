#!/usr/bin/env python3
"""Render a paper figure from sweep CSVs, driven by a recipe file.

Usage: figures/render.py --recipe <path>

The recipe uses the same `key = value` line format as the sweep configs
(# comments, unknown keys rejected, all errors reported with line
numbers).  Keys:

    kind    one of seff-vs-ka | ebn0-vs-ka | missrate-vs-ka   (required)
    csv     input CSV path(s), comma separated, relative to the
            recipe file                                       (required)
    out     output image path, relative to the recipe file    (required)
    series  grouping column; one curve per distinct value     (required)
    ycol    y column override (default depends on kind)
    xlabel, ylabel, title   axis/figure labels

Every plotted value appears verbatim in the CSV: this script only
groups, sorts, and truncates.  Rows whose status column is not "ok"
truncate the curve at that abscissa (the paper's collapse-to-zero
convention); they are never plotted.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

KINDS = {
    # kind: (x column, default y column, log-scale y)
    "seff-vs-ka": ("K_a", "S_eff", False),
    "ebn0-vs-ka": ("K_a", "ebn0_db", False),
    "missrate-vs-ka": ("K_a", "p_miss_slot", True),
}


class RecipeError(Exception):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class FigureRecipe:
    kind: str
    csv_paths: tuple[str, ...]
    out: str
    series: str
    ycol: str
    xlabel: str
    ylabel: str
    title: str


def parse_recipe(text: str, base_dir: str = ".") -> FigureRecipe:
    """Parse the key = value recipe; collect all errors with line numbers."""
    keys: dict[str, str] = {}
    errors: list[str] = []
    known = {"kind", "csv", "out", "series", "ycol", "xlabel", "ylabel", "title"}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected key = value, got {line!r}")
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            errors.append(f"line {lineno}: unknown key {key!r}")
        elif key in keys:
            errors.append(f"line {lineno}: duplicate key {key!r}")
        else:
            keys[key] = value
    for req in ("kind", "csv", "out", "series"):
        if req not in keys:
            errors.append(f"missing required key {req!r}")
    if "kind" in keys and keys["kind"] not in KINDS:
        errors.append(
            f"unknown kind {keys['kind']!r}; expected one of {sorted(KINDS)}"
        )
    if errors:
        raise RecipeError(errors)
    default_y = KINDS[keys["kind"]][1]
    paths = tuple(
        os.path.normpath(os.path.join(base_dir, p.strip()))
        for p in keys["csv"].split(",")
        if p.strip()
    )
    return FigureRecipe(
        kind=keys["kind"],
        csv_paths=paths,
        out=os.path.normpath(os.path.join(base_dir, keys["out"])),
        series=keys["series"],
        ycol=keys.get("ycol", default_y),
        xlabel=keys.get("xlabel", KINDS[keys["kind"]][0]),
        ylabel=keys.get("ylabel", keys.get("ycol", default_y)),
        title=keys.get("title", ""),
    )


def load_rows(recipe: FigureRecipe) -> list[dict[str, str]]:
    """Read and concatenate the input CSVs, checking referenced columns."""
    xcol = KINDS[recipe.kind][0]
    rows: list[dict[str, str]] = []
    for path in recipe.csv_paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in (xcol, recipe.ycol, recipe.series, "status")
                       if c not in header]
            if missing:
                raise RecipeError(
                    [f"{path}: missing column(s) {missing}; "
                     f"available: {header}"]
                )
            rows.extend(reader)
    if not any(r["status"] == "ok" for r in rows):
        raise RecipeError([f"no rows with status ok in {list(recipe.csv_paths)}"])
    return rows


def group_series(recipe: FigureRecipe, rows: list[dict[str, str]]):
    """One (label, xs, ys) per series value, sorted by x, truncated at the
    first non-ok row."""
    xcol = KINDS[recipe.kind][0]
    labels = []
    for r in rows:
        if r[recipe.series] not in labels:  # CSV order, deterministic
            labels.append(r[recipe.series])
    curves = []
    for label in labels:
        sub = sorted(
            (r for r in rows if r[recipe.series] == label),
            key=lambda r: float(r[xcol]),
        )
        xs, ys = [], []
        for r in sub:
            if r["status"] != "ok":
                break  # curve truncation
            xs.append(float(r[xcol]))
            ys.append(float(r[recipe.ycol]))
        if xs:
            curves.append((label, xs, ys))
    return curves


def render(recipe: FigureRecipe) -> str:
    """Render the recipe to its output image; returns the output path."""
    rows = load_rows(recipe)
    curves = group_series(recipe, rows)
    if not curves:
        raise RecipeError(["every series truncates before its first point"])
    logy = KINDS[recipe.kind][2]
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    markers = ["o", "s", "^", "v", "D", "x", "+", "*"]
    for i, (label, xs, ys) in enumerate(curves):
        ax.plot(xs, ys, marker=markers[i % len(markers)],
                label=f"{recipe.series}={label}")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(recipe.xlabel)
    ax.set_ylabel(recipe.ylabel)
    if recipe.title:
        ax.set_title(recipe.title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out_dir = os.path.dirname(recipe.out)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    fig.savefig(recipe.out)
    plt.close(fig)
    return recipe.out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--recipe", required=True, help="recipe file path")
    args = parser.parse_args(argv)
    try:
        with open(args.recipe) as fh:
            text = fh.read()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        recipe = parse_recipe(text, base_dir=os.path.dirname(args.recipe) or ".")
        out = render(recipe)
    except RecipeError as e:
        for msg in e.errors:
            print(f"recipe error: {msg}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
