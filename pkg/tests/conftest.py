"""Shared fixtures: the reference SKU 538100 sales history (a smartphone
accessory sold on a large marketplace, Feb/Mar 2021) and helpers to spin
up small sales files."""

from __future__ import annotations

import json
from datetime import date, timedelta

import pytest

from stockcast.demand import SalesSeries

SKU_538100 = 538100

FEB_538100 = [0, 0, 2, 1, 2, 0, 0, 0, 0, 1, 0, 2, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 2, 1, 0, 0, 1, 1]

MAR_538100 = [0, 1, 2, 0, 0, 0, 1, 0, 1, 0, 3, 1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 0, 0, 2, 0, 1, 0, 1, 2, 3, 4]

# (initial stock m, stockout day u) pairs implied by the March history
PAIRS_538100 = [
    (1, 2), (3, 3), (4, 7), (5, 9), (8, 11), (9, 12), (10, 15), (11, 17),
    (12, 18), (14, 24), (15, 26), (16, 28), (18, 29), (21, 30), (25, 31),
]


def series_from(values, sku=SKU_538100, start=date(2021, 2, 1)) -> SalesSeries:
    days = tuple((start + timedelta(days=i), int(q)) for i, q in enumerate(values))
    return SalesSeries(sku=sku, days=days)


@pytest.fixture
def feb_series() -> SalesSeries:
    return series_from(FEB_538100, start=date(2021, 2, 1))


@pytest.fixture
def mar_series() -> SalesSeries:
    return series_from(MAR_538100, start=date(2021, 3, 1))


def write_jsonl(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row) + "\n")


def sku_rows(sku, start: date, values):
    return [
        {
            "sku": sku,
            "date": (start + timedelta(days=i)).isoformat(),
            "sold_quantity": int(q),
        }
        for i, q in enumerate(values)
    ]


@pytest.fixture
def ref_sales_file(tmp_path):
    """JSONL file holding the reference SKU's two months."""
    path = tmp_path / "sales.jsonl"
    rows = sku_rows(SKU_538100, date(2021, 2, 1), FEB_538100) + sku_rows(
        SKU_538100, date(2021, 3, 1), MAR_538100
    )
    write_jsonl(path, rows)
    return path
