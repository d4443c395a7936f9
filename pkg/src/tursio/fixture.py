"""Deterministic credit-union sample database.

Five tables (MEMBER, MEMBER_ACCOUNT, LOAN, CARD, TRANSACTION) written as a
CSV directory plus a manifest that records the seeded ground truth: primary
keys, the four foreign keys, deliberately planted decoy inclusions, and PII
columns.  ``close_date`` appears in exactly MEMBER_ACCOUNT, LOAN and CARD,
so the same ambiguous term resolves differently per annotation.

Generation is fully driven by one seeded RNG; the same seed regenerates
byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os
import random
from datetime import date, timedelta
from typing import List

DEFAULT_SEED = 42

_FIRST_NAMES = [
    "Alice", "Ben", "Carla", "Deepak", "Elena", "Frank", "Grace", "Hamid",
    "Ingrid", "Jorge", "Kira", "Liam", "Mona", "Noah", "Olga", "Pedro",
    "Quinn", "Rosa", "Sam", "Tara", "Uma", "Victor", "Wendy", "Xavier",
    "Yara", "Zane",
]
_LAST_NAMES = [
    "Adams", "Baker", "Chen", "Diaz", "Evans", "Flores", "Garcia", "Hansen",
    "Ito", "Jones", "Kim", "Lopez", "Mehta", "Nguyen", "Olsen", "Patel",
    "Quist", "Rivera", "Smith", "Tran", "Ueda", "Vargas", "Wong", "Young",
    "Zhang",
]
_CITIES = ["Bellevue", "Tacoma", "Spokane", "Everett", "Olympia", "Yakima",
           "Renton", "Kent"]
_PRODUCTS = ["checking", "savings", "money market", "certificate", "ira"]
_STATUS_CODES = ["GOLD", "SILVER", "BASIC"]
_CARD_TYPES = ["GOLD", "SILVER", "BASIC", "PLATINUM"]
_LOAN_STATUS = ["ACTIVE", "PAID", "VOID"]
_TXN_TYPES = ["deposit", "withdrawal", "fee", "transfer"]
_CREDIT_LIMITS = ["500.00", "1000.00", "2500.00", "5000.00", "10000.00"]

MEMBER_ROWS = 1200
ACCOUNT_ROWS = 1500
LOAN_ROWS = 500
CARD_ROWS = 400
TXN_ROWS = 4000


def _rand_date(rng: random.Random, start: date, end: date) -> str:
    span = (end - start).days
    return (start + timedelta(days=rng.randint(0, span))).isoformat()


def _amount(rng: random.Random, lo: float, hi: float) -> str:
    return f"{rng.uniform(lo, hi):.2f}"


def _write_csv(directory: str, table: str, header: List[str], rows: List[list]) -> None:
    path = os.path.join(directory, table + ".csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def generate_fixture(directory: str, seed: int = DEFAULT_SEED) -> dict:
    """Write the CSV directory and manifest.json; returns the manifest."""
    os.makedirs(directory, exist_ok=True)
    rng = random.Random(seed)

    # MEMBER ----------------------------------------------------------------
    member_rows = []
    for member_id in range(1, MEMBER_ROWS + 1):
        first = rng.choice(_FIRST_NAMES)
        last = rng.choice(_LAST_NAMES)
        # a sliver of missing contact data keeps these columns off the key list
        ssn = "" if rng.random() < 0.02 else \
            f"{rng.randint(100, 899):03d}-{rng.randint(10, 99):02d}-{rng.randint(1000, 9999):04d}"
        email = "" if rng.random() < 0.03 else \
            f"{first.lower()}.{last.lower()}{member_id}@example.com"
        phone = "" if rng.random() < 0.03 else f"+1425{rng.randint(1000000, 9999999)}"
        member_rows.append([
            member_id, first, last, ssn, email, phone,
            _rand_date(rng, date(2010, 1, 1), date(2023, 12, 31)),
            rng.choice(_CITIES),
            rng.randint(300, 850),
        ])
    _write_csv(directory, "MEMBER", [
        "member_id", "first_name", "last_name", "ssn", "email", "phone",
        "join_date", "city", "credit_score"], member_rows)

    # MEMBER_ACCOUNT --------------------------------------------------------
    account_ids = list(range(5001, 5001 + ACCOUNT_ROWS))
    account_rows = []
    for account_id in account_ids:
        open_date = _rand_date(rng, date(2015, 1, 1), date(2024, 6, 30))
        closed = rng.random() < 0.30
        close_date = _rand_date(rng, date(2023, 1, 1), date(2025, 6, 30)) if closed else ""
        if close_date and close_date < open_date:
            close_date, open_date = open_date, close_date
        account_rows.append([
            account_id,
            rng.randint(1, MEMBER_ROWS),
            rng.choice(_PRODUCTS),
            open_date,
            close_date,
            _amount(rng, 0, 20000),
            rng.choice(_STATUS_CODES),
            rng.randint(1, 3),  # decoy: values included in MEMBER.member_id
        ])
    _write_csv(directory, "MEMBER_ACCOUNT", [
        "account_id", "member_id", "product_category", "open_date",
        "close_date", "balance", "status", "region_code"], account_rows)

    # LOAN ------------------------------------------------------------------
    loan_rows = []
    for loan_id in range(40001, 40001 + LOAN_ROWS):
        open_date = _rand_date(rng, date(2018, 1, 1), date(2024, 12, 31))
        closed = rng.random() < 0.20
        close_date = _rand_date(rng, date(2023, 1, 1), date(2025, 6, 30)) if closed else ""
        if close_date and close_date < open_date:
            close_date, open_date = open_date, close_date
        delinquent = 0 if rng.random() < 0.70 else rng.randint(1, 180)
        loan_rows.append([
            loan_id,
            rng.choice(account_ids),
            _amount(rng, 500, 50000),
            delinquent,
            open_date,
            close_date,
            rng.choice(_LOAN_STATUS),
        ])
    _write_csv(directory, "LOAN", [
        "loan_id", "account_id", "amount", "delinquent_days", "open_date",
        "close_date", "status"], loan_rows)

    # CARD ------------------------------------------------------------------
    card_rows = []
    for card_id in range(20001, 20001 + CARD_ROWS):
        open_date = _rand_date(rng, date(2018, 1, 1), date(2024, 12, 31))
        closed = rng.random() < 0.25
        close_date = _rand_date(rng, date(2023, 1, 1), date(2025, 6, 30)) if closed else ""
        if close_date and close_date < open_date:
            close_date, open_date = open_date, close_date
        card_rows.append([
            card_id,
            rng.choice(account_ids),
            rng.choice(_CARD_TYPES),
            open_date,
            close_date,
            rng.choice(_CREDIT_LIMITS),
        ])
    _write_csv(directory, "CARD", [
        "card_id", "account_id", "card_type", "open_date", "close_date",
        "credit_limit"], card_rows)

    # TRANSACTION -----------------------------------------------------------
    txn_rows = []
    for txn_id in range(100001, 100001 + TXN_ROWS):
        txn_rows.append([
            txn_id,
            rng.choice(account_ids),
            _rand_date(rng, date(2024, 1, 1), date(2025, 6, 30)),
            _amount(rng, -2000, 2000),
            rng.choice(_TXN_TYPES),
        ])
    _write_csv(directory, "TRANSACTION", [
        "txn_id", "account_id", "txn_date", "txn_amount", "txn_type"], txn_rows)

    manifest = {
        "seed": seed,
        "tables": {
            "MEMBER": {"rows": MEMBER_ROWS, "primary_key": ["member_id"]},
            "MEMBER_ACCOUNT": {"rows": ACCOUNT_ROWS, "primary_key": ["account_id"]},
            "LOAN": {"rows": LOAN_ROWS, "primary_key": ["loan_id"]},
            "CARD": {"rows": CARD_ROWS, "primary_key": ["card_id"]},
            "TRANSACTION": {"rows": TXN_ROWS, "primary_key": ["txn_id"]},
        },
        "foreign_keys": [
            {"fk_table": "MEMBER_ACCOUNT", "fk_column": "member_id",
             "pk_table": "MEMBER", "pk_column": "member_id"},
            {"fk_table": "LOAN", "fk_column": "account_id",
             "pk_table": "MEMBER_ACCOUNT", "pk_column": "account_id"},
            {"fk_table": "CARD", "fk_column": "account_id",
             "pk_table": "MEMBER_ACCOUNT", "pk_column": "account_id"},
            {"fk_table": "TRANSACTION", "fk_column": "account_id",
             "pk_table": "MEMBER_ACCOUNT", "pk_column": "account_id"},
        ],
        "decoys": [
            {"fk_table": "MEMBER_ACCOUNT", "fk_column": "region_code",
             "pk_table": "MEMBER", "pk_column": "member_id",
             "note": "full value inclusion, no name evidence"},
            {"fk_table": "MEMBER_ACCOUNT", "fk_column": "status",
             "pk_table": "CARD", "pk_column": "card_type",
             "note": "status codes are a subset of the card_type domain"},
        ],
        "pii_columns": [
            {"table": "MEMBER", "column": "ssn"},
            {"table": "MEMBER", "column": "email"},
            {"table": "MEMBER", "column": "phone"},
        ],
        "close_date_tables": ["MEMBER_ACCOUNT", "LOAN", "CARD"],
    }
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_manifest(directory: str) -> dict:
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        return json.load(fh)
