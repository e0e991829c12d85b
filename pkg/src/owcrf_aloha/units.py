"""dB / dBm conversions. Every unit crossing in the package goes through here."""

import numpy as np


def db_to_linear(value_db):
    return np.power(10.0, np.asarray(value_db, dtype=float) / 10.0)[()]


def linear_to_db(value):
    with np.errstate(divide="ignore"):
        return (10.0 * np.log10(np.asarray(value, dtype=float)))[()]


def dbm_to_watt(value_dbm):
    return db_to_linear(value_dbm) * 1e-3


def watt_to_dbm(value_w):
    return linear_to_db(np.asarray(value_w, dtype=float) * 1e3)
