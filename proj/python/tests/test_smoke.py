import json
from fractions import Fraction

import pytest

import etpir


def test_capacity_and_rho():
    assert etpir.capacity(2, 3, 2, 1) == Fraction(4, 9)
    assert etpir.rho_min(2, 3, 2, 1) == Fraction(3, 4)
    # E >= T leaves one download per server.
    assert etpir.capacity(2, 3, 1, 2) == Fraction(1, 3)


def test_counts():
    c = etpir.counts(2, 5, 3, 2)
    assert c["total_downloads"] == 20
    assert c["D_n"] == 4


@pytest.mark.parametrize("tcp", [False, True])
@pytest.mark.parametrize(
    "params", [(2, 3, 2, 1, etpir.DEFAULT_MODULUS), (2, 5, 3, 2, etpir.DEFAULT_MODULUS), (2, 3, 1, 2, 5)]
)
def test_retrieve_roundtrip(params, tcp):
    w = etpir.random_messages(*params, seed=4)
    for k in range(1, params[0] + 1):
        out = etpir.retrieve(*params, w, k, seed=9, tcp=tcp)
        assert out["message"] == w[k - 1]


def test_audit_passes():
    report = etpir.audit(2, 3, 2, 1, trials=20)
    assert report["pass"] is True
    assert report["schema"] == "report_v1"


def test_invalid_params_raise():
    with pytest.raises(ValueError):
        etpir.counts(2, 3, 3, 1)


def test_cli_in_process():
    code, out, _ = etpir.cli("capacity", "-K", 2, "-N", 3, "-T", 2, "-E", 1)
    assert code == 0
    assert json.loads(out)["capacity"] == "4/9"
    assert etpir.cli("nope")[0] == 2
