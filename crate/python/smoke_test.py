"""Smoke test for the qotp_lab_py extension module.

Build and install first, from the repository root:

    pip install maturin
    maturin develop --release -m crates/qotp-lab-py/Cargo.toml

then run `python python/smoke_test.py`.
"""

import json

import qotp_lab_py as q


def check_paulis():
    p = q.Pauli("+XZI")
    assert p.n == 3 and p.weight == 2
    assert str(p * q.Pauli("+ZZI")) == "-iYII"
    assert not q.Pauli("+XI").commutes_with(q.Pauli("+ZI"))
    assert str(q.Pauli("+XI").conjugated("H", [0])) == "+ZI"
    assert str(q.Pauli("+XI").conjugated("CNOT", [0, 1])) == "+XX"
    dense = q.Pauli("+Y").to_dense()
    assert dense[0][1] == -1j and dense[1][0] == 1j


def check_traps():
    fam = q.TrapFamily("steane")
    assert fam.block_len == 21 and fam.distance == 3
    trap = fam.sample(7)
    assert len(trap) == 21 and len(trap.stabilizers()) == 20
    assert trap.classify(q.Pauli.identity(21)) == "trivial_accept"
    nontrivial, accepted, total = fam.exact_letter_counts("X", 7)
    assert (nontrivial, accepted, total) == (246, 492, 116280)
    est = fam.estimate_security(q.Pauli("+" + "X" * 3 + "I" * 18), 20000, seed=1)
    assert est["ci_hi"] < est["bound"], est


def check_mac():
    best, worst = q.forgery_odds(8, 3, 5)
    assert best == worst == 2.0**-8


def check_driver():
    assert "trap-security" in q.commands()
    config = {"command": "twirl-check", "seed": 4, "samples": {"unitaries": 3}}
    first = q.run_experiment(json.dumps(config))
    assert first == q.run_experiment(json.dumps(config))
    report = json.loads(first)
    assert report["pass"] and all(c["pass"] for c in report["checks"])
    try:
        q.run_experiment('{"command": "warp-drive"}')
    except ValueError:
        pass
    else:
        raise AssertionError("unknown command accepted")


if __name__ == "__main__":
    check_paulis()
    check_traps()
    check_mac()
    check_driver()
    print("smoke test passed")
